"""Command-line interface.

Exit codes: 0 ok, 2 rank ambiguity, 3 unstable dimension, 4 I/O, 5 validation
(bad arguments, malformed input, failed verification).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .closed_forms import PSD_TOL, library_for_word, psd_region, write_region_csv
from .commutant import (
    RESIDUAL_TOL,
    algebra_closure,
    check_invariance,
    commutant_basis,
    recognize_basis,
)
from .errors import TensorCommutantError
from .matrix_core import MAX_DIM, RankPolicy, matrix_from_json, matrix_to_json
from .symmetry import parse_word
from .twirl import convergence_report, mc_twirl

log = logging.getLogger("tensorcommutant")

EXIT_OK = 0
EXIT_IO = 4
EXIT_VALIDATION = 5


class _Parser(argparse.ArgumentParser):
    # argparse's default exit status 2 collides with the rank-ambiguity code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _keyval(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected VAR=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def _dims(pairs) -> dict:
    out = {}
    for k, v in pairs or []:
        try:
            out[k] = int(v)
        except ValueError:
            raise argparse.ArgumentTypeError(f"dimension for {k} must be an integer, got {v!r}") from None
    return out


def _config(args) -> dict:
    """Reproducibility header: every option that influences the artifact."""
    cfg = {"command": args.command, "version": __version__}
    for key, value in sorted(vars(args).items()):
        if key in ("command", "func", "verbose"):
            continue
        if key in ("dim_pairs", "group_pairs"):
            value = _dims(value) if key == "dim_pairs" else dict(value or [])
            key = key.replace("_pairs", "s")
        cfg[key] = value
    return cfg


def _emit(payload: dict, args, text: str | None = None) -> None:
    if args.format == "text" and text is not None:
        body = text
    else:
        body = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if args.out:
        Path(args.out).write_text(body)
    else:
        sys.stdout.write(body)


def _policy(args) -> RankPolicy:
    return RankPolicy(rel_tol=args.tol, min_gap=args.min_gap)


def _word(args):
    return parse_word(args.word, _dims(args.dim_pairs), dict(args.group_pairs or []))


def _complex_pair(z) -> list:
    return [float(z.real), float(z.imag)]


# --------------------------------------------------------------------------
# subcommands


def commutant_payload(args) -> tuple[dict, str]:
    word = _word(args)
    b = commutant_basis(word, n_samples=args.samples, seed=args.seed, policy=_policy(args))
    full = library_for_word(word)
    lib, dropped = full.independent()
    rec = recognize_basis(b, lib)
    rec.dropped = dropped
    for nm in dropped:
        rec.library_in_span[nm] = b.span_residual(full[nm]) < RESIDUAL_TOL
    flags = []
    if rec.verdict != "exact-span":
        flags.append(f"commutant not spanned by candidate operators ({rec.verdict})")
    if any(spec.group == "orthogonal" for spec in word.vars.values()) and len(word.factors) == 2 and b.dim > 2:
        flags.append(
            f"orthogonal commutant has dimension {b.dim} > 2: the two-parameter family "
            "x*I + y*M⊗M does not exhaust it"
        )
    payload = {
        "config": _config(args),
        "commutant": b.to_dict(),
        "recognition": rec.to_dict(),
        "algebra": algebra_closure(b),
        "flags": flags,
    }
    lines = [
        f"word {word.text}  dims {word.describe()['dims']}  groups {word.describe()['groups']}",
        f"commutant dimension {b.dim}  (D = {b.total_dim}, gap {b.gap:.3e}, residual {b.residual:.2e})",
        f"recognition: {rec.verdict} against {rec.library}",
        "span contains: " + ", ".join(nm for nm, ok in rec.library_in_span.items() if ok),
    ]
    if dropped:
        lines.append(f"dependent candidates dropped: {dropped}")
    lines += [f"FLAG: {f}" for f in flags]
    return payload, "\n".join(lines) + "\n"


def cmd_commutant(args) -> int:
    payload, text = commutant_payload(args)
    _emit(payload, args, text)
    return EXIT_OK


def _read_matrix(path):
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    try:
        return matrix_from_json(json.loads(raw))
    except json.JSONDecodeError as exc:
        raise TensorCommutantError(f"{path}: not valid JSON ({exc})") from exc


def cmd_verify(args) -> int:
    word = _word(args)
    w = _read_matrix(args.matrix)
    res = check_invariance(w, word, trials=args.trials, seed=args.seed)
    ok = res < RESIDUAL_TOL
    payload = {
        "config": _config(args),
        "word": word.text,
        "max_residual": res,
        "threshold": RESIDUAL_TOL,
        "pass": ok,
    }
    verdict = "PASS" if ok else "FAIL"
    _emit(payload, args, f"{verdict}  max residual {res:.3e} (threshold {RESIDUAL_TOL:g})\n")
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_twirl(args) -> int:
    word = _word(args)
    w = _read_matrix(args.matrix)
    basis = None
    if word.total_dim ** 2 <= MAX_DIM:
        basis = commutant_basis(word, seed=args.seed, policy=_policy(args))
    res = mc_twirl(w, word, args.N, seed=args.seed, basis=basis, depth=args.depth)
    payload = {
        "config": _config(args),
        "word": word.text,
        "n_samples": res.n_samples,
        "depth": res.depth,
        "trace_in": _complex_pair(res.trace_in),
        "trace_out": _complex_pair(res.trace_out),
        "mc_error": res.mc_error,
        "output": matrix_to_json(res.output),
    }
    if basis is not None:
        payload["exact"] = matrix_to_json(basis.project(w))
    if args.schedule:
        if basis is None:
            raise TensorCommutantError("convergence table needs an exact basis (word too large)")
        rep = convergence_report(w, word, basis, args.schedule, seed=args.seed, depth=args.depth)
        payload["convergence"] = rep.summary()
        if args.csv:
            with open(args.csv, "w", newline="") as fh:
                cw = csv.writer(fh)
                cw.writerow(["N", "error"])
                for n, e in rep.rows():
                    cw.writerow([n, repr(e)])
    err = "n/a" if res.mc_error is None else f"{res.mc_error:.3e}"
    text = (
        f"twirl of {word.text}: N = {res.n_samples}, depth {res.depth}, "
        f"trace {res.trace_in.real:.6g} -> {res.trace_out.real:.6g}, |MC - exact| = {err}\n"
    )
    _emit(payload, args, text)
    return EXIT_OK


def cmd_region(args) -> int:
    region = psd_region(args.direction, args.dim)
    rows = region.grid(args.lo, args.hi, args.num)
    disagreements = sum(1 for x, y, lam, inside in rows if inside != (lam >= -PSD_TOL))
    payload = {
        "config": _config(args),
        "region": region.to_dict(),
        "grid": {"lo": args.lo, "hi": args.hi, "num": args.num, "disagreements": disagreements},
    }
    csv_path = args.csv or (str(Path(args.out).with_suffix(".csv")) if args.out else None)
    if csv_path:
        write_region_csv(rows, csv_path)
        payload["grid"]["csv"] = csv_path
    text = (
        f"direction {region.direction} (n = {region.n}): PSD iff "
        + " and ".join(region.description)
        + f"  [closed cone; grid disagreements {disagreements}]\n"
    )
    _emit(payload, args, text)
    return EXIT_OK


REPORT_WORDS = [
    ("U,U^H", {"U": 2}, {}),
    ("U,U^H", {"U": 3}, {}),
    ("U,V", {"U": 2, "V": 3}, {}),
    ("U,U", {"U": 3}, {}),
    ("U,U*", {"U": 3}, {}),
    ("U,U,U^H", {"U": 2}, {}),
    ("U,U,U^H", {"U": 3}, {}),
    ("U,U,U", {"U": 2}, {}),
    ("U,U^T", {"U": 2}, {"U": "orthogonal"}),
    ("U,U", {"U": 2}, {"U": "orthogonal"}),
    ("U,U,U,U^H", {"U": 2}, {}),
]


def cmd_report(args) -> int:
    """Commutant dimensions for the reference words plus the positivity cones."""
    rows = []
    for text, dims, groups in REPORT_WORDS:
        word = parse_word(text, dims, groups)
        b = commutant_basis(word, seed=args.seed, policy=_policy(args))
        lib, dropped = library_for_word(word).independent()
        rec = recognize_basis(b, lib)
        rows.append(
            {
                "word": word.text,
                "dims": dims,
                "groups": {v: word.vars[v].group for v in word.var_names},
                "dim": b.dim,
                "gap": None if b.gap == float("inf") else b.gap,
                "residual": b.residual,
                "verdict": rec.verdict,
                "span_contains": [nm for nm, ok in rec.library_in_span.items() if ok],
            }
        )
    regions = []
    for direction, n in (("F", 2), ("F⊗I", 2), ("M⊗M", 2), ("F", 3)):
        reg = psd_region(direction, n)
        grid = reg.grid()
        bad = sum(1 for x, y, lam, inside in grid if inside != (lam >= -PSD_TOL))
        regions.append({"direction": reg.direction, "n": n, "cone": reg.description, "disagreements": bad})
    payload = {"config": _config(args), "commutants": rows, "regions": regions}
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            cw = csv.writer(fh)
            cw.writerow(["word", "dims", "groups", "dim", "gap", "verdict"])
            for r in rows:
                cw.writerow([r["word"], json.dumps(r["dims"]), json.dumps(r["groups"]), r["dim"], repr(r["gap"]), r["verdict"]])
    buf = io.StringIO()
    for r in rows:
        gap = "inf" if r["gap"] is None else f"{r['gap']:.2e}"
        buf.write(f"{r['word']:<12} {json.dumps(r['dims']):<18} dim {r['dim']}  gap {gap}  {r['verdict']}\n")
    for r in regions:
        buf.write(f"region {r['direction']:<5} n={r['n']}: {' and '.join(r['cone'])}  disagreements {r['disagreements']}\n")
    _emit(payload, args, buf.getvalue())
    return EXIT_OK


# --------------------------------------------------------------------------


def _add_common(p, word=True):
    if word:
        p.add_argument("--word", required=True, help='tensor word, e.g. "U,U,U^H"')
        p.add_argument("--dim", dest="dim_pairs", action="append", type=_keyval, metavar="VAR=n",
                       required=True, help="dimension of a variable (repeatable)")
        p.add_argument("--group", dest="group_pairs", action="append", type=_keyval,
                       metavar="VAR=unitary|orthogonal|permutation", help="group of a variable")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10, help="relative kernel cutoff")
    p.add_argument("--min-gap", type=float, default=1e6, help="required spectral gap")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out", help="write the artifact here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tensorcommutant", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("commutant", help="compute and recognize the commutant of a word")
    _add_common(p)
    p.add_argument("--samples", type=int, default=4, help="Haar samples before stability checks")
    p.set_defaults(func=cmd_commutant)

    p = sub.add_parser("verify", help="check that a matrix is invariant under a word")
    _add_common(p)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("matrix", help="matrix JSON file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("twirl", help="Monte-Carlo twirl of a matrix onto the commutant")
    _add_common(p)
    p.add_argument("-N", "--samples", dest="N", type=int, default=1000)
    p.add_argument("--depth", type=int, default=None,
                   help="instances multiplied per term (default: 1 for group words, 16 otherwise)")
    p.add_argument("--schedule", type=lambda s: [int(x) for x in s.split(",")],
                   help="comma-separated sample counts for a convergence table")
    p.add_argument("--csv", help="convergence table CSV (N, error)")
    p.add_argument("matrix", help="matrix JSON file")
    p.set_defaults(func=cmd_twirl)

    p = sub.add_parser("region", help="positivity cone of x*I + y*B")
    _add_common(p, word=False)
    p.add_argument("--direction", required=True, help="F, F⊗I (or FxI), Omega, M⊗M (or MxM)")
    p.add_argument("--dim", type=int, required=True, help="local dimension n")
    p.add_argument("--lo", type=float, default=-2.0)
    p.add_argument("--hi", type=float, default=2.0)
    p.add_argument("--num", type=int, default=21)
    p.add_argument("--csv", help="grid CSV (x, y, min_eigenvalue, inside)")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("report", help="commutant dimensions of the reference words and cones")
    _add_common(p, word=False)
    p.add_argument("--csv", help="summary table CSV")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except TensorCommutantError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except argparse.ArgumentTypeError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
