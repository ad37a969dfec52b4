"""Twirling onto a commutant: Monte-Carlo Haar averages and exact projection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .commutant import CommutantBasis
from .errors import BadParams, DimensionMismatch
from .matrix_core import as_cmatrix, check_dim
from .symmetry import STREAM_TWIRL, SymmetryWord, is_homomorphic, sample_group_batch, substream

CONVERGED_TOL = 1e-10


class CompensatedSum:
    """Element-wise Neumaier summation of equally shaped arrays."""

    def __init__(self, shape):
        self.total = np.zeros(shape, dtype=np.complex128)
        self._comp = np.zeros(shape, dtype=np.complex128)

    def add(self, term: np.ndarray) -> None:
        # real and imaginary parts are compensated independently
        for part in ("real", "imag"):
            s = getattr(self.total, part)
            c = getattr(self._comp, part)
            x = getattr(term, part)
            t = s + x
            big = np.abs(s) >= np.abs(x)
            c += np.where(big, (s - t) + x, (x - t) + s)
            s[...] = t

    def value(self) -> np.ndarray:
        return self.total + self._comp


@dataclass
class TwirlResult:
    output: np.ndarray
    n_samples: int
    trace_in: complex
    trace_out: complex
    mc_error: float | None = None
    depth: int = 1


#: random-walk length for words whose instances do not form a group
WALK_DEPTH = 16
_CHUNK = 1024


def default_depth(word: SymmetryWord) -> int:
    return 1 if is_homomorphic(word) else WALK_DEPTH


def _batched_kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, p, q = a.shape
    _, r, t = b.shape
    return (a[:, :, None, :, None] * b[:, None, :, None, :]).reshape(n, p * r, q * t)


def _modified(m: np.ndarray, mod: str) -> np.ndarray:
    if mod == "id":
        return m
    if mod == "conj":
        return m.conj()
    if mod == "transpose":
        return np.swapaxes(m, -1, -2)
    return np.swapaxes(m, -1, -2).conj()


def twirl_terms(word: SymmetryWord, seed: int, start: int, stop: int, depth: int = 1) -> np.ndarray:
    """Stack of term operators for sample indices start..stop-1.

    Term i draws ``depth`` independent assignments from its own sub-stream and
    multiplies their instantiations, g_i = g(i, 1) g(i, 2) ... g(i, depth).
    """
    count = stop - start
    draws = {v: [] for v in word.var_names}
    for i in range(start, stop):
        rng = substream(seed, STREAM_TWIRL, i)
        for v in word.var_names:
            spec = word.vars[v]
            draws[v].append(sample_group_batch(spec.group, spec.dim, rng, (depth,)))
    mats = {v: np.array(x) for v, x in draws.items()}  # (count, depth, n, n)
    factors = []
    for v, mod in word.factors:
        m = _modified(mats[v], mod)
        prod = m[:, 0]
        for l in range(1, depth):
            prod = prod @ m[:, l]
        factors.append(prod)
    g = factors[0]
    for f in factors[1:]:
        g = _batched_kron(g, f)
    return g.reshape(count, word.total_dim, word.total_dim)


def mc_twirl(
    w,
    word: SymmetryWord,
    n_samples: int,
    seed: int = 0,
    basis: CommutantBasis | None = None,
    depth: int | None = None,
) -> TwirlResult:
    """Monte-Carlo twirl (1/N) sum_i g_i W g_i^dagger.

    When the word's instances form a group (``depth`` 1) each g_i is a single
    Haar instance.  Otherwise single instances only average W through a
    contracting channel whose fixed points are the commutant but which is not
    a projection, so each g_i is a product of ``depth`` independent instances;
    this samples the generated group, whose commutant is the same, and the
    bias decays geometrically in ``depth``.
    """
    w = as_cmatrix(w)
    d = word.total_dim
    check_dim(d)
    if w.shape != (d, d):
        raise DimensionMismatch(f"matrix has shape {w.shape}, word {word.text} needs {(d, d)}")
    if n_samples < 1:
        raise BadParams("n_samples must be >= 1")
    depth = default_depth(word) if depth is None else int(depth)
    if depth < 1:
        raise BadParams("depth must be >= 1")
    acc = CompensatedSum((d, d))
    for start in range(0, n_samples, _CHUNK):
        g = twirl_terms(word, seed, start, min(n_samples, start + _CHUNK), depth)
        for term in g @ w @ np.swapaxes(g, -1, -2).conj():
            acc.add(term)
    out = acc.value() / n_samples
    err = None
    if basis is not None:
        err = float(np.linalg.norm(out - exact_project(w, basis)))
    return TwirlResult(out, n_samples, complex(np.trace(w)), complex(np.trace(out)), err, depth)


def exact_project(w, b: CommutantBasis) -> np.ndarray:
    """Orthogonal (Hilbert-Schmidt) projection onto the commutant span."""
    w = as_cmatrix(w)
    if w.shape != (b.total_dim, b.total_dim):
        raise DimensionMismatch(f"matrix has shape {w.shape}, basis acts on dimension {b.total_dim}")
    return b.project(w)


@dataclass
class ConvergenceReport:
    schedule: list
    errors: list
    slope: float | None
    converged: bool  # input already invariant: errors vanish, slope undefined

    def rows(self):
        return list(zip(self.schedule, self.errors))

    def summary(self) -> dict:
        return {
            "schedule": self.schedule,
            "errors": self.errors,
            "slope": self.slope,
            "slope_defined": self.slope is not None,
            "already_invariant": self.converged,
        }


def convergence_report(
    w,
    word: SymmetryWord,
    b: CommutantBasis,
    schedule=(100, 1000, 10000),
    seed: int = 0,
    depth: int | None = None,
) -> ConvergenceReport:
    """MC-vs-exact Frobenius error per sample count, with the log-log slope."""
    schedule = [int(n) for n in schedule]
    if len(schedule) < 3 or any(a >= c for a, c in zip(schedule, schedule[1:])):
        raise BadParams("schedule must be strictly ascending with at least 3 points")
    errors = [mc_twirl(w, word, n, seed, b, depth).mc_error for n in schedule]
    if max(errors) < CONVERGED_TOL:
        return ConvergenceReport(schedule, errors, None, True)
    slope = float(np.polyfit(np.log(schedule), np.log(errors), 1)[0])
    if not math.isfinite(slope):
        slope = None
    return ConvergenceReport(schedule, errors, slope, False)
