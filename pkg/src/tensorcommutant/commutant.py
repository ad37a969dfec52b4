"""Numerical commutants of tensor-word symmetries.

The commutant of a word is the joint kernel of the linear maps
W -> gW - Wg over sampled instances g.  With column-stacking vectorization
vec(gW - Wg) = (I (x) g - g^T (x) I) vec(W), so every generator contributes a
block A_g and the kernel is read off the spectrum of sum_g A_g^dagger A_g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .closed_forms import OperatorLibrary
from .errors import (
    BadParams,
    DimensionMismatch,
    InvarianceViolation,
    SizeOverflow,
    StructureViolation,
    UnstableDimension,
)
from .matrix_core import (
    MAX_DIM,
    RankPolicy,
    as_cmatrix,
    matrix_to_json,
    nullspace_from_gram,
)
from .symmetry import (
    STREAM_CHECK,
    STREAM_CONSTRAINT,
    STREAM_VERIFY,
    SymmetryWord,
    instantiate_word,
    sample_assignment,
    structured_assignments,
)

MAX_SAMPLES = 12
VERIFY_SAMPLES = 8
RESIDUAL_TOL = 1e-8
BLOCK_TOL = 1e-9


def commutator_rows(g) -> np.ndarray:
    """Row block I (x) g - g^T (x) I acting on column-stacked vec(W)."""
    g = as_cmatrix(g)
    eye = np.eye(g.shape[0], dtype=np.complex128)
    return np.kron(eye, g) - np.kron(g.T, eye)


def commutator_gram(g) -> np.ndarray:
    """A^dagger A for A = commutator_rows(g), without forming A."""
    g = as_cmatrix(g)
    d = g.shape[0]
    eye = np.eye(d, dtype=np.complex128)
    k = np.kron(g.T, g.conj().T)
    if np.linalg.norm(g.conj().T @ g - eye) < 1e-12:
        h = -(k + k.conj().T)
        h[np.diag_indices_from(h)] += 2.0
        return h
    return (
        np.kron(eye, g.conj().T @ g)
        - k
        - k.conj().T
        + np.kron(g.conj() @ g.T, eye)
    )


def _vec_to_mat(v: np.ndarray, d: int) -> np.ndarray:
    return v.reshape(d, d, order="F")


@dataclass
class CommutantBasis:
    word: SymmetryWord
    total_dim: int
    basis: list
    gap: float
    residual: float
    samples_used: int
    seed: int
    structured_used: int = 0

    @property
    def dim(self) -> int:
        return len(self.basis)

    def coefficients(self, w) -> np.ndarray:
        return np.array([np.vdot(b, w) for b in self.basis])

    def project(self, w) -> np.ndarray:
        out = np.zeros((self.total_dim, self.total_dim), dtype=np.complex128)
        for b in self.basis:
            out += np.vdot(b, w) * b
        return out

    def span_residual(self, w) -> float:
        """||w - P(w)|| / ||w||, the relative distance of w from the span."""
        w = np.asarray(w)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        return float(np.linalg.norm(w - self.project(w)) / nrm)

    def to_dict(self) -> dict:
        d = self.word.describe()
        d.update(
            {
                "total_dim": self.total_dim,
                "dim": self.dim,
                "gap": None if math.isinf(self.gap) else self.gap,
                "residual": self.residual,
                "seed": self.seed,
                "samples_used": self.samples_used,
                "structured_generators": self.structured_used,
                "basis": [matrix_to_json(b) for b in self.basis],
            }
        )
        return d


def _gram_for(word: SymmetryWord, assignments) -> np.ndarray:
    d = word.total_dim
    h = np.zeros((d * d, d * d), dtype=np.complex128)
    for g in assignments:
        h += commutator_gram(instantiate_word(word, g))
    return h


def _present(vecs: np.ndarray, d: int) -> list[np.ndarray]:
    """Readable orthonormal basis of the span of the kernel vectors.

    The first element is the normalized projection of the identity; the rest
    are Gram-Schmidt orthonormalized Hermitian parts (B + B^dagger)/2 and
    (B - B^dagger)/2i of the remaining directions, signed so the largest entry
    is positive.
    """
    k = vecs.shape[1]
    mats = [_vec_to_mat(vecs[:, i], d) for i in range(k)]
    e = np.eye(d, dtype=np.complex128) / math.sqrt(d)
    p = sum(np.vdot(m, e) * m for m in mats)
    out: list[np.ndarray] = []
    if np.linalg.norm(p) > 0.5:
        out.append(p / np.linalg.norm(p))
    candidates = []
    for m in mats:
        candidates.append(0.5 * (m + m.conj().T))
        candidates.append(-0.5j * (m - m.conj().T))
    for c in candidates:
        if len(out) == k:
            break
        r = c.copy()
        for _ in range(2):
            for q in out:
                r -= np.vdot(q, r) * q
        nrm = np.linalg.norm(r)
        if nrm < 1e-6:
            continue
        out.append(r / nrm)
    if len(out) != k:
        raise InvarianceViolation(
            f"basis presentation lost rank: {len(out)} of {k} directions recovered"
        )
    fixed = []
    for b in out:
        flat = b.ravel()
        z = flat[np.argmax(np.abs(flat) - 1e-9 * np.arange(flat.size))]
        sign = np.sign(z.real) if abs(z.real) > 1e-9 * abs(z) else np.sign(z.imag)
        fixed.append(b * sign)
    return fixed


def commutant_basis(
    word: SymmetryWord,
    n_samples: int = 4,
    seed: int = 0,
    policy: RankPolicy = RankPolicy(),
    max_samples: int = MAX_SAMPLES,
    verify_samples: int = VERIFY_SAMPLES,
    use_structured: bool | None = None,
) -> CommutantBasis:
    """Orthonormal basis of {W : gW = Wg for every sampled instance g}.

    The dimension must agree after two extra samples; otherwise the sample
    count escalates by two up to ``max_samples`` and UnstableDimension is
    raised.  The basis is then verified on fresh samples.
    """
    if n_samples < 2:
        raise BadParams("n_samples must be >= 2")
    d = word.total_dim
    if d * d > MAX_DIM:
        raise SizeOverflow(f"vectorized dimension {d * d} exceeds cap {MAX_DIM}")

    if use_structured is None:
        v = word.single_variable()
        use_structured = v is not None and word.vars[v].group == "unitary"
    structured = structured_assignments(word) if use_structured else []
    h = _gram_for(word, structured) if structured else np.zeros((d * d, d * d), dtype=np.complex128)

    def add_samples(h, start, stop):
        return h + _gram_for(
            word, (sample_assignment(word, seed, i, STREAM_CONSTRAINT) for i in range(start, stop))
        )

    n = n_samples
    h = add_samples(h, 0, n)
    vecs, gap = nullspace_from_gram(h, policy)
    dims = [vecs.shape[1]]
    while True:
        h = add_samples(h, n, n + 2)
        vecs, gap = nullspace_from_gram(h, policy)
        dims.append(vecs.shape[1])
        n += 2
        if dims[-1] == dims[-2]:
            break
        if n + 2 > max_samples:
            raise UnstableDimension(
                f"commutant dimension of {word.text} not stable under extra samples: {dims}",
                dims=dims,
            )

    basis = _present(vecs, d)
    residual = 0.0
    for i in range(verify_samples):
        g = instantiate_word(word, sample_assignment(word, seed, i, STREAM_VERIFY))
        for b in basis:
            residual = max(residual, float(np.linalg.norm(g @ b @ g.conj().T - b)))
    if residual > RESIDUAL_TOL:
        raise InvarianceViolation(
            f"computed commutant of {word.text} fails verification: residual {residual:.3e}"
        )
    return CommutantBasis(
        word=word,
        total_dim=d,
        basis=basis,
        gap=gap,
        residual=residual,
        samples_used=n,
        seed=seed,
        structured_used=len(structured),
    )


def check_invariance(w, word: SymmetryWord, trials: int = 50, seed: int = 0) -> float:
    """max ||g W g^dagger - W||_F over Haar trials and the structured generators."""
    w = as_cmatrix(w)
    d = word.total_dim
    if w.shape != (d, d):
        raise DimensionMismatch(f"matrix has shape {w.shape}, word {word.text} needs {(d, d)}")
    worst = 0.0
    assignments = [sample_assignment(word, seed, i, STREAM_CHECK) for i in range(trials)]
    assignments += structured_assignments(word)
    for g in assignments:
        u = instantiate_word(word, g)
        worst = max(worst, float(np.linalg.norm(u @ w @ u.conj().T - w)))
    return worst


# --------------------------------------------------------------------------
# recognition


@dataclass
class ElementFit:
    coefficients: dict
    residual: float


@dataclass
class RecognitionReport:
    elements: list
    verdict: str
    library: list
    library_in_span: dict = field(default_factory=dict)
    dropped: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "library": self.library,
            "dropped_dependent": self.dropped,
            "elements": [
                {
                    "coefficients": {
                        k: [float(c.real), float(c.imag)] for k, c in e.coefficients.items()
                    },
                    "residual": e.residual,
                }
                for e in self.elements
            ],
            "library_in_span": self.library_in_span,
        }


def recognize_basis(b: CommutantBasis, lib: OperatorLibrary, tol: float = RESIDUAL_TOL) -> RecognitionReport:
    """Least-squares fit of each basis element in the library span."""
    if lib.dim != b.total_dim:
        raise DimensionMismatch(f"library dimension {lib.dim} != commutant dimension {b.total_dim}")
    lib.check_independent()
    names = lib.names
    mats = [lib[nm] for nm in names]
    gram = lib.gram()
    elements = []
    for el in b.basis:
        rhs = np.array([np.vdot(m, el) for m in mats])
        c = np.linalg.solve(gram, rhs)
        fit = sum(ci * m for ci, m in zip(c, mats))
        res = float(np.linalg.norm(el - fit) / np.linalg.norm(el))
        elements.append(ElementFit(dict(zip(names, (complex(x) for x in c))), res))
    fits = [e.residual < tol for e in elements]
    if all(fits):
        verdict = "exact-span"
    elif any(fits):
        verdict = "partial"
    else:
        verdict = "unrecognized"
    in_span = {nm: b.span_residual(m) < tol for nm, m in zip(names, mats)}
    return RecognitionReport(elements, verdict, names, in_span)


# --------------------------------------------------------------------------
# block structure


def block_partition(w, outer: int) -> np.ndarray:
    """Grid of inner blocks: result[i, j] is the (i, j) block, 0-based."""
    w = as_cmatrix(w)
    if outer < 1 or w.shape[0] % outer or w.shape[1] % outer:
        raise DimensionMismatch(f"shape {w.shape} not divisible into {outer}x{outer} blocks")
    r, c = w.shape[0] // outer, w.shape[1] // outer
    return w.reshape(outer, r, outer, c).transpose(0, 2, 1, 3)


def _word_kind(word: SymmetryWord) -> tuple[int, int]:
    v = word.single_variable()
    mods = tuple(m for _, m in word.factors)
    if v is None or word.vars[v].group != "unitary":
        raise BadParams("block checks need a single unitary variable")
    if mods == ("id", "conj_transpose"):
        return 2, word.vars[v].dim
    if mods == ("id", "id", "conj_transpose"):
        return 3, word.vars[v].dim
    raise BadParams(f"no block-structure statement for word {word.text}")


@dataclass
class BlockReport:
    kind: int
    n: int
    elements: list  # per element: dict with fitted parameters and max deviation
    offenders: list

    @property
    def passed(self) -> bool:
        return not self.offenders


def check_block_structure(w, word: SymmetryWord, tol: float = BLOCK_TOL) -> dict:
    """Block-level statements for a single operator.

    Two factors: off-diagonal n x n blocks vanish and every diagonal block is
    the same scalar c*I.  Three factors: W_11 = diag(x+y, x, ..., x) (x) I_n and
    W_12 has only its (2,1) sub-block nonzero, equal to y*I_n.  Returns the
    fitted parameters, the worst deviation and a list of offending blocks
    (1-based labels).
    """
    kind, n = _word_kind(word)
    w = as_cmatrix(w)
    if w.shape != (word.total_dim,) * 2:
        raise DimensionMismatch(f"matrix has shape {w.shape}, expected {(word.total_dim,) * 2}")
    scale = max(1.0, float(np.linalg.norm(w)))
    offenders = []
    eye = np.eye(n, dtype=np.complex128)
    blocks = block_partition(w, n)
    if kind == 2:
        c = np.mean([np.trace(blocks[i, i]) for i in range(n)]) / n
        worst = 0.0
        for i in range(n):
            for j in range(n):
                target = c * eye if i == j else 0.0
                dev = float(np.linalg.norm(blocks[i, j] - target))
                worst = max(worst, dev)
                if dev > tol * scale:
                    offenders.append((f"W{i + 1},{j + 1}", dev))
        return {"c": complex(c), "max_deviation": worst, "offenders": offenders}

    w11 = blocks[0, 0]
    w12 = blocks[0, 1]
    sub11 = block_partition(w11, n)
    x = np.trace(sub11[1, 1]) / n
    y = np.trace(sub11[0, 0]) / n - x
    e11 = np.zeros((n, n), dtype=np.complex128)
    e11[0, 0] = 1.0
    e21 = np.zeros((n, n), dtype=np.complex128)
    e21[1, 0] = 1.0
    expect11 = np.kron(x * np.eye(n) + y * e11, eye)
    expect12 = np.kron(e21, y * eye)
    worst = 0.0
    for label, got, expect in (("W1,1", w11, expect11), ("W1,2", w12, expect12)):
        dsub = block_partition(got - expect, n)
        for i in range(n):
            for j in range(n):
                dev = float(np.linalg.norm(dsub[i, j]))
                worst = max(worst, dev)
                if dev > tol * scale:
                    offenders.append((f"{label}[{i + 1},{j + 1}]", dev))
    return {"x": complex(x), "y": complex(y), "max_deviation": worst, "offenders": offenders}


def verify_block_structure(b: CommutantBasis, tol: float = BLOCK_TOL) -> BlockReport:
    """Apply the block statements to every basis element (they are linear, so
    the whole span passes iff the basis does)."""
    kind, n = _word_kind(b.word)
    results = []
    offenders = []
    for idx, el in enumerate(b.basis):
        r = check_block_structure(el, b.word, tol)
        results.append(r)
        offenders += [(idx, lab, mag) for lab, mag in r["offenders"]]
    if offenders:
        raise StructureViolation(
            "block structure violated: "
            + ", ".join(f"element {i} block {lab} ({mag:.2e})" for i, lab, mag in offenders),
            offenders=offenders,
        )
    return BlockReport(kind, n, results, offenders)


# --------------------------------------------------------------------------
# algebra properties


def algebra_closure(b: CommutantBasis) -> dict:
    """Worst relative distances from the span of products, adjoints and I."""
    prod = 0.0
    adj = 0.0
    for bi in b.basis:
        adj = max(adj, b.span_residual(bi.conj().T))
        for bj in b.basis:
            prod = max(prod, b.span_residual(bi @ bj))
    ident = b.span_residual(np.eye(b.total_dim))
    return {"product": prod, "adjoint": adj, "identity": ident}
