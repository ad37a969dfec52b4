"""Dense complex matrix kernels.

Every matrix in the package is a 2-D ``numpy.complex128`` array.  This module
adds the validation, size caps and the handful of operations the rest of the
package builds on: Kronecker products, modifiers, the Hilbert-Schmidt inner
product, a checked Hermitian eigendecomposition and Gram-operator kernel
extraction with a spectral-gap guard.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AmbiguousRank,
    DimensionMismatch,
    NoConvergence,
    NotHermitian,
    SizeOverflow,
)

#: largest matrix side length any constructor will produce
MAX_DIM = 4096
HERMITIAN_TOL = 1e-10

MODIFIERS = ("id", "conj", "transpose", "conj_transpose")


def as_cmatrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex128 array."""
    m = np.array(a, dtype=np.complex128)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def identity(n: int) -> np.ndarray:
    check_dim(n)
    return np.eye(n, dtype=np.complex128)


def check_dim(d: int, cap: int = MAX_DIM) -> int:
    if d > cap:
        raise SizeOverflow(f"dimension {d} exceeds cap {cap}")
    return d


def matmul(a, b) -> np.ndarray:
    a = as_cmatrix(a, "a")
    b = as_cmatrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def kron(a, b, cap: int = MAX_DIM) -> np.ndarray:
    a = as_cmatrix(a, "a")
    b = as_cmatrix(b, "b")
    check_dim(a.shape[0] * b.shape[0], cap)
    check_dim(a.shape[1] * b.shape[1], cap)
    return np.kron(a, b)


def kron_all(factors: Iterable, cap: int = MAX_DIM) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for f in factors:
        out = kron(out, f, cap)
    return out


def apply_modifier(a, modifier: str) -> np.ndarray:
    a = as_cmatrix(a)
    if modifier == "id":
        return a.copy()
    if modifier == "conj":
        return a.conj()
    if modifier == "transpose":
        return a.T.copy()
    if modifier == "conj_transpose":
        return a.conj().T
    raise ValueError(f"unknown modifier {modifier!r}; expected one of {MODIFIERS}")


def dagger(a) -> np.ndarray:
    return np.asarray(a).conj().T


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product tr(a^dagger b)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def hs_norm(a) -> float:
    return float(np.linalg.norm(a))


def hermiticity_defect(a) -> float:
    """Relative Frobenius distance ||a - a^dagger|| / ||a|| (0 for a == 0)."""
    a = np.asarray(a)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return 0.0
    return float(np.linalg.norm(a - a.conj().T) / norm)


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and hermiticity_defect(a) <= tol


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def hermitian_eig(a, tol: float = HERMITIAN_TOL) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Raises NotHermitian when the relative anti-Hermitian part exceeds ``tol``
    and NoConvergence when LAPACK fails to converge.
    """
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix is not square: {a.shape}")
    defect = hermiticity_defect(a)
    if defect > tol:
        raise NotHermitian(f"relative Hermiticity defect {defect:.3e} exceeds {tol:g}")
    h = 0.5 * (a + a.conj().T)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return Spectrum(eigenvalues=w, eigenvectors=v)


@dataclass(frozen=True)
class RankPolicy:
    rel_tol: float = 1e-10
    min_gap: float = 1e6


def constraint_gram(rows: Sequence) -> np.ndarray:
    """Accumulate H = sum_i A_i^dagger A_i over constraint row blocks."""
    if not rows:
        raise ValueError("at least one constraint block is required")
    ncols = np.asarray(rows[0]).shape[1]
    h = np.zeros((ncols, ncols), dtype=np.complex128)
    for r in rows:
        r = as_cmatrix(r, "constraint block")
        if r.shape[1] != ncols:
            raise DimensionMismatch(
                f"constraint blocks disagree on column count: {r.shape[1]} vs {ncols}"
            )
        h += r.conj().T @ r
    return h


def nullspace_from_gram(h, policy: RankPolicy = RankPolicy()):
    """Kernel of a positive semidefinite Gram operator.

    Returns ``(basis, gap)`` where ``basis`` has orthonormal columns spanning
    the eigenvectors with eigenvalue at most ``rel_tol * lambda_max`` and
    ``gap`` is the ratio of the smallest kept nonzero eigenvalue to the
    largest discarded one.  Discarded eigenvalues are floored at
    ``eps * lambda_max`` so that the gap stays finite.
    """
    h = as_cmatrix(h, "gram")
    check_dim(h.shape[0])
    spec = hermitian_eig(h)
    w, v = spec.eigenvalues, spec.eigenvectors
    lam_max = float(w[-1]) if w.size else 0.0
    if lam_max <= 0.0:
        return v, float("inf")
    tau = policy.rel_tol * lam_max
    k = int(np.count_nonzero(w <= tau))
    if k == 0 or k == w.size:
        gap = float("inf")
    else:
        floor = lam_max * np.finfo(float).eps
        gap = float(w[k] / max(float(w[k - 1]), floor))
    if gap < policy.min_gap:
        raise AmbiguousRank(
            f"no clean spectral separation: gap {gap:.3e} < {policy.min_gap:.1e} "
            f"around eigenvalue index {k}",
            gap=gap,
            eigenvalues=w,
        )
    return v[:, :k], gap


def joint_nullspace(constraint_rows: Sequence, policy: RankPolicy = RankPolicy()):
    """Orthonormal basis of the joint kernel of several row blocks."""
    return nullspace_from_gram(constraint_gram(constraint_rows), policy)


def matrix_to_json(a) -> dict:
    a = as_cmatrix(a)
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in a.ravel()],
    }


def matrix_from_json(obj) -> np.ndarray:
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed matrix object: {exc}") from exc
    if len(data) != rows * cols:
        raise DimensionMismatch(
            f"matrix data has {len(data)} entries, expected {rows}x{cols}={rows * cols}"
        )
    arr = np.array([complex(re, im) for re, im in data], dtype=np.complex128)
    return as_cmatrix(arr.reshape(rows, cols))
