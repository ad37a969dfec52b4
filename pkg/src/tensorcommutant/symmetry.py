"""Tensor words, Haar sampling and structured generators.

A word such as ``"U,U,U^H"`` names the operator U (x) U (x) U^dagger.  Each
variable carries a group (unitary, orthogonal or permutation) and a
dimension; instantiating the word with concrete matrices gives one symmetry
operator.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import BadParams, DimensionMismatch, DimMissing, ParseError, SizeOverflow
from .matrix_core import MAX_DIM, apply_modifier, as_cmatrix, kron_all

GROUPS = ("unitary", "orthogonal", "permutation")
SUFFIX_TO_MODIFIER = {"": "id", "*": "conj", "^T": "transpose", "^H": "conj_transpose"}
MODIFIER_TO_SUFFIX = {v: k for k, v in SUFFIX_TO_MODIFIER.items()}

# real groups: conjugation is trivial
_REAL_MODIFIER = {"id": "id", "conj": "id", "transpose": "transpose", "conj_transpose": "transpose"}

# sub-stream domains, kept apart so "fresh" samples never reuse constraint draws
STREAM_CONSTRAINT = 0
STREAM_VERIFY = 1
STREAM_TWIRL = 2
STREAM_CHECK = 3

_VAR_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_SUFFIX_RE = re.compile(r"\*|\^T|\^H")


@dataclass(frozen=True)
class VarSpec:
    group: str
    dim: int


@dataclass(frozen=True)
class SymmetryWord:
    factors: tuple  # of (var, modifier)
    vars: Mapping[str, VarSpec] = field(hash=False)

    @property
    def var_names(self) -> list[str]:
        """Variables in order of first appearance."""
        seen: list[str] = []
        for v, _ in self.factors:
            if v not in seen:
                seen.append(v)
        return seen

    @property
    def factor_dims(self) -> list[int]:
        return [self.vars[v].dim for v, _ in self.factors]

    @property
    def total_dim(self) -> int:
        return math.prod(self.factor_dims)

    @property
    def text(self) -> str:
        return ",".join(v + MODIFIER_TO_SUFFIX[m] for v, m in self.factors)

    def single_variable(self) -> str | None:
        names = self.var_names
        return names[0] if len(names) == 1 else None

    def describe(self) -> dict:
        return {
            "word": self.text,
            "dims": {v: self.vars[v].dim for v in self.var_names},
            "groups": {v: self.vars[v].group for v in self.var_names},
        }

    def __str__(self) -> str:
        return self.text


def parse_word(
    text: str,
    dims: Mapping[str, int],
    groups: Mapping[str, str] | None = None,
    cap: int = MAX_DIM,
) -> SymmetryWord:
    """Parse ``FACTOR ("," FACTOR)*`` with ``FACTOR := VAR SUFFIX?``.

    Whitespace around factors is ignored.  Variables missing from ``groups``
    are unitary.  For real groups the modifiers are normalized at parse time
    (``*`` is dropped, ``^H`` becomes ``^T``).
    """
    groups = dict(groups or {})
    factors = []
    pos = 0
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        m = _VAR_RE.match(text, pos)
        if m is None:
            raise ParseError("expected a variable name", pos)
        var = m.group(0)
        pos = m.end()
        s = _SUFFIX_RE.match(text, pos)
        suffix = ""
        if s is not None:
            suffix = s.group(0)
            pos = s.end()
        factors.append((var, SUFFIX_TO_MODIFIER[suffix]))
        while pos < n and text[pos].isspace():
            pos += 1
        if pos == n:
            break
        if text[pos] != ",":
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        pos += 1

    specs: dict[str, VarSpec] = {}
    for var, _ in factors:
        if var in specs:
            continue
        if var not in dims:
            raise DimMissing(f"no dimension given for variable {var!r}")
        d = int(dims[var])
        if d < 1:
            raise BadParams(f"dimension of {var!r} must be positive, got {d}")
        g = groups.get(var, "unitary")
        if g not in GROUPS:
            raise BadParams(f"unknown group {g!r} for {var!r}; expected one of {GROUPS}")
        specs[var] = VarSpec(g, d)

    factors = [
        (v, _REAL_MODIFIER[mod] if specs[v].group != "unitary" else mod) for v, mod in factors
    ]
    word = SymmetryWord(tuple(factors), specs)
    if word.total_dim > cap:
        raise SizeOverflow(f"word {word.text} has total dimension {word.total_dim} > {cap}")
    return word


def check_assignment(word: SymmetryWord, g: Mapping[str, np.ndarray], tol: float = 1e-10) -> None:
    for v in word.var_names:
        if v not in g:
            raise DimensionMismatch(f"no generator supplied for {v!r}")
        m = np.asarray(g[v])
        d = word.vars[v].dim
        if m.shape != (d, d):
            raise DimensionMismatch(f"generator for {v!r} has shape {m.shape}, expected {(d, d)}")
        if np.linalg.norm(m.conj().T @ m - np.eye(d)) > tol:
            raise BadParams(f"generator for {v!r} is not unitary")
        if word.vars[v].group != "unitary" and np.abs(m.imag).max(initial=0.0) > 1e-12:
            raise BadParams(f"generator for real-group variable {v!r} has imaginary entries")


def instantiate_word(word: SymmetryWord, g: Mapping[str, np.ndarray]) -> np.ndarray:
    """Kronecker product of the modified generators, factor by factor."""
    mats = []
    for v, mod in word.factors:
        if v not in g:
            raise DimensionMismatch(f"no generator supplied for {v!r}")
        m = as_cmatrix(g[v])
        d = word.vars[v].dim
        if m.shape != (d, d):
            raise DimensionMismatch(f"generator for {v!r} has shape {m.shape}, expected {(d, d)}")
        mats.append(apply_modifier(m, mod))
    return kron_all(mats)


# --------------------------------------------------------------------------
# sampling


def substream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based (Philox) generator for the sub-stream ``key`` of ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return substream(seed)


def sample_haar_unitary(n: int, seed) -> np.ndarray:
    """Haar unitary from a QR-factored Ginibre matrix with phase-fixed R."""
    if n < 1:
        raise BadParams("n must be >= 1")
    rng = _rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def sample_haar_orthogonal(n: int, seed) -> np.ndarray:
    if n < 1:
        raise BadParams("n must be >= 1")
    rng = _rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    return q.astype(np.complex128)


def sample_permutation(n: int, seed) -> np.ndarray:
    rng = _rng(seed)
    return np.eye(n, dtype=np.complex128)[:, rng.permutation(n)]


def haar_unitary_from_ginibre(z: np.ndarray) -> np.ndarray:
    """Batched Haar unitaries from standard complex Gaussian arrays (..., n, n)."""
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


def haar_orthogonal_from_gaussian(x: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(x)
    return (q * np.sign(np.diagonal(r, axis1=-2, axis2=-1))[..., None, :]).astype(np.complex128)


def sample_group_batch(group: str, n: int, rng: np.random.Generator, shape=()) -> np.ndarray:
    """Array of independent group elements with leading ``shape``."""
    shape = tuple(shape)
    if group == "unitary":
        z = (rng.standard_normal(shape + (n, n)) + 1j * rng.standard_normal(shape + (n, n))) / math.sqrt(2.0)
        return haar_unitary_from_ginibre(z)
    if group == "orthogonal":
        return haar_orthogonal_from_gaussian(rng.standard_normal(shape + (n, n)))
    if group == "permutation":
        count = math.prod(shape)
        eye = np.eye(n, dtype=np.complex128)
        return np.array([eye[:, rng.permutation(n)] for _ in range(count)]).reshape(shape + (n, n))
    raise BadParams(f"unknown group {group!r}")


def is_homomorphic(word: SymmetryWord) -> bool:
    """True when instances of the word form a group.

    That holds when, for every variable, the modifiers are all order-preserving
    (id, conj) or all order-reversing (transpose, conj_transpose).
    """
    for v in word.var_names:
        mods = {m for u, m in word.factors if u == v}
        if not (mods <= {"id", "conj"} or mods <= {"transpose", "conj_transpose"}):
            return False
    return True


_SAMPLERS = {
    "unitary": sample_haar_unitary,
    "orthogonal": sample_haar_orthogonal,
    "permutation": sample_permutation,
}


def sample_assignment(word: SymmetryWord, seed: int, index: int, domain: int = STREAM_CONSTRAINT) -> dict:
    """Independent generator per variable, one sub-stream per (domain, var, index)."""
    out = {}
    for k, v in enumerate(word.var_names):
        spec = word.vars[v]
        out[v] = _SAMPLERS[spec.group](spec.dim, substream(seed, domain, k, index))
    return out


# --------------------------------------------------------------------------
# explicit generators


def unitary_2x2(theta: float, alpha: float, beta: float, phi: float) -> np.ndarray:
    """General 2x2 unitary with determinant exp(i*phi)."""
    c, s = math.cos(theta), math.sin(theta)
    e = lambda t: complex(math.cos(t), math.sin(t))  # noqa: E731
    return np.array(
        [
            [e(alpha) * c, -e(phi - beta) * s],
            [e(beta) * s, e(phi - alpha) * c],
        ],
        dtype=np.complex128,
    )


def permutation_matrix(n: int, i: int, j: int) -> np.ndarray:
    """P_ij: identity with rows i and j (1-based) exchanged."""
    if not (1 <= i <= n and 1 <= j <= n):
        raise BadParams(f"indices ({i}, {j}) out of range for n={n}")
    p = np.eye(n, dtype=np.complex128)
    p[[i - 1, j - 1]] = p[[j - 1, i - 1]]
    return p


def phase_diagonal(thetas) -> np.ndarray:
    return np.diag(np.exp(1j * np.asarray(thetas, dtype=float))).astype(np.complex128)


def phased_permutation(n: int, i: int, j: int, theta1: float, theta2: float) -> np.ndarray:
    """P_ij with column i scaled by e^{i theta1} and column j by e^{i theta2}."""
    if i == j:
        raise BadParams("phased permutation needs i != j")
    p = permutation_matrix(n, i, j)
    p[:, i - 1] *= np.exp(1j * theta1)
    p[:, j - 1] *= np.exp(1j * theta2)
    return p


def _embed(block, n: int) -> np.ndarray:
    k = block.shape[0]
    if n < k:
        raise BadParams(f"need n >= {k}, got {n}")
    out = np.eye(n, dtype=np.complex128)
    out[:k, :k] = block
    return out


def fourier_matrix(n: int) -> np.ndarray:
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return np.exp(2j * np.pi * j * k / n) / math.sqrt(n)


# default distinct angles avoiding multiples of 2*pi
def _default_angles(count: int) -> np.ndarray:
    return np.mod(np.sqrt(2.0) * np.arange(1, count + 1) + 0.1 * np.arange(1, count + 1) ** 2, 2 * np.pi)


def structured_generators(kind: str, n: int, params=None) -> list[np.ndarray]:
    """Exact unitaries used as proof instances.

    kinds: ``permutation`` (params ``(i, j)``; all transpositions if omitted),
    ``phase`` (params: angles; ``diag(1, e^{i t1}, ...)`` with distinct
    default angles if omitted), ``phased_permutation`` (params
    ``(i, j, t1, t2)``), ``proof_U1``, ``proof_U2``, ``proof_U3`` and
    ``uniform_row`` (the Fourier matrix).
    """
    if n < 1:
        raise BadParams("n must be >= 1")
    if kind == "permutation":
        if params is None:
            return [permutation_matrix(n, i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
        i, j = params
        return [permutation_matrix(n, i, j)]
    if kind == "phase":
        if params is None:
            params = np.concatenate([[0.0], _default_angles(n - 1)])
        if len(params) != n:
            raise BadParams(f"phase needs {n} angles, got {len(params)}")
        return [phase_diagonal(params)]
    if kind == "phased_permutation":
        if params is None:
            t = _default_angles(2)
            return [
                phased_permutation(n, i, j, t[0], t[1])
                for i in range(1, n + 1)
                for j in range(i + 1, n + 1)
            ]
        i, j, t1, t2 = params
        return [phased_permutation(n, i, j, t1, t2)]
    if kind == "proof_U1":
        return [_embed(np.array([[0, 1], [1j, 0]]), n)]
    if kind == "proof_U2":
        return [_embed(np.array([[0, 1j], [1, 0]]), n)]
    if kind == "proof_U3":
        return [_embed(np.array([[0, 0, 1], [0, 1, 0], [1j, 0, 0]]), n)]
    if kind == "uniform_row":
        return [fourier_matrix(n)]
    raise BadParams(f"unknown structured generator kind {kind!r}")


def structured_set(group: str, n: int) -> list[np.ndarray]:
    """Every exact generator available for a variable of this group and size."""
    if n == 1:
        return [] if group != "unitary" else structured_generators("phase", 1, [0.7])
    if group == "unitary":
        kinds = ["permutation", "phase", "phased_permutation", "proof_U1", "proof_U2", "uniform_row"]
        if n >= 3:
            kinds.append("proof_U3")
        return [g for k in kinds for g in structured_generators(k, n)]
    if group == "orthogonal":
        out = structured_generators("permutation", n)
        out += [np.diag(np.where(np.arange(n) == k, -1.0, 1.0)).astype(np.complex128) for k in range(n)]
        if n == 2:
            r = 1 / math.sqrt(2.0)
            out += [
                np.array([[r, -r], [r, r]], dtype=np.complex128),
                np.array([[r, r], [r, -r]], dtype=np.complex128),
            ]
        return out
    if group == "permutation":
        cycle = np.eye(n, dtype=np.complex128)[:, np.roll(np.arange(n), 1)]
        return structured_generators("permutation", n) + [cycle]
    raise BadParams(f"unknown group {group!r}")


def structured_assignments(word: SymmetryWord) -> list[dict]:
    """Structured generator on one variable at a time, identity elsewhere."""
    out = []
    for v in word.var_names:
        spec = word.vars[v]
        for m in structured_set(spec.group, spec.dim):
            g = {u: np.eye(word.vars[u].dim, dtype=np.complex128) for u in word.var_names}
            g[v] = m
            out.append(g)
    return out
