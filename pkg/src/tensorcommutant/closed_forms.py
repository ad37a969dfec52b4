"""Named operators, Werner-type families and their positivity cones."""

from __future__ import annotations

import csv
import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import BadParams, NotHermitian, NotPSD, SingularGram, UnknownOperator, ZeroTrace
from .matrix_core import (
    MAX_DIM,
    as_cmatrix,
    check_dim,
    hermitian_eig,
    is_hermitian,
    kron,
)

PSD_TOL = 1e-10
MAX_FACTORS = 4


def swap_operator(n: int) -> np.ndarray:
    """F_n = sum_ij |i><j| (x) |j><i|."""
    if n < 1:
        raise BadParams("n must be >= 1")
    check_dim(n * n)
    f = np.zeros((n * n, n * n), dtype=np.complex128)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    f[(i * n + j).ravel(), (j * n + i).ravel()] = 1.0
    return f


def omega_projector(n: int) -> np.ndarray:
    """|Omega><Omega| for the unnormalized Omega = sum_i |ii>."""
    if n < 1:
        raise BadParams("n must be >= 1")
    check_dim(n * n)
    omega = np.zeros(n * n, dtype=np.complex128)
    omega[np.arange(n) * (n + 1)] = 1.0
    return np.outer(omega, omega)


M_MATRIX = np.array([[0, 1], [-1, 0]], dtype=np.complex128)


def m_tensor_m() -> np.ndarray:
    return np.kron(M_MATRIX, M_MATRIX)


# --------------------------------------------------------------------------
# permutation operators on k-fold tensor spaces


def parse_cycles(text: str, k: int) -> tuple[int, ...]:
    """Cycle notation such as ``(12)(34)`` or ``(1 3)`` to a 0-based image tuple.

    ``()`` or ``e`` is the identity.  Points are 1-based and at most ``k``.
    """
    if k > MAX_FACTORS:
        raise BadParams(f"permutation operators support at most {MAX_FACTORS} factors")
    image = list(range(k))
    s = text.strip()
    if s in ("", "e", "()"):
        return tuple(image)
    if not re.fullmatch(r"(\(\s*[1-9](\s*,?\s*[1-9])*\s*\))+", s):
        raise BadParams(f"bad cycle notation {text!r}")
    seen: set[int] = set()
    for cyc in re.findall(r"\(([^)]*)\)", s):
        pts = [int(c) - 1 for c in re.findall(r"[1-9]", cyc)]
        for p in pts:
            if p >= k or p in seen:
                raise BadParams(f"bad cycle notation {text!r} for k={k}")
            seen.add(p)
        for a, b in zip(pts, pts[1:] + pts[:1]):
            image[a] = b
    return tuple(image)


def cycle_notation(image: tuple[int, ...]) -> str:
    seen: set[int] = set()
    parts = []
    for start in range(len(image)):
        if start in seen or image[start] == start:
            continue
        cyc = [start]
        seen.add(start)
        nxt = image[start]
        while nxt != start:
            cyc.append(nxt)
            seen.add(nxt)
            nxt = image[nxt]
        parts.append("(" + "".join(str(c + 1) for c in cyc) + ")")
    return "".join(parts) or "()"


def permutation_operator(perm, n: int, k: int | None = None) -> np.ndarray:
    """Operator sending a_1 (x) ... (x) a_k to the product with a_i in slot perm(i).

    ``perm`` is cycle notation or a 0-based image tuple.
    """
    if isinstance(perm, str):
        if k is None:
            raise BadParams("k is required with cycle notation")
        image = parse_cycles(perm, k)
    else:
        image = tuple(int(p) for p in perm)
        k = len(image)
        if sorted(image) != list(range(k)):
            raise BadParams(f"{perm!r} is not a permutation")
    if k > MAX_FACTORS:
        raise BadParams(f"permutation operators support at most {MAX_FACTORS} factors")
    dim = check_dim(n**k)
    idx = np.indices((n,) * k).reshape(k, -1)  # idx[m] = i_m for every input column
    out_idx = np.empty_like(idx)
    for m in range(k):
        out_idx[image[m]] = idx[m]
    rows = np.ravel_multi_index(tuple(out_idx), (n,) * k)
    cols = np.ravel_multi_index(tuple(idx), (n,) * k)
    p = np.zeros((dim, dim), dtype=np.complex128)
    p[rows, cols] = 1.0
    return p


def partial_transpose(a, factor: int, dims) -> np.ndarray:
    """Transpose the tensor factor ``factor`` (0-based) of an operator on prod(dims)."""
    a = as_cmatrix(a)
    k = len(dims)
    t = a.reshape(tuple(dims) * 2)
    axes = list(range(2 * k))
    axes[factor], axes[k + factor] = axes[k + factor], axes[factor]
    return t.transpose(axes).reshape(a.shape)


# --------------------------------------------------------------------------
# operator library


@dataclass
class OperatorLibrary:
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        entries = dict(self.entries)
        self.entries = {}
        for name, m in entries.items():
            self.add(name, m)

    def add(self, name: str, m) -> None:
        if name in self.entries:
            raise BadParams(f"duplicate operator name {name!r}")
        m = as_cmatrix(m, name)
        if m.shape[0] != m.shape[1]:
            raise BadParams(f"operator {name!r} is not square")
        if self.entries and m.shape != self.shape:
            raise BadParams(f"operator {name!r} has shape {m.shape}, library uses {self.shape}")
        self.entries[name] = m

    @property
    def names(self) -> list[str]:
        return list(self.entries)

    @property
    def shape(self):
        return next(iter(self.entries.values())).shape

    @property
    def dim(self) -> int:
        return self.shape[0]

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, name):
        try:
            return self.entries[name]
        except KeyError:
            raise UnknownOperator(f"no operator named {name!r}; have {self.names}") from None

    def gram(self) -> np.ndarray:
        stack = np.array([m.ravel() for m in self.entries.values()])
        return stack.conj() @ stack.T

    def dependent_names(self, rtol: float = 1e-10) -> list[str]:
        """Names that lie in the span of earlier entries (greedy, in order)."""
        kept: list[np.ndarray] = []
        dropped = []
        for name, m in self.entries.items():
            v = m.ravel() / np.linalg.norm(m)
            for q in kept:
                v = v - np.vdot(q, v) * q
            r = np.linalg.norm(v)
            if r < rtol ** 0.5:
                dropped.append(name)
            else:
                kept.append(v / r)
        return dropped

    def independent(self) -> tuple["OperatorLibrary", list[str]]:
        dropped = self.dependent_names()
        keep = {k: v for k, v in self.entries.items() if k not in dropped}
        return OperatorLibrary(keep), dropped

    def check_independent(self) -> None:
        dropped = self.dependent_names()
        if dropped:
            raise SingularGram(
                f"library operators are linearly dependent: {dropped} lie in the span of the others",
                dependent=dropped,
            )


def named_operator(name: str, n: int) -> np.ndarray:
    """Library directions by name: F, F⊗I, Omega, M⊗M (ASCII 'x' accepted for ⊗)."""
    key = name.replace("⊗", "x").replace(" ", "").replace("(x)", "x")
    if key in ("F", "swap"):
        return swap_operator(n)
    if key in ("FxI", "F_I"):
        return kron(swap_operator(n), np.eye(n), MAX_DIM)
    if key in ("Omega", "Ω", "omega"):
        return omega_projector(n)
    if key in ("MxM", "M_M"):
        if n != 2:
            raise BadParams("M⊗M is defined for n = 2 only")
        return m_tensor_m()
    raise UnknownOperator(f"unknown operator {name!r}; expected F, F⊗I, Omega or M⊗M")


def canonical_name(name: str) -> str:
    key = name.replace("⊗", "x").replace(" ", "").replace("(x)", "x")
    return {
        "F": "F", "swap": "F", "FxI": "F⊗I", "F_I": "F⊗I",
        "Omega": "Omega", "Ω": "Omega", "omega": "Omega",
        "MxM": "M⊗M", "M_M": "M⊗M", "I": "I", "identity": "I",
    }.get(key, name)


def library_for_word(word) -> OperatorLibrary:
    """Candidate closed forms for recognizing the commutant of ``word``.

    Identity, every nontrivial permutation of the tensor factors, the
    partial transposes of the transpositions (Omega on a pair of factors) and,
    for two qubit factors, M⊗M.  Only words with a common factor dimension and
    at most four factors get anything beyond the identity.
    """
    dims = word.factor_dims
    k = len(dims)
    lib = OperatorLibrary({"I": np.eye(word.total_dim, dtype=np.complex128)})
    if k > MAX_FACTORS or len(set(dims)) != 1 or k < 2:
        return lib
    n = dims[0]
    for image in itertools.permutations(range(k)):
        if image == tuple(range(k)):
            continue
        if k == 2:
            name = "F"
        elif k == 3 and image == (1, 0, 2):
            name = "F⊗I"
        else:
            name = "P" + cycle_notation(image)
        lib.add(name, permutation_operator(image, n))
    for i, j in itertools.combinations(range(k), 2):
        image = list(range(k))
        image[i], image[j] = j, i
        op = partial_transpose(permutation_operator(tuple(image), n), j, dims)
        lib.add("Omega" if k == 2 else f"Omega({i + 1}{j + 1})", op)
    if k == 2 and n == 2:
        lib.add("M⊗M", m_tensor_m())
    return lib


# --------------------------------------------------------------------------
# families and positivity


@dataclass(frozen=True)
class FamilySpec:
    direction: str
    x: float
    y: float
    base: str = "identity"


def family_matrix(f: FamilySpec, n: int) -> np.ndarray:
    if f.base != "identity":
        raise UnknownOperator(f"unsupported family base {f.base!r}")
    b = named_operator(f.direction, n)
    return f.x * np.eye(b.shape[0], dtype=np.complex128) + f.y * b


@dataclass
class PsdRegion:
    direction: str
    n: int
    eigenvalues: np.ndarray  # distinct eigenvalues of the direction operator
    inequalities: list  # (a, b): a*x + b*y >= 0
    boundary: np.ndarray  # sampled (x, y) boundary points
    notes: list = field(default_factory=list)

    @property
    def description(self) -> list[str]:
        lams = self.eigenvalues
        if lams.size == 2 and np.allclose(lams, [-1.0, 1.0], atol=1e-9):
            return ["x >= |y|"]
        return [f"x {_signed(b)}*y >= 0" for _, b in self.inequalities]

    def contains(self, x: float, y: float, tol: float = PSD_TOL) -> bool:
        return min(a * x + b * y for a, b in self.inequalities) >= -tol

    def min_eigenvalue(self, x: float, y: float) -> float:
        """Closed-form minimum eigenvalue of x*I + y*B from the stored spectrum."""
        return float(min(x + lam * y for lam in (self.eigenvalues[0], self.eigenvalues[-1])))

    def grid(self, lo: float = -2.0, hi: float = 2.0, num: int = 21) -> list[tuple]:
        """(x, y, direct min eigenvalue, inside) on a num x num grid."""
        b = named_operator(self.direction, self.n)
        eye = np.eye(b.shape[0], dtype=np.complex128)
        rows = []
        for x in np.linspace(lo, hi, num):
            for y in np.linspace(lo, hi, num):
                lam = float(hermitian_eig(x * eye + y * b).eigenvalues[0])
                rows.append((float(x), float(y), lam, self.contains(x, y)))
        return rows

    def to_dict(self) -> dict:
        return {
            "direction": canonical_name(self.direction),
            "n": self.n,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "inequalities": [{"x": a, "y": b, "rhs": 0.0} for a, b in self.inequalities],
            "description": self.description,
            "closed": True,
            "boundary": [[float(x), float(y)] for x, y in self.boundary],
            "notes": self.notes,
        }


def _signed(b: float) -> str:
    return f"+ {b:g}" if b >= 0 else f"- {-b:g}"


def psd_region(direction: str, n: int, boundary_points: int = 9) -> PsdRegion:
    """Closed cone of (x, y) with x*I + y*B positive semidefinite.

    Only the extreme eigenvalues of B produce active constraints
    x + lambda*y >= 0; intermediate ones are implied.
    """
    b = named_operator(direction, n)
    if not is_hermitian(b):
        raise NotHermitian(f"direction {direction!r} is not Hermitian")
    w = hermitian_eig(b).eigenvalues
    distinct = _distinct(w)
    lo, hi = distinct[0], distinct[-1]
    ineqs = [(1.0, float(lo))] if lo == hi else [(1.0, float(lo)), (1.0, float(hi))]
    ys = np.linspace(-1.0, 1.0, boundary_points)
    boundary = np.array([(max(-lo * y, -hi * y), y) for y in ys])
    notes = []
    if canonical_name(direction) == "M⊗M":
        notes.append(
            "closed cone reported: boundary states x = |y| are rank-deficient but positive "
            "semidefinite; the strict form x > |y| excludes them"
        )
    return PsdRegion(canonical_name(direction), n, distinct, ineqs, boundary, notes)


def _distinct(w: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    out = [float(w[0])]
    for v in w[1:]:
        if v - out[-1] > tol:
            out.append(float(v))
    return np.array([round(v, 12) + 0.0 for v in out])


def write_region_csv(rows: Iterable[tuple], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "min_eigenvalue", "inside"])
        for x, y, lam, inside in rows:
            w.writerow([repr(x), repr(y), repr(lam), int(inside)])


def normalize_state(w) -> np.ndarray:
    """Trace-normalize a positive semidefinite operator."""
    w = as_cmatrix(w)
    if not is_hermitian(w):
        raise NotHermitian("state must be Hermitian")
    lam = hermitian_eig(w).eigenvalues
    if lam.size and lam[0] < -PSD_TOL:
        raise NotPSD(f"minimum eigenvalue {lam[0]:.3e} < -{PSD_TOL:g}")
    tr = float(np.trace(w).real)
    if tr <= 0.0:
        raise ZeroTrace("state has zero trace")
    return w / tr


def build_library(
    names: Iterable[str], n: int, extra: Mapping | None = None, dim: int | None = None
) -> OperatorLibrary:
    """Library from direction names; ``I`` is sized to match the other entries
    (or to ``dim`` when given, which a library holding only ``I`` needs)."""
    names = [canonical_name(nm) for nm in names]
    mats = {nm: (None if nm == "I" else named_operator(nm, n)) for nm in names}
    mats.update(extra or {})
    sized = [m for m in mats.values() if m is not None]
    if dim is None:
        dim = sized[0].shape[0] if sized else n
    return OperatorLibrary(
        {nm: (np.eye(dim, dtype=np.complex128) if m is None else m) for nm, m in mats.items()}
    )
