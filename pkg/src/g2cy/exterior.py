"""Alternating forms on a finite-dimensional real vector space.

Forms are stored canonically: keys are strictly increasing index tuples
(0-based), zero coefficients are dropped. Scalars are either exact
rationals or floats; mixing promotes to float.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import linalg as la


def basis(n: int, k: int) -> list[tuple[int, ...]]:
    """Index tuples of the standard k-form basis, lexicographic."""
    return list(combinations(range(n), k))


_INDEX_CACHE: dict = {}


def basis_index(n: int, k: int) -> dict[tuple[int, ...], int]:
    key = (n, k)
    if key not in _INDEX_CACHE:
        _INDEX_CACHE[key] = {I: i for i, I in enumerate(basis(n, k))}
    return _INDEX_CACHE[key]


def sort_sign(idx: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sign of the sorting permutation and the sorted tuple; sign 0 on repeats."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return 0, ()
    sign = 1
    # insertion sort counting transpositions
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(idx)


def merge_sign(I: tuple[int, ...], J: tuple[int, ...]) -> int:
    """Sign of e_I ∧ e_J relative to the sorted union; 0 if they overlap."""
    inv = 0
    for i in I:
        for j in J:
            if i == j:
                return 0
            if i > j:
                inv += 1
    return -1 if inv & 1 else 1


def complement(n: int, I: tuple[int, ...]) -> tuple[int, ...]:
    s = set(I)
    return tuple(i for i in range(n) if i not in s)


def _label(I):
    return "".join(str(i + 1) for i in I) if I else "1"


@dataclass(frozen=True, eq=False)
class AltForm:
    """Alternating ``degree``-form on R^dim with canonical sparse storage."""

    dim: int
    degree: int
    coeffs: Mapping[tuple[int, ...], object] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.degree <= self.dim:
            raise ValueError(f"degree {self.degree} out of range for dim {self.dim}")
        clean: dict = {}
        for key, c in dict(self.coeffs).items():
            key = tuple(int(i) for i in key)
            if len(key) != self.degree:
                raise ValueError(f"index {key} has wrong length for degree {self.degree}")
            if any(i < 0 or i >= self.dim for i in key):
                raise ValueError(f"index {key} out of range for dim {self.dim}")
            sign, skey = sort_sign(key)
            if sign == 0 or c == 0:
                continue
            clean[skey] = clean.get(skey, 0) + (c if sign > 0 else -c)
        clean = {k: v for k, v in clean.items() if v != 0}
        object.__setattr__(self, "coeffs", MappingProxyType(clean))

    # construction helpers
    @classmethod
    def _raw(cls, dim: int, degree: int, coeffs: dict) -> "AltForm":
        """Trusted constructor: keys already sorted and in range."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "dim", dim)
        object.__setattr__(obj, "degree", degree)
        object.__setattr__(obj, "coeffs", MappingProxyType({k: v for k, v in coeffs.items() if v != 0}))
        return obj

    @classmethod
    def zero(cls, dim: int, degree: int) -> "AltForm":
        return cls(dim, degree, {})

    @classmethod
    def scalar(cls, dim: int, c) -> "AltForm":
        return cls(dim, 0, {(): c})

    @classmethod
    def mono(cls, dim: int, idx: Sequence[int], c=1) -> "AltForm":
        return cls(dim, len(idx), {tuple(idx): la.q(c) if la.is_exact(c) else c})

    @classmethod
    def from_vector(cls, dim: int, degree: int, vec) -> "AltForm":
        return cls(dim, degree, dict(zip(basis(dim, degree), vec)))

    def to_vector(self, dtype=object) -> np.ndarray:
        out = np.zeros(comb(self.dim, self.degree), dtype=dtype)
        if dtype is object:
            out[:] = 0
        index = basis_index(self.dim, self.degree)
        for k, v in self.coeffs.items():
            out[index[k]] = v
        return out

    def __getitem__(self, idx):
        sign, key = sort_sign(idx)
        if sign == 0:
            return 0
        v = self.coeffs.get(key, 0)
        return v if sign > 0 else -v

    # arithmetic
    def _check(self, other: "AltForm"):
        if not isinstance(other, AltForm):
            raise TypeError("expected an AltForm")
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other: "AltForm") -> "AltForm":
        self._check(other)
        if other.degree != self.degree:
            raise ValueError("cannot add forms of different degree")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return AltForm._raw(self.dim, self.degree, out)

    def __neg__(self) -> "AltForm":
        return AltForm._raw(self.dim, self.degree, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: "AltForm") -> "AltForm":
        return self + (-other)

    def __mul__(self, c) -> "AltForm":
        if isinstance(c, AltForm):
            return wedge(self, c)
        return AltForm._raw(self.dim, self.degree, {k: v * c for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __truediv__(self, c) -> "AltForm":
        if la.is_exact(c):
            c = la.q(c)
        return AltForm._raw(self.dim, self.degree, {k: v / c for k, v in self.coeffs.items()})

    def __xor__(self, other: "AltForm") -> "AltForm":
        return wedge(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AltForm):
            return NotImplemented
        return (self.dim, self.degree) == (other.dim, other.degree) and dict(self.coeffs) == dict(other.coeffs)

    __hash__ = None

    # queries
    def is_zero(self) -> bool:
        return not self.coeffs

    def is_exact(self) -> bool:
        return all(la.is_exact(v) for v in self.coeffs.values())

    def max_abs(self) -> float:
        return la.scalar_abs_max(self.coeffs.values())

    def allclose(self, other: "AltForm", tol: float = 1e-12) -> bool:
        return (self - other).max_abs() <= tol

    def to_float(self) -> "AltForm":
        return AltForm(self.dim, self.degree, {k: float(v) for k, v in self.coeffs.items()})

    def to_exact(self) -> "AltForm":
        return AltForm(self.dim, self.degree, {k: la.q(v) for k, v in self.coeffs.items()})

    def top_coefficient(self):
        if self.degree != self.dim:
            raise ValueError("not a top-degree form")
        return self.coeffs.get(tuple(range(self.dim)), 0)

    def reindex(self, mapping: Sequence[int], new_dim: int) -> "AltForm":
        """Relabel index i as mapping[i] in a space of dimension new_dim."""
        return AltForm(new_dim, self.degree,
                       {tuple(mapping[i] for i in k): v for k, v in self.coeffs.items()})

    def drop_leg(self, i: int) -> "AltForm":
        """Restrict to the hyperplane {e^i = 0}: keep terms without leg i, renumber."""
        keep = [j for j in range(self.dim) if j != i]
        pos = {j: p for p, j in enumerate(keep)}
        return AltForm(self.dim - 1, self.degree,
                       {tuple(pos[j] for j in k): v for k, v in self.coeffs.items() if i not in k})

    def __repr__(self) -> str:
        if not self.coeffs:
            return f"AltForm(dim={self.dim}, degree={self.degree}, 0)"
        terms = " + ".join(f"{v}*e{_label(k)}" for k, v in sorted(self.coeffs.items()))
        return f"AltForm(dim={self.dim}, degree={self.degree}, {terms})"


def e(dim: int, *idx: int) -> AltForm:
    """Monomial e^{i1}∧...∧e^{ik} with exact unit coefficient (0-based indices)."""
    return AltForm.mono(dim, idx, 1)


def unit_vector(dim: int, i: int, exact: bool = True) -> tuple:
    one, zero = (la.q(1), la.q(0)) if exact else (1.0, 0.0)
    return tuple(one if j == i else zero for j in range(dim))


def wedge(a: AltForm, b: AltForm) -> AltForm:
    a._check(b)
    if a.degree + b.degree > a.dim:
        return AltForm.zero(a.dim, a.dim)
    out: dict = {}
    for I, x in a.coeffs.items():
        sI = set(I)
        for J, y in b.coeffs.items():
            if sI.intersection(J):
                continue
            s = merge_sign(I, J)
            K = tuple(sorted(I + J))
            v = x * y
            out[K] = out.get(K, 0) + (v if s > 0 else -v)
    return AltForm._raw(a.dim, a.degree + b.degree, out)


def wedge_all(*forms: AltForm) -> AltForm:
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


def interior(v: Sequence, a: AltForm) -> AltForm:
    """Contraction ι_v a (first slot)."""
    if len(v) != a.dim:
        raise ValueError(f"vector of length {len(v)} does not match dim {a.dim}")
    if a.degree == 0:
        raise ValueError("cannot contract a 0-form")
    out: dict = {}
    for I, x in a.coeffs.items():
        for p, i in enumerate(I):
            vi = v[i]
            if vi == 0:
                continue
            K = I[:p] + I[p + 1:]
            t = vi * x
            out[K] = out.get(K, 0) + (-t if p & 1 else t)
    return AltForm._raw(a.dim, a.degree - 1, out)


def evaluate(a: AltForm, vectors: Sequence[Sequence]):
    """a(v1, ..., vk)."""
    if len(vectors) != a.degree:
        raise ValueError("need exactly degree-many vectors")
    for v in vectors:
        a = interior(v, a)
    return a.coeffs.get((), 0)


def pullback_linear(A, a: AltForm) -> AltForm:
    """Pullback by the linear map A (vectors v ↦ A v): e^i ↦ Σ_j A[i,j] e^j."""
    A = np.asarray(A, dtype=object) if not isinstance(A, np.ndarray) else A
    if A.shape != (a.dim, a.dim):
        raise ValueError(f"matrix shape {A.shape} does not match dim {a.dim}")
    rows = [[(j, A[i, j]) for j in range(a.dim) if A[i, j] != 0] for i in range(a.dim)]
    out: dict = {}
    for I, x in a.coeffs.items():
        terms = {(): x}
        for i in I:
            nxt: dict = {}
            for K, val in terms.items():
                for j, aij in rows[i]:
                    if j in K:
                        continue
                    # insert j keeping K sorted; sign from the number of larger entries passed
                    pos = 0
                    while pos < len(K) and K[pos] < j:
                        pos += 1
                    nk = K[:pos] + (j,) + K[pos:]
                    t = val * aij
                    if (len(K) - pos) & 1:
                        t = -t
                    nxt[nk] = nxt.get(nk, 0) + t
            terms = nxt
        for K, val in terms.items():
            out[K] = out.get(K, 0) + val
    return AltForm._raw(a.dim, a.degree, out)


@dataclass(frozen=True, eq=False)
class BilinearForm:
    """Symmetric bilinear form stored as a read-only matrix."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = self.matrix if isinstance(self.matrix, np.ndarray) else la.matrix(self.matrix)
        if m.shape != (self.dim, self.dim):
            raise ValueError(f"matrix shape {m.shape} does not match dim {self.dim}")
        if la.is_exact_matrix(m):
            m = la.matrix(m, "rational")
        if not la.is_symmetric(m, tol=1e-12 * max(1.0, float(np.max(np.abs(m.astype(float)), initial=0)))):
            raise ValueError("bilinear form is not symmetric")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def euclidean(cls, dim: int, exact: bool = True) -> "BilinearForm":
        return cls(dim, la.identity(dim, exact))

    def __call__(self, u, v):
        return sum(u[i] * self.matrix[i, j] * v[j]
                   for i in range(self.dim) for j in range(self.dim))

    def is_exact(self) -> bool:
        return la.is_exact_matrix(self.matrix)

    def is_positive_definite(self) -> bool:
        return la.is_positive_definite(self.matrix)

    def det(self):
        return la.det(self.matrix)

    def inverse_matrix(self) -> np.ndarray:
        return la.inv(self.matrix)

    def pullback(self, A) -> "BilinearForm":
        A = np.asarray(A)
        return BilinearForm(self.dim, A.T @ self.matrix @ A)

    def __add__(self, other: "BilinearForm") -> "BilinearForm":
        return BilinearForm(self.dim, self.matrix + other.matrix)

    def __mul__(self, c) -> "BilinearForm":
        return BilinearForm(self.dim, self.matrix * c)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, BilinearForm):
            return NotImplemented
        return self.dim == other.dim and bool(np.all(self.matrix == other.matrix))

    __hash__ = None

    def max_abs_diff(self, other: "BilinearForm") -> float:
        d = (self.matrix - other.matrix).astype(float)
        return float(np.max(np.abs(d), initial=0.0))

    def to_float(self) -> "BilinearForm":
        return BilinearForm(self.dim, self.matrix.astype(float))


@dataclass(frozen=True)
class OrientedFrame:
    dim: int
    labels: tuple[str, ...] = ()
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("orientation sign must be +1 or -1")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"e{i + 1}" for i in range(self.dim)))
        if len(self.labels) != self.dim:
            raise ValueError("label count does not match dim")

    def reversed(self) -> "OrientedFrame":
        return OrientedFrame(self.dim, self.labels, -self.sign)


def flat(v: Sequence, g: BilinearForm) -> AltForm:
    if len(v) != g.dim:
        raise ValueError("dimension mismatch")
    if la.det(g.matrix) == 0:
        raise ValueError("degenerate bilinear form")
    m = g.matrix
    return AltForm(g.dim, 1, {(j,): sum(m[j, i] * v[i] for i in range(g.dim)) for j in range(g.dim)})


def sharp(xi: AltForm, g: BilinearForm) -> tuple:
    if xi.degree != 1 or xi.dim != g.dim:
        raise ValueError("sharp needs a 1-form of matching dimension")
    vec = xi.to_vector()
    if not g.is_exact():
        vec = vec.astype(float)
    try:
        return tuple(la.solve(g.matrix, vec))
    except np.linalg.LinAlgError as exc:
        raise ValueError("degenerate bilinear form") from exc


def raise_indices(a: AltForm, ginv: np.ndarray) -> AltForm:
    """Apply the induced inverse metric on Λ^k: components a^I = Σ_K det(ginv[I,K]) a_K."""
    return pullback_linear(ginv, a)


def inner(a: AltForm, b: AltForm, g: BilinearForm):
    """Induced inner product on Λ^k."""
    a._check(b)
    if a.degree != b.degree:
        return 0
    rb = raise_indices(b, g.inverse_matrix())
    return sum((x * rb.coeffs.get(I, 0) for I, x in a.coeffs.items()), 0)


def volume_form(g: BilinearForm, o: OrientedFrame) -> AltForm:
    return AltForm(g.dim, g.dim, {tuple(range(g.dim)): o.sign * la.exact_sqrt(g.det())})


def hodge(a: AltForm, g: BilinearForm, o: OrientedFrame, sqrt_det=None) -> AltForm:
    """Hodge star fixed by *1 = vol and a ∧ *b = <a, b> vol.

    ``sqrt_det`` may be supplied when sqrt(det g) is known in closed form.
    """
    if a.dim != g.dim or o.dim != g.dim:
        raise ValueError("dimension mismatch")
    if not g.is_positive_definite():
        raise ValueError("metric is not positive-definite")
    n = a.dim
    scale = o.sign * (la.exact_sqrt(g.det()) if sqrt_det is None else sqrt_det)
    ra = raise_indices(a, g.inverse_matrix())
    out = {}
    for I, x in ra.coeffs.items():
        Ic = complement(n, I)
        out[Ic] = scale * x * merge_sign(I, Ic)
    return AltForm(n, n - a.degree, out)


def random_form(rng: np.random.Generator, dim: int, degree: int, exact: bool = True,
                density: float = 1.0, denom: int = 4, scale: float = 1.0) -> AltForm:
    """Random form with small rational (or float) coefficients."""
    out = {}
    for I in basis(dim, degree):
        if rng.random() > density:
            continue
        if exact:
            out[I] = la.q(int(rng.integers(-3 * denom, 3 * denom + 1))) / denom
        else:
            out[I] = float(rng.normal()) * scale
    return AltForm(dim, degree, out)


def form_sum(forms: Iterable[AltForm], dim: int, degree: int) -> AltForm:
    out = AltForm.zero(dim, degree)
    for f in forms:
        out = out + f
    return out
