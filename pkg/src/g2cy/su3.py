"""SU(3) structures (Omega, omega) on R^6.

Complex 3-forms are carried as real pairs (Re, Im). The Hitchin dual is
built from the endomorphism K_rho (contraction into Λ^5 ≅ V ⊗ Λ^6,
trivialized by e_1..6), with lambda = tr(K^2)/6 and J = K / sqrt(-lambda).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import linalg as la
from .exterior import AltForm, BilinearForm, e, interior, pullback_linear, unit_vector

DIM = 6


class NotStableError(ValueError):
    """The 3-form is not stable of complex type (lambda >= 0)."""


class NotSU3Error(ValueError):
    pass


def cwedge(a: tuple[AltForm, AltForm], b: tuple[AltForm, AltForm]) -> tuple[AltForm, AltForm]:
    """Wedge of complex forms given as (re, im) pairs."""
    return (a[0] ^ b[0]) - (a[1] ^ b[1]), (a[0] ^ b[1]) + (a[1] ^ b[0])


def _cinterior(v, a):
    return interior(v, a[0]), interior(v, a[1])


@dataclass(frozen=True, eq=False)
class SU3Structure:
    re: AltForm
    im: AltForm
    omega: AltForm

    def __post_init__(self):
        for f, k in ((self.re, 3), (self.im, 3), (self.omega, 2)):
            if f.dim != DIM or f.degree != k:
                raise ValueError("SU(3) data must be (3-form, 3-form, 2-form) on R^6")

    @property
    def omega_c(self) -> tuple[AltForm, AltForm]:
        return self.re, self.im

    def conjugate(self) -> "SU3Structure":
        """(conj(Omega), -omega)."""
        return SU3Structure(self.re, -self.im, -self.omega)

    def pullback(self, A) -> "SU3Structure":
        return SU3Structure(pullback_linear(A, self.re), pullback_linear(A, self.im),
                            pullback_linear(A, self.omega))

    def is_exact(self) -> bool:
        return self.re.is_exact() and self.im.is_exact() and self.omega.is_exact()

    def to_float(self) -> "SU3Structure":
        return SU3Structure(self.re.to_float(), self.im.to_float(), self.omega.to_float())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SU3Structure):
            return NotImplemented
        return self.re == other.re and self.im == other.im and self.omega == other.omega

    __hash__ = None

    def max_abs_diff(self, other: "SU3Structure") -> float:
        return max((self.re - other.re).max_abs(), (self.im - other.im).max_abs(),
                   (self.omega - other.omega).max_abs())


@lru_cache(maxsize=None)
def _standard() -> SU3Structure:
    f = lambda i, j: (e(DIM, i), e(DIM, j))  # noqa: E731
    re, im = cwedge(cwedge(f(0, 1), f(2, 3)), f(4, 5))
    omega = e(DIM, 0, 1) + e(DIM, 2, 3) + e(DIM, 4, 5)
    return SU3Structure(re, im, omega)


def standard_su3() -> SU3Structure:
    return _standard()


# ---------------------------------------------------------------------------
# Hitchin dual

@dataclass(frozen=True, eq=False)
class StabilityData:
    K: np.ndarray
    lam: object


def stability_data(rho: AltForm) -> StabilityData:
    if rho.dim != DIM or rho.degree != 3:
        raise ValueError("expected a 3-form on R^6")
    exact = rho.is_exact()
    K = np.empty((DIM, DIM), dtype=object)
    for a in range(DIM):
        beta = interior(unit_vector(DIM, a, exact), rho) ^ rho
        for j in range(DIM):
            c = beta[tuple(k for k in range(DIM) if k != j)]
            K[j, a] = c if j % 2 == 0 else -c
    if exact:
        K = la.matrix(K, "rational")
    else:
        K = K.astype(float)
    lam = np.trace(K @ K) / (la.q(6) if exact else 6.0)
    return StabilityData(K, lam)


def _apply_first_slot(J: np.ndarray, rho: AltForm) -> AltForm:
    """(a, b, c) ↦ rho(J e_a, e_b, e_c), read on sorted triples."""
    out = {}
    for a in range(DIM):
        for b in range(a + 1, DIM):
            for c in range(b + 1, DIM):
                out[(a, b, c)] = sum(J[m, a] * rho[(m, b, c)] for m in range(DIM) if J[m, a] != 0)
    return AltForm(DIM, 3, out)


def _stability_threshold(rho: AltForm) -> float:
    return 1e-10 * max(rho.max_abs(), 1e-300) ** 4


@lru_cache(maxsize=None)
def _dual_sign() -> int:
    s = standard_su3()
    data = stability_data(s.re)
    J = data.K / la.exact_sqrt(-data.lam)
    cand = _apply_first_slot(J, s.re)
    if cand == s.im:
        return 1
    if cand == -s.im:
        return -1
    raise AssertionError("standard pair does not calibrate the Hitchin dual")


def normalized_k(rho: AltForm) -> tuple[np.ndarray, StabilityData]:
    data = stability_data(rho)
    lam = data.lam
    if la.is_exact(lam):
        if lam >= 0:
            raise NotStableError(f"not stable of complex type: lambda = {lam} >= 0")
    elif lam >= -_stability_threshold(rho):
        raise NotStableError(f"not stable of complex type: lambda = {float(lam):.3e}")
    root = la.exact_sqrt(-lam)
    K = data.K if la.is_exact(root) else data.K.astype(float)
    return K / root, data


def hitchin_dual(rho: AltForm) -> tuple[AltForm, StabilityData]:
    """The unique rho_hat with rho + i rho_hat decomposable, calibrated on the standard pair."""
    J, data = normalized_k(rho)
    return _dual_sign() * _apply_first_slot(J, rho), data


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class ConditionResult:
    passed: bool
    residual: float
    note: str = ""


@dataclass(frozen=True)
class SU3Diagnostic:
    conditions: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def failed(self) -> list[str]:
        return [k for k, c in self.conditions.items() if not c.passed]

    def max_residual(self) -> float:
        keys = ("i", "iii", "iv")
        return max(self.conditions[k].residual for k in keys)


def _complex_structure(s: SU3Structure):
    """The endomorphism I (on vectors) for which Omega is (3,0), and the type residual."""
    J, _ = normalized_k(s.re)
    exact = J.dtype == object and s.is_exact()
    best = None
    for sign in (1, -1):
        I = sign * J
        res = 0.0
        for v in range(DIM):
            Iv = tuple(I[:, v])
            # Omega(Iv, ...) = i Omega(v, ...)  <=>  ι_{Iv} Re = -ι_v Im
            d = interior(Iv, s.re) + interior(unit_vector(DIM, v, exact), s.im)
            res = max(res, d.max_abs())
        if best is None or res < best[1]:
            best = (I, res)
    return best


def validate_su3(s: SU3Structure, tol: float | None = None) -> SU3Diagnostic:
    """Check the five defining conditions. Exact data is checked with tol = 0."""
    exact = s.is_exact()
    if tol is None:
        tol = 0.0 if exact else 1e-9
    scale = max(1.0, s.re.max_abs(), s.im.max_abs(), s.omega.max_abs())
    t = tol * scale ** 3
    conds = {}
    omc = s.omega_c
    # (i) Pluecker relations ι_ξ Omega ∧ Omega = 0 for all bivectors ξ
    res_i = 0.0
    for a in range(DIM):
        ia = _cinterior(unit_vector(DIM, a, exact), omc)
        for b in range(a + 1, DIM):
            iba = _cinterior(unit_vector(DIM, b, exact), ia)
            w = cwedge(iba, omc)
            res_i = max(res_i, w[0].max_abs(), w[1].max_abs())
    nonzero = not (s.re.is_zero() and s.im.is_zero())
    conds["i"] = ConditionResult(nonzero and res_i <= t, res_i,
                                 "" if nonzero else "Omega vanishes")
    # (ii) Omega ∧ conj(Omega) = -2i Re∧Im ≠ 0
    top = (s.re ^ s.im)
    val = abs(float(top.top_coefficient()))
    conds["ii"] = ConditionResult(val > t, val)
    # (iii) Re∧Im = (2/3) omega^3
    w3 = s.omega ^ s.omega ^ s.omega
    two_thirds = la.q(2) / 3 if exact else 2.0 / 3.0
    r3 = abs(float((top - w3 * two_thirds).top_coefficient()))
    conds["iii"] = ConditionResult(r3 <= t, r3)
    # (iv) omega ∧ Omega = 0
    r4 = max((s.omega ^ s.re).max_abs(), (s.omega ^ s.im).max_abs())
    conds["iv"] = ConditionResult(r4 <= t, r4)
    # (v) g = omega(., I .) symmetric positive-definite
    try:
        I, type_res = _complex_structure(s)
        g = _metric_matrix(s.omega, I)
        sym = float(np.max(np.abs((g - g.T).astype(float)), initial=0.0))
        if la.is_exact_matrix(g) and sym == 0:
            pd = la.is_positive_definite(g)
            mine = la.min_eigenvalue(g.astype(float))
        else:
            gf = g.astype(float)
            mine = la.min_eigenvalue(gf)
            pd = mine > t
        ok = pd and sym <= t and type_res <= t
        conds["v"] = ConditionResult(ok, mine, f"symmetry {sym:.2e}, type {float(type_res):.2e}")
    except NotStableError as exc:
        conds["v"] = ConditionResult(False, float("nan"), str(exc))
    return SU3Diagnostic(conds)


def _metric_matrix(omega: AltForm, I: np.ndarray) -> np.ndarray:
    """g(u, v) = omega(u, I v) on basis vectors."""
    W = np.empty((DIM, DIM), dtype=object)
    for u in range(DIM):
        for m in range(DIM):
            W[u, m] = omega[(u, m)] if u != m else 0
    G = W @ I
    if I.dtype != object:
        G = G.astype(float)
    return G


def acs_and_metric(s: SU3Structure, tol: float | None = None) -> tuple[np.ndarray, BilinearForm]:
    diag = validate_su3(s, tol)
    if not diag.ok:
        raise NotSU3Error(f"not an SU(3) structure; failed conditions {diag.failed()}")
    I, _ = _complex_structure(s)
    g = _metric_matrix(s.omega, I)
    if la.is_exact_matrix(g):
        g = la.matrix(g, "rational")
    else:
        g = 0.5 * (g + g.T)
    return I, BilinearForm(DIM, g)


def induced_metric(s: SU3Structure) -> BilinearForm:
    """g = omega(., I .) without running the full validation."""
    I, _ = _complex_structure(s)
    g = _metric_matrix(s.omega, I)
    if la.is_exact_matrix(g):
        return BilinearForm(DIM, la.matrix(g, "rational"))
    return BilinearForm(DIM, 0.5 * (g + g.T))


def rescale(s: SU3Structure, a) -> SU3Structure:
    """(a^{3/2} Omega, a omega)."""
    if a <= 0:
        raise ValueError("rescaling factor must be positive")
    a32 = a * la.exact_sqrt(la.q(a) if la.is_exact(a) else a)
    return SU3Structure(s.re * a32, s.im * a32, s.omega * a)


def random_su3(rng: np.random.Generator, exact: bool = True, spread: int = 1) -> tuple[SU3Structure, np.ndarray]:
    """GL+(6) pullback of the standard pair; returns the structure and the matrix."""
    from .g2 import random_gl_plus
    A = random_gl_plus(rng, DIM, exact=exact, spread=spread)
    s = standard_su3()
    if not exact:
        s = s.to_float()
    return s.pullback(A), A


def complex_wedge_check(s: SU3Structure) -> tuple[AltForm, AltForm]:
    """Omega ∧ conj(Omega) as an (re, im) pair."""
    return cwedge(s.omega_c, (s.re, -s.im))


__all__ = ["SU3Structure", "StabilityData", "SU3Diagnostic", "ConditionResult", "standard_su3",
           "validate_su3", "hitchin_dual", "acs_and_metric", "rescale", "stability_data",
           "random_su3", "cwedge", "NotStableError", "NotSU3Error"]
