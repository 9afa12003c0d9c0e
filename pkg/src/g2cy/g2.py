"""G2 structures on R^7: recognition, induced metric, dual 4-form, 2-form splitting."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import linalg as la
from .exterior import (AltForm, BilinearForm, OrientedFrame, basis, basis_index, complement,
                       hodge, inner, interior, merge_sign, raise_indices, unit_vector)


class NotG2Error(ValueError):
    """Raised when a 3-form is not a (positive) G2 form."""


# 0-based version of 123 + 145 + 167 + 246 - 257 - 347 - 356
STD_TERMS = {(0, 1, 2): 1, (0, 3, 4): 1, (0, 5, 6): 1, (1, 3, 5): 1,
             (1, 4, 6): -1, (2, 3, 6): -1, (2, 4, 5): -1}


def standard_phi_form() -> AltForm:
    return AltForm(7, 3, {k: la.q(v) for k, v in STD_TERMS.items()})


@lru_cache(maxsize=None)
def b_table() -> tuple:
    """Sparse cubic table: B_ab = Σ coef φ_I φ_J φ_K over rows (a, b, I, J, K, coef).

    Entry is the e_1..7 coefficient of ι_a e_I ∧ ι_b e_J ∧ e_K.
    """
    idx3 = basis_index(7, 3)
    rows = []
    for a in range(7):
        for b in range(7):
            for I in idx3:
                if a not in I:
                    continue
                pa = I.index(a)
                Ia = I[:pa] + I[pa + 1:]
                for J in idx3:
                    if b not in J:
                        continue
                    pb = J.index(b)
                    Jb = J[:pb] + J[pb + 1:]
                    if set(Ia) & set(Jb):
                        continue
                    s1 = merge_sign(Ia, Jb)
                    L = tuple(sorted(Ia + Jb))
                    K = complement(7, L)
                    s2 = merge_sign(L, K)
                    coef = (-1) ** pa * (-1) ** pb * s1 * s2
                    rows.append((a, b, idx3[I], idx3[J], idx3[K], coef))
    return tuple(rows)


def b_form(phi: AltForm) -> BilinearForm:
    """Matrix of (u, v) ↦ ι_uφ ∧ ι_vφ ∧ φ, trivialized by e_1..7."""
    if phi.dim != 7 or phi.degree != 3:
        raise ValueError("b_form needs a 3-form on R^7")
    v = phi.to_vector()
    exact = phi.is_exact()
    zero = la.q(0) if exact else 0.0
    B = [[zero] * 7 for _ in range(7)]
    for a, b, I, J, K, coef in b_table():
        x = v[I]
        if x == 0:
            continue
        y = v[J]
        if y == 0:
            continue
        z = v[K]
        if z == 0:
            continue
        B[a][b] += coef * x * y * z
    return BilinearForm(7, la.matrix(B, "rational" if exact else "float"))


def b_form_bruteforce(phi: AltForm) -> BilinearForm:
    """Same quantity through explicit wedge products (slow oracle)."""
    exact = phi.is_exact()
    B = [[0] * 7 for _ in range(7)]
    for a in range(7):
        ia = interior(unit_vector(7, a, exact), phi)
        for b in range(7):
            ib = interior(unit_vector(7, b, exact), phi)
            B[a][b] = (ia ^ ib ^ phi).top_coefficient()
    return BilinearForm(7, la.matrix(B, "rational" if exact else "float"))


@dataclass(frozen=True, eq=False)
class G2Structure:
    """A positive 3-form with its induced metric, volume form and dual 4-form.

    ``scale`` is the real number s with vol = s e_1..7; its sign is the
    orientation induced by phi.
    """

    phi: AltForm
    metric: BilinearForm
    vol: AltForm
    scale: object
    bq: object = None

    @property
    def orientation(self) -> OrientedFrame:
        return OrientedFrame(7, sign=1 if self.scale > 0 else -1)

    @property
    def psi(self) -> AltForm:
        cached = self.__dict__.get("_psi")
        if cached is None:
            if self.bq is None:
                cached = hodge(self.phi, self.metric, self.orientation, sqrt_det=abs(self.scale))
            else:
                cached = _psi_from_exact_b(self.phi, self.bq, self.scale)
            object.__setattr__(self, "_psi", cached)
        return cached

    @classmethod
    def from_phi(cls, phi: AltForm) -> "G2Structure":
        g, vol, s, bq = _metric(phi)
        return cls(phi, g, vol, s, bq)


def _exact_form(phi: AltForm) -> AltForm:
    return AltForm(phi.dim, phi.degree, {k: la.q(v) for k, v in phi.coeffs.items()})


def _longdouble(x) -> np.longdouble:
    x = la.q(x)
    return np.longdouble(int(x.numerator)) / np.longdouble(int(x.denominator))


def _psi_from_exact_b(phi: AltForm, bq, s) -> AltForm:
    """*phi = 216 s^4 (raise by B^-1) phi.

    Uses g = B/(6s) and sqrt(det g) = |s|. B^-1 is formed exactly and the
    raise runs in extended precision, so ill-conditioned metrics lose no
    more than a few float64 ulps.
    """
    from . import batched as bt
    binv = np.array([[_longdouble(x) for x in row] for row in la.inv(bq)], dtype=np.longdouble)
    vec = np.array([_longdouble(x) for x in phi.to_vector()], dtype=np.longdouble)
    raised = bt.pullback(binv, vec, 3) @ bt.star_permutation(7, 3).T.astype(np.longdouble)
    out = np.longdouble(216) * np.longdouble(s) ** 4 * raised
    return AltForm.from_vector(7, 4, [float(x) for x in out])


def _metric(phi: AltForm):
    # float coefficients are binary rationals, so B and det B are formed exactly
    B = b_form(_exact_form(phi)).matrix
    d = la.det(B / (la.q(6) if la.is_exact_matrix(B) else 6.0))
    if d == 0 or (not la.is_exact(d) and abs(d) < 1e-300):
        raise NotG2Error("not a G2 structure: the bilinear form B_phi is degenerate")
    s = la.odd_root(d, 9)
    bq = None
    if la.is_exact(s):
        g = B / (la.q(6) * s)
    else:
        bq = B
        g = np.vectorize(float, otypes=[float])(B) / (6.0 * s)
    if not la.is_positive_definite(g):
        raise NotG2Error("not a G2 structure: induced bilinear form is indefinite")
    vol = AltForm(7, 7, {tuple(range(7)): s})
    return BilinearForm(7, g), vol, s, bq


def standard_phi() -> G2Structure:
    return G2Structure.from_phi(standard_phi_form())


def metric_from_g2(phi: AltForm | G2Structure) -> tuple[BilinearForm, AltForm]:
    """Calibrated metric with ι_uφ∧ι_vφ∧φ = 6 g(u,v) vol, and the volume form."""
    if isinstance(phi, G2Structure):
        return phi.metric, phi.vol
    g, vol, _, _ = _metric(phi)
    return g, vol


@dataclass(frozen=True)
class PositivityReport:
    positive: bool
    reason: str
    min_eigenvalue: float | None = None


def is_positive_g2(phi: AltForm) -> PositivityReport:
    if phi.dim != 7 or phi.degree != 3:
        return PositivityReport(False, "not a 3-form on R^7")
    try:
        g, _, _, _ = _metric(phi)
    except NotG2Error as exc:
        return PositivityReport(False, str(exc))
    return PositivityReport(True, "ok", la.min_eigenvalue(g.matrix.astype(float)))


def hodge_dual_g2(phi: AltForm | G2Structure) -> AltForm:
    if not isinstance(phi, G2Structure):
        phi = G2Structure.from_phi(phi)
    return phi.psi


@dataclass(frozen=True, eq=False)
class TwoFormSplitting:
    """Λ² = Λ²_7 ⊕ Λ²_14 for a G2 structure, as matrices on the e_ij basis."""

    structure: G2Structure
    basis7: tuple[AltForm, ...]
    projector: np.ndarray  # 21x21, acts on coefficient vectors, onto Λ²_7

    @classmethod
    def of(cls, G: G2Structure) -> "TwoFormSplitting":
        exact = G.phi.is_exact() and G.metric.is_exact()
        # P is unchanged by rescaling the metric, so g^-1 may be replaced by B^-1,
        # which is exact whenever B is; float input is then rounded only once
        via_b = not exact and G.bq is not None
        rational = exact or via_b
        phi = _exact_form(G.phi) if via_b else G.phi
        ginv = la.inv(G.bq) if via_b else G.metric.inverse_matrix()
        b7 = tuple(interior(unit_vector(7, i, rational), phi) for i in range(7))
        W = np.array([f.to_vector() for f in b7], dtype=object).T  # 21x7
        H = np.array([raise_indices(AltForm.mono(7, I, 1 if rational else 1.0), ginv).to_vector()
                      for I in basis(7, 2)], dtype=object).T  # Λ² inverse metric up to scale, 21x21
        if not rational:
            W, H = W.astype(float), H.astype(float)
        gram = W.T @ H @ W
        P = W @ la.solve(la.matrix(gram, "rational" if rational else "float"), W.T @ H)
        if not exact:
            P = P.astype(float)
            b7 = tuple(f.to_float() for f in b7)
        return cls(G, b7, P)

    def split(self, beta: AltForm) -> tuple[AltForm, AltForm]:
        v = beta.to_vector()
        if self.projector.dtype != object:
            v = v.astype(float)
        b7 = AltForm.from_vector(7, 2, self.projector @ v)
        return b7, beta - b7


def split2(phi: G2Structure | AltForm, beta: AltForm) -> tuple[AltForm, AltForm]:
    if not isinstance(phi, G2Structure):
        phi = G2Structure.from_phi(phi)
    if beta.degree != 2 or beta.dim != 7:
        raise ValueError("split2 needs a 2-form on R^7")
    return TwoFormSplitting.of(phi).split(beta)


def phi_norm_sq(G: G2Structure):
    return inner(G.phi, G.phi, G.metric)


def random_gl_plus(rng: np.random.Generator, n: int, exact: bool = True, denom: int = 4,
                   spread: int = 1) -> np.ndarray:
    """Random matrix with positive determinant: identity plus small random entries."""
    while True:
        if exact:
            M = la.identity(n)
            for i in range(n):
                for j in range(n):
                    M[i, j] += la.q(int(rng.integers(-spread * denom, spread * denom + 1))) / (2 * denom)
        else:
            M = np.eye(n) + 0.5 * rng.uniform(-spread, spread, size=(n, n))
        d = la.det(M)
        if d > 0 and abs(float(d)) > 0.05:
            return M
