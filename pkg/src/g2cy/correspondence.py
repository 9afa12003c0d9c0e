"""The SU(3) <-> G2 dictionary: phi = Re Omega + z ∧ omega.

Pointwise the 7-dim space is V ⊕ R with the R factor along basis vector
``axis`` (default 0, the circle direction); V* is spanned by the other
basis covectors. Six-dimensional SU(3) data is lifted by inserting the
axis index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .exterior import AltForm, BilinearForm, interior, unit_vector
from .g2 import G2Structure
from .su3 import SU3Structure, validate_su3


class CorrespondenceError(ValueError):
    pass


def lift(a: AltForm, axis: int = 0) -> AltForm:
    """Embed a form on V (6 dims) into the 7-dim space, skipping ``axis``."""
    mapping = [j if j < axis else j + 1 for j in range(a.dim)]
    return a.reindex(mapping, a.dim + 1)


def restrict(a: AltForm, axis: int = 0, tol: float = 0.0) -> AltForm:
    """Inverse of lift; legs along ``axis`` must vanish (up to ``tol`` for float data)."""
    legs = [k for k, v in a.coeffs.items() if axis in k]
    if any(abs(a.coeffs[k]) > tol for k in legs):
        raise CorrespondenceError("form has a leg along the circle direction")
    if legs:
        a = AltForm(a.dim, a.degree, {k: v for k, v in a.coeffs.items() if axis not in k})
    return a.drop_leg(axis)


@dataclass(frozen=True, eq=False)
class Twisting:
    """Pointwise twisting covector z with z(e_axis) ≠ 0."""

    z: AltForm
    axis: int = 0

    def __post_init__(self):
        if self.z.dim != 7 or self.z.degree != 1:
            raise ValueError("twisting must be a 1-form on R^7")
        if self.z[(self.axis,)] == 0:
            raise CorrespondenceError("z must not vanish on the circle direction")

    @property
    def orientation(self) -> int:
        return 1 if self.z[(self.axis,)] > 0 else -1


@dataclass(frozen=True, eq=False)
class CorrespondenceTriple:
    z: Twisting
    su3: SU3Structure

    @property
    def axis(self) -> int:
        return self.z.axis

    def phi(self) -> AltForm:
        return lift(self.su3.re, self.axis) + (self.z.z ^ lift(self.su3.omega, self.axis))

    def psi_predicted(self, z_sign: int = -1) -> AltForm:
        """½ omega∧omega + z_sign · z∧Im Omega.

        The default z_sign = -1 is the identity that holds with the pinned
        conventions (φ∧*φ = 7 vol together with Re Ω∧Im Ω = (2/3) ω³);
        z_sign = +1 gives the variant with the opposite sign.
        """
        w = lift(self.su3.omega, self.axis)
        half = la.q(1, 2) if w.is_exact() else 0.5
        return (w ^ w) * half + (self.z.z ^ lift(self.su3.im, self.axis)) * z_sign

    def metric(self) -> BilinearForm:
        """z⊗z + g_{Omega,omega} (the latter pulled back along the projection to V)."""
        from .su3 import induced_metric
        gs = induced_metric(self.su3)
        zv = self.z.z.to_vector()
        exact = gs.is_exact() and self.z.z.is_exact()
        m = np.outer(zv, zv)
        keep = [j for j in range(7) if j != self.axis]
        for a, i in enumerate(keep):
            for b, j in enumerate(keep):
                m[i, j] = m[i, j] + gs.matrix[a, b]
        return BilinearForm(7, la.matrix(m, "rational" if exact else "float"))

    def __eq__(self, other) -> bool:
        if not isinstance(other, CorrespondenceTriple):
            return NotImplemented
        return self.axis == other.axis and self.z.z == other.z.z and self.su3 == other.su3

    __hash__ = None

    def max_abs_diff(self, other: "CorrespondenceTriple") -> float:
        return max((self.z.z - other.z.z).max_abs(), self.su3.max_abs_diff(other.su3))


def g2_from_su3(t: CorrespondenceTriple, validate: bool = True) -> G2Structure:
    if validate:
        d = validate_su3(t.su3)
        if not d.ok:
            raise CorrespondenceError(f"invalid SU(3) input; failed conditions {d.failed()}")
    return G2Structure.from_phi(t.phi())


def su3_from_g2(phi: G2Structure | AltForm, axis: int = 0, orientation: int = 1,
                min_normal: float = 1e-8) -> CorrespondenceTriple:
    """Decompose phi with respect to V = {e^axis = 0}-complement and the given orientation.

    z is the unit g_phi-conormal of V* with sign ``orientation``; omega =
    ι_n phi / z(n), Re Omega = phi - z∧omega, Im Omega = -ι_n(*phi) / z(n)
    (from *phi = ½ omega∧omega - z∧Im Omega).
    """
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    G = phi if isinstance(phi, G2Structure) else G2Structure.from_phi(phi)
    g = G.metric.matrix
    exact = G.metric.is_exact() and G.phi.is_exact()
    norm = la.exact_sqrt(g[axis, axis])
    if not exact or not la.is_exact(norm):
        exact = False
        g = g.astype(float)
        norm = float(norm)
        if norm < min_normal:
            raise CorrespondenceError("circle direction is nearly null")
    z = AltForm(7, 1, {(j,): orientation * g[j, axis] / norm for j in range(7)})
    zn = orientation * norm
    n = unit_vector(7, axis, exact)
    phi7 = G.phi if exact else G.phi.to_float()
    omega7 = interior(n, phi7) / zn
    re7 = phi7 - (z ^ omega7)
    psi = G.psi if exact else G.psi.to_float()
    im7 = -interior(n, psi) / zn
    tol = 0.0 if exact else 1e-10 * max(1.0, phi7.max_abs())
    su3 = SU3Structure(restrict(re7, axis, tol), restrict(im7, axis, tol), restrict(omega7, axis, tol))
    return CorrespondenceTriple(Twisting(z, axis), su3)


def sign_twin(t: CorrespondenceTriple) -> CorrespondenceTriple:
    """(-z, conj(Omega), -omega)."""
    return CorrespondenceTriple(Twisting(-t.z.z, t.axis), t.su3.conjugate())


def unit_conormals(phi: G2Structure | AltForm, axis: int = 0) -> list[AltForm]:
    """All unit covectors g_phi-orthogonal to V* (the span of e^j, j ≠ axis).

    Solved as a linear nullspace problem followed by normalization, without
    using the closed form (∂θ)♭/|∂θ|.
    """
    G = phi if isinstance(phi, G2Structure) else G2Structure.from_phi(phi)
    ginv = G.metric.inverse_matrix()
    exact = la.is_exact_matrix(ginv)
    rows = [list(ginv[j]) for j in range(7) if j != axis]  # (g^{-1} xi)_j = 0
    basis_vecs = _nullspace(rows, exact)
    if len(basis_vecs) != 1:
        raise CorrespondenceError(f"conormal space has dimension {len(basis_vecs)}")
    u = basis_vecs[0]
    nrm2 = sum(u[i] * ginv[i, j] * u[j] for i in range(7) for j in range(7))
    r = la.exact_sqrt(nrm2) if exact else float(np.sqrt(float(nrm2)))
    if u[axis] < 0:
        u = [-x for x in u]
    # positively oriented conormal first
    return [AltForm(7, 1, {(i,): sgn * u[i] / r for i in range(7)}) for sgn in (1, -1)]


def _nullspace(rows, exact: bool) -> list[list]:
    """Nullspace basis of a small matrix by reduced row echelon form."""
    if not rows:
        return []
    a = [list(r) for r in rows] if exact else [[float(x) for x in r] for r in rows]
    m, n = len(a), len(a[0])
    piv_cols = []
    r = 0
    for c in range(n):
        if r >= m:
            break
        if exact:
            p = next((i for i in range(r, m) if a[i][c] != 0), None)
        else:
            col = [abs(a[i][c]) for i in range(r, m)]
            p = r + int(np.argmax(col)) if col and max(col) > 1e-12 else None
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        pv = a[r][c]
        a[r] = [x / pv for x in a[r]]
        for i in range(m):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [a[i][j] - f * a[r][j] for j in range(n)]
        piv_cols.append(c)
        r += 1
    free = [c for c in range(n) if c not in piv_cols]
    one = la.q(1) if exact else 1.0
    zero = la.q(0) if exact else 0.0
    out = []
    for f in free:
        v = [zero] * n
        v[f] = one
        for i, c in enumerate(piv_cols):
            v[c] = -a[i][f]
        out.append(v)
    return out


def enumerate_triples(phi: G2Structure | AltForm, axis: int = 0) -> list[CorrespondenceTriple]:
    """All decompositions phi = Re Omega + z∧omega with z a unit conormal of V*.

    Each candidate z is turned into (omega, Omega) by the same contraction
    recipe and kept only if it validates as SU(3) and reassembles phi.
    """
    G = phi if isinstance(phi, G2Structure) else G2Structure.from_phi(phi)
    found = []
    for z in unit_conormals(G, axis):
        zn = z[(axis,)]
        exact = la.is_exact(zn)
        n = unit_vector(7, axis, exact)
        phi7 = G.phi if exact else G.phi.to_float()
        psi = G.psi if exact else G.psi.to_float()
        omega7 = interior(n, phi7) / zn
        re7 = phi7 - (z ^ omega7)
        im7 = -interior(n, psi) / zn
        tol = 0.0 if exact else 1e-10 * max(1.0, phi7.max_abs())
        t = CorrespondenceTriple(Twisting(z, axis), SU3Structure(restrict(re7, axis, tol),
                                                                 restrict(im7, axis, tol),
                                                                 restrict(omega7, axis, tol)))
        if validate_su3(t.su3).ok and (t.phi() - phi7).max_abs() <= (0 if exact else 1e-10):
            found.append(t)
    return found


def random_triple(rng: np.random.Generator, exact: bool = True, axis: int = 0) -> CorrespondenceTriple:
    """GL+(6) pullback of the standard pair plus a random z with z(e_axis) > 0."""
    from .su3 import random_su3
    s, _ = random_su3(rng, exact=exact)
    if exact:
        coeffs = {(j,): la.q(int(rng.integers(-6, 7)), 4) for j in range(7)}
        coeffs[(axis,)] = la.q(int(rng.integers(1, 9)), 4)
    else:
        coeffs = {(j,): float(rng.normal()) * 0.5 for j in range(7)}
        coeffs[(axis,)] = float(rng.uniform(0.25, 2.0))
    return CorrespondenceTriple(Twisting(AltForm(7, 1, coeffs), axis), s)


# ---------------------------------------------------------------------------
# field level: theta shears on S^1-invariant model forms

def _theta_split(phi, what: str):
    from .spectral import s1_invariance_defect
    ti = phi.manifold.theta_index
    if ti is None:
        raise CorrespondenceError(f"{what}: manifold has no theta coordinate")
    if s1_invariance_defect(phi) != 0:
        raise CorrespondenceError(f"{what}: input is not S^1-invariant")
    return ti


def twist_gauge(phi, f, L):
    """Pullback of an S^1-invariant form under (x, theta) -> (x, theta + f(x)/L).

    Only the dtheta legs move: dtheta -> dtheta + df/L. ``f`` is a
    theta-independent function (degree-0 ModelForm).
    """
    if not L > 0:
        raise CorrespondenceError("twist_gauge needs L > 0")
    ti = _theta_split(phi, "twist_gauge")
    if f.degree != 0:
        raise ValueError("f must be a function")
    if any(key[2][ti] for key in f.terms):
        raise CorrespondenceError("f must not depend on theta")
    if phi.degree == 0:
        return phi
    part = phi.interior_coord(ti)  # phi = rest + dtheta ∧ part
    scale = la.q(1) / la.q(L) if la.is_exact(L) else 1.0 / L
    return phi + (f.d() * scale).wedge(part)


def _torus_function_primitive(v):
    """f with df = v for an exact 1-form on a torus, read off mode by mode."""
    from .spectral import ModelForm, harmonic_project
    man = v.manifold
    if not harmonic_project(v).is_zero():
        raise CorrespondenceError("v has a nonzero harmonic part, so it is not exact")
    f = ModelForm.zero(man, 0)
    seen = set()
    for (legs, kind, k, m, mu, cut), c in v.terms.items():
        if (kind, k) in seen:
            continue
        j = legs[0]
        if k[j] == 0:
            continue
        seen.add((kind, k))
        # d sin(k.x) = cos(k.x) k.dx ; d cos(k.x) = -sin(k.x) k.dx
        if kind == "c":
            f = f + ModelForm.term(man, (), c / k[j], kind="s", k=k)
        else:
            f = f + ModelForm.term(man, (), -c / k[j], kind="c", k=k)
    if f.d() != v:
        raise CorrespondenceError("v is not exact")
    return f


def untwist_cover(phi, z, L):
    """Undo an exact twisting: phi = Re Omega + (L dtheta + v) ∧ omega with v = df.

    Returns (Re Omega + L dtheta ∧ omega, f); the covering map is
    (x, theta) -> (x, theta - f(x)/L).
    """
    from .spectral import ModelForm
    ti = _theta_split(phi, "untwist_cover")
    if phi.manifold.kind != "torus":
        raise CorrespondenceError("untwist_cover works on torus models")
    v = z - ModelForm.term(z.manifold, (ti,), L)
    if any(ti in key[0] for key in v.terms):
        raise CorrespondenceError("the dtheta coefficient of z must be the constant L")
    f = _torus_function_primitive(v)
    return twist_gauge(phi, -f, L), f


# ---------------------------------------------------------------------------
# field level: torsion dictionary on flat T^6 × S^1

DICT_COORDS = ("theta", "x1", "x2", "x3", "x4", "x5", "x6")


def frame_su3(cframe):
    """(Re Omega, Im Omega, omega) of a complex coframe [(re_j, im_j)] for j = 1, 2, 3."""
    from .gluing import _complex_mul
    w = cframe[0]
    for f in cframe[1:]:
        w = _complex_mul(w, f)
    omega = sum((re.wedge(im) for re, im in cframe[1:]), cframe[0][0].wedge(cframe[0][1]))
    return w[0], w[1], omega


@dataclass
class TorsionInstance:
    """S^1-invariant SU(3) data plus twisting with a prescribed (dOmega, domega, dz) pattern."""

    pattern: tuple  # (dOmega != 0, domega != 0, dz != 0)
    re: object
    im: object
    omega: object
    z: object
    active: tuple

    def phi(self):
        return self.re + self.z.wedge(self.omega)

    def exact_flags(self) -> tuple:
        """Which of dOmega, domega, dz are nonzero, computed symbolically."""
        d_om = not (self.re.d().is_zero() and self.im.d().is_zero())
        return (d_om, not self.omega.d().is_zero(), not self.z.d().is_zero())


def torsion_instance(rng: np.random.Generator, pattern, amplitude=None) -> TorsionInstance:
    """Build S^1-invariant fields on T^6 × S^1 realizing ``pattern``.

    The coframe is a diffeomorphism-perturbed flat coframe (closed), then
    optionally sheared by an SL(3, C) unipotent map (changes omega only) and
    rotated by a phase e^{i x5} (changes Omega only). A non-closed 1-form
    is added to z when dz != 0 is requested.
    """
    from .spectral import ModelForm, ModelManifold
    man = ModelManifold.torus(DICT_COORDS)
    eps = la.q(amplitude) if amplitude is not None else la.q(int(rng.integers(1, 4)), 20)
    active = ("x1", "x3", "x5")
    n = man.dim

    def fn(kind, coef, **modes):
        k = [0] * n
        for c, v in modes.items():
            k[man.index(c)] = v
        return ModelForm.term(man, (), coef, kind=kind, k=tuple(k))

    frame = []
    for j in range(1, 7):
        e = ModelForm.term(man, (f"x{j}",), 1)
        c = active[int(rng.integers(3))]
        e = e + fn("s" if rng.integers(2) else "c", eps * la.q(int(rng.integers(1, 3)), 4), **{c: 1}).d()
        frame.append(e)
    cf = [(frame[0], frame[1]), (frame[2], frame[3]), (frame[4], frame[5])]
    want_om, want_w, want_z = (bool(x) for x in pattern)
    if want_w:
        g = fn("c", eps, x5=1)
        cf[0] = (cf[0][0] + g * cf[1][0], cf[0][1] + g * cf[1][1])
    if want_om:
        c5, s5 = fn("c", 1, x5=1), fn("s", 1, x5=1)
        re, im = cf[0]
        cf[0] = (c5 * re - s5 * im, s5 * re + c5 * im)
    re, im, omega = frame_su3(cf)
    L = la.q(int(rng.integers(1, 4)), 2)
    z = ModelForm.term(man, ("theta",), L) + ModelForm.term(man, ("x2",), la.q(int(rng.integers(-2, 3)), 10))
    z = z + fn("s", eps, x3=1).d()
    if want_z:
        z = z + fn("s", eps, x1=1) * ModelForm.term(man, ("x4",), 1)
    return TorsionInstance((want_om, want_w, want_z), re, im, omega, z, active)


def field_torsion(inst: TorsionInstance, points: int = 16) -> dict:
    """Grid torsion (||d phi||, ||d *phi||) of phi = Re Omega + z ∧ omega, with *phi from the G2 metric."""
    from .grid import GridSpec, sample_model_form
    from .torsion import torsion_residual
    shape = tuple(points if c in inst.active else 1 for c in DICT_COORDS)
    spec = GridSpec((2 * np.pi,) * 7, shape)
    phi = sample_model_form(inst.phi(), spec, DICT_COORDS)
    d_phi, d_psi = torsion_residual(phi)
    return {"d_phi": d_phi, "d_psi": d_psi, "flags": inst.exact_flags()}
