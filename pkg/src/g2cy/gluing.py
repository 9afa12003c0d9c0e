"""Cutoff gluing of matching cylinder data into forms on a neck torus.

Both pieces are half-cylinders T^5 × S^1 × [0, ∞) in coordinates
(theta, x1..x5, t). Piece 2 is placed on the neck torus by t = 2T - s,
so its dt legs change sign; the cross-section identification F is the
identity. The neck torus has circumference 2T along t.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import quad

from . import batched as bt
from . import linalg as la
from .exterior import AltForm, basis
from .grid import GridForm, GridSpec
from .spectral import (ModelForm, ModelManifold, asymptotic_limit, exact_primitive_on_end)
from .torsion import SolveOptions

CROSS_SECTION = ("theta", "x1", "x2", "x3", "x4", "x5")
T_AXIS = 6
THETA_AXIS = 0


class GluingError(ValueError):
    pass


class MatchingError(GluingError):
    pass


class PositivityError(GluingError):
    pass


def end_manifold() -> ModelManifold:
    return ModelManifold.cylinder(CROSS_SECTION, theta="theta")


def flip_dt(a: ModelForm) -> ModelForm:
    """Sign change of dt-leg terms (the orientation reversal of the t-identification)."""
    ti = a.manifold.t_index
    return ModelForm(a.manifold, a.degree,
                     {k: (-v if ti in k[0] else v) for k, v in a.terms.items()})


@dataclass(frozen=True)
class MatchingPair:
    alpha1: ModelForm
    alpha2: ModelForm

    def __post_init__(self):
        a, b = self.alpha1, self.alpha2
        if a.manifold != b.manifold or a.manifold.kind != "cylinder":
            raise MatchingError("both forms must live on the same cylinder")
        if a.degree != b.degree:
            raise MatchingError("degree mismatch")

    @property
    def degree(self) -> int:
        return self.alpha1.degree

    def wedge(self, other: "MatchingPair") -> "MatchingPair":
        return MatchingPair(self.alpha1.wedge(other.alpha1), self.alpha2.wedge(other.alpha2))

    def __add__(self, other: "MatchingPair") -> "MatchingPair":
        return MatchingPair(self.alpha1 + other.alpha1, self.alpha2 + other.alpha2)

    def __mul__(self, c) -> "MatchingPair":
        return MatchingPair(self.alpha1 * c, self.alpha2 * c)

    __rmul__ = __mul__


@dataclass
class MatchReport:
    matches: bool
    residual: float
    difference: ModelForm


def match_check(p: MatchingPair) -> MatchReport:
    """Compare lim alpha1 with the transported lim alpha2 (dt legs flipped)."""
    diff = asymptotic_limit(p.alpha1) - flip_dt(asymptotic_limit(p.alpha2))
    res = float(np.sqrt(sum(float(c) ** 2 for c in diff.terms.values())))
    return MatchReport(diff.is_zero(), res, diff)


def neck_cutoff_form(man: ModelManifold, T) -> ModelForm:
    T = la.q(T) if la.is_exact(T) else float(T)
    return ModelForm.term(man, (), 1, cut=(((T - 2, T - 1, 0), 1),))


def _end_start(forms: Sequence[ModelForm], T):
    """Where every cutoff in the inputs is constant; must not exceed T - 2."""
    t0 = max((b for f in forms for (a, b, j) in f.cut_keys()), default=0)
    if t0 > T - 2:
        raise GluingError(f"T = {T} is too small: perturbation cutoffs extend to t = {t0} > T - 2")
    return t0


def end_primitive(a: ModelForm, T) -> ModelForm:
    """A with dA = a - lim a on the end t >= t0 (t0 <= T - 2)."""
    t0 = _end_start([a], T)
    dec = a.substitute_beyond(t0) - asymptotic_limit(a)
    if dec.is_zero():
        return ModelForm.zero(a.manifold, a.degree - 1)
    eta, _ = exact_primitive_on_end(dec, t0)
    return eta


def gamma_side(a: ModelForm, T) -> ModelForm:
    """alpha' = alpha - d(psi_T A)."""
    if not a.d().is_zero():
        raise GluingError("gamma_T needs closed inputs")
    if a.degree == 0:
        return a
    A = end_primitive(a, T)
    return a - neck_cutoff_form(a.manifold, T).wedge(A).d()


@dataclass(frozen=True)
class NeckForm:
    """Closed form on the neck torus, given piecewise by the two modified sides."""

    T: object
    side1: ModelForm
    side2: ModelForm

    @property
    def degree(self) -> int:
        return self.side1.degree

    @property
    def manifold(self) -> ModelManifold:
        return self.side1.manifold

    def d(self) -> "NeckForm":
        return NeckForm(self.T, self.side1.d(), self.side2.d())

    def is_closed(self) -> bool:
        return self.side1.d().is_zero() and self.side2.d().is_zero() and self.sides_agree()

    def sides_agree(self) -> bool:
        """Both sides equal the common limit for t >= T - 1, so they glue."""
        T1 = self.T - 1
        a = self.side1.restrict_above(T1)
        b = self.side2.restrict_above(T1)
        return a == asymptotic_limit(self.side1) and b == asymptotic_limit(self.side2) and \
            (a - flip_dt(b)).is_zero()

    def __add__(self, o: "NeckForm") -> "NeckForm":
        return NeckForm(self.T, self.side1 + o.side1, self.side2 + o.side2)

    def __sub__(self, o: "NeckForm") -> "NeckForm":
        return NeckForm(self.T, self.side1 - o.side1, self.side2 - o.side2)

    def __mul__(self, c) -> "NeckForm":
        return NeckForm(self.T, self.side1 * c, self.side2 * c)

    __rmul__ = __mul__

    def wedge(self, o: "NeckForm") -> "NeckForm":
        return NeckForm(self.T, self.side1.wedge(o.side1), self.side2.wedge(o.side2))

    def harmonic(self) -> AltForm:
        """Zero Fourier mode on the neck torus, by quadrature along t."""
        n = self.manifold.dim
        T = float(self.T)
        acc: dict = {}
        for sgn_flip, side in ((False, self.side1), (True, self.side2)):
            zero = {}
            for key, c in side.terms.items():
                legs, kind, k, m, mu, cut = key
                if kind == "c" and not any(k):
                    zero.setdefault(legs, []).append((float(c), m, float(mu), cut))
            for legs, items in zero.items():
                val = sum(_integrate_profile(c, m, mu, cut, T) for c, m, mu, cut in items)
                if sgn_flip and T_AXIS in legs:
                    val = -val
                acc[legs] = acc.get(legs, 0.0) + val
        return AltForm(n, self.degree, {I: v / (2 * T) for I, v in acc.items() if v != 0.0})

    def sample(self, spec: GridSpec) -> GridForm:
        """Values on the neck lattice (axes ordered as the cylinder coordinates)."""
        if spec.n != self.manifold.dim or abs(spec.lengths[T_AXIS] - 2 * float(self.T)) > 1e-12:
            raise GluingError("grid does not match the neck torus")
        mesh = spec.mesh()
        t = mesh[T_AXIS]
        T = float(self.T)
        left = t <= T
        pts1 = {c: m for c, m in zip(self.manifold.coords, mesh)}
        pts2 = dict(pts1)
        pts2["t"] = 2 * T - t
        v1 = self.side1.evaluate(pts1)
        v2 = self.side2.evaluate(pts2)
        flip = np.array([-1.0 if T_AXIS in I else 1.0 for I in basis(spec.n, self.degree)])
        data = np.where(left[..., None], v1, v2 * flip)
        return GridForm(spec, self.degree, data)


def _integrate_profile(c: float, m: int, mu: float, cut, T: float) -> float:
    """∫_0^T c t^m e^{-mu t} Π cutoffs dt."""
    from .profiles import cutoff
    if not cut:
        if mu == 0:
            return c * T ** (m + 1) / (m + 1)
        total = 0.0
        for i in range(m + 1):
            total += math.factorial(m) / math.factorial(i) * (0 ** i - T ** i * math.exp(-mu * T)) / mu ** (m - i + 1)
        return c * total

    def f(t):
        v = t ** m * np.exp(-mu * t)
        for (a, b, j), p in cut:
            v *= float(cutoff(np.array([t]), a, b, j)[0]) ** p
        return v

    pts = sorted({float(x) for (a, b, j), p in cut for x in (a, b) if 0 < float(x) < T})
    val, _ = quad(f, 0.0, T, points=pts or None, epsabs=1e-14, epsrel=1e-13, limit=400)
    return c * val


def gamma_T(p: MatchingPair, T) -> NeckForm:
    """The cutoff gluing of a matching closed pair."""
    if not match_check(p).matches:
        raise MatchingError("limits do not match under the t-reflection")
    _end_start([p.alpha1, p.alpha2], T)
    return NeckForm(T, gamma_side(p.alpha1, T), gamma_side(p.alpha2, T))


@dataclass
class SupportCertificate:
    below_zero: bool  # vanishes identically for t <= T - 2
    above_zero: bool  # vanishes identically for t >= T - 1
    exact: bool  # defect - d(primitive) == 0 symbolically

    @property
    def ok(self) -> bool:
        return self.below_zero and self.above_zero and self.exact


@dataclass
class WedgeDefect:
    defect: NeckForm
    primitive: NeckForm
    certificate: SupportCertificate


def _defect_primitive_side(a: ModelForm, b: ModelForm, T) -> tuple[ModelForm, ModelForm]:
    man = a.manifold
    p = a.degree
    psi = neck_cutoff_form(man, T)
    t0 = _end_start([a, b], T)
    ae, be = a.substitute_beyond(t0), b.substitute_beyond(t0)
    A, B = end_primitive(a, T), end_primitive(b, T)
    ab = a.wedge(b)
    C = end_primitive(ab, T)
    dB = B.d()
    sgn = -1 if p % 2 else 1
    cstar = A.wedge(be) + ae.wedge(B) * sgn - A.wedge(dB)
    E = cstar - C
    if E.is_zero() or E.degree == 0:
        Ep = ModelForm.zero(man, max(E.degree - 1, 0))
        if E.degree == 0 and not E.is_zero():
            raise GluingError("nonzero closed decaying function on the end")
    else:
        Ep, _ = exact_primitive_on_end(E, t0)
    prim = A.wedge(dB).wedge(psi) - psi.wedge(A).wedge(psi.wedge(B).d())
    if not Ep.is_zero():
        prim = prim - psi.d().wedge(Ep)
    # defect on this side
    ga, gb, gab = gamma_side(a, T), gamma_side(b, T), gamma_side(ab, T)
    defect = gab - ga.wedge(gb)
    return defect, prim


def wedge_defect_primitive(pA: MatchingPair, pB: MatchingPair, T) -> WedgeDefect:
    """gamma_T(a∧b) - gamma_T(a)∧gamma_T(b) and a primitive supported in the ramp."""
    for p in (pA, pB):
        if not match_check(p).matches:
            raise MatchingError("limits do not match")
        if not (p.alpha1.d().is_zero() and p.alpha2.d().is_zero()):
            raise GluingError("inputs must be closed")
    d1, p1 = _defect_primitive_side(pA.alpha1, pB.alpha1, T)
    d2, p2 = _defect_primitive_side(pA.alpha2, pB.alpha2, T)
    lo, hi = T - 2, T - 1
    cert = SupportCertificate(
        below_zero=p1.restrict_below(lo).is_zero() and p2.restrict_below(lo).is_zero(),
        above_zero=p1.restrict_above(hi).is_zero() and p2.restrict_above(hi).is_zero(),
        exact=(d1 - p1.d()).is_zero() and (d2 - p2.d()).is_zero(),
    )
    return WedgeDefect(NeckForm(T, d1, d2), NeckForm(T, p1, p2), cert)


# ---------------------------------------------------------------------------
# SU(3) pieces and the gluing config

@dataclass
class Perturbation:
    """Diffeomorphism component X^coord = amp · S((t-a)/(b-a)) e^{-mu t} trig(k·x) on one piece."""

    piece: int
    coord: str
    amplitude: Fraction
    k: dict = field(default_factory=dict)
    trig: str = "c"
    mu: Fraction = Fraction(2)
    start: tuple = (Fraction(1, 2), Fraction(1))

    def function(self, man: ModelManifold) -> ModelForm:
        kv = tuple(int(self.k.get(c, 0)) for c in man.coords)
        a, b = (la.q(x) for x in self.start)
        return ModelForm.term(man, (), la.q(self.amplitude), kind=self.trig, k=kv,
                              mu=la.q(self.mu), cut=(((a, b, 0), 1),))

    def to_json(self) -> dict:
        return {"piece": self.piece, "coord": self.coord, "amplitude": str(self.amplitude),
                "k": dict(self.k), "trig": self.trig, "mu": str(self.mu),
                "start": [str(x) for x in self.start]}


@dataclass
class DfTerm:
    """Gauge function term amp · trig(k·x) · (optional decaying profile), common to both pieces."""

    amplitude: Fraction
    k: dict = field(default_factory=dict)
    trig: str = "s"
    mu: Fraction | None = None
    start: tuple = (Fraction(1, 2), Fraction(1))

    def function(self, man: ModelManifold) -> ModelForm:
        kv = tuple(int(self.k.get(c, 0)) for c in man.coords)
        if self.mu is None:
            return ModelForm.term(man, (), la.q(self.amplitude), kind=self.trig, k=kv)
        a, b = (la.q(x) for x in self.start)
        return ModelForm.term(man, (), la.q(self.amplitude), kind=self.trig, k=kv,
                              mu=la.q(self.mu), cut=(((a, b, 0), 1),))

    def to_json(self) -> dict:
        d = {"amplitude": str(self.amplitude), "k": dict(self.k), "trig": self.trig,
             "start": [str(x) for x in self.start]}
        d["mu"] = None if self.mu is None else str(self.mu)
        return d


@dataclass
class TwistingSpec:
    L: Fraction = Fraction(1)
    harmonic: dict = field(default_factory=dict)  # x-coordinate -> coefficient of dx
    df: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"L": str(self.L), "harmonic": {k: str(v) for k, v in self.harmonic.items()},
                "df": [t.to_json() for t in self.df]}


@dataclass
class GluingConfig:
    T: Fraction = Fraction(5)
    x_points: int = 8
    neck_points: int = 512
    perturbations: list = field(default_factory=list)
    twisting: TwistingSpec = field(default_factory=TwistingSpec)
    solver: SolveOptions = field(default_factory=SolveOptions)
    name: str = "config"

    def to_json(self) -> dict:
        return {"schema": "g2cy.gluing-config/1", "name": self.name, "T": str(self.T),
                "x_points": self.x_points, "neck_points": self.neck_points,
                "perturbations": [p.to_json() for p in self.perturbations],
                "twisting": self.twisting.to_json(), "solver": self.solver.to_json()}

    @classmethod
    def from_json(cls, d: Mapping) -> "GluingConfig":
        return parse_config(d)

    @classmethod
    def load(cls, path) -> "GluingConfig":
        with open(path) as fh:
            return parse_config(json.load(fh))


class ConfigError(ValueError):
    pass


def _frac(v, where: str) -> Fraction:
    if isinstance(v, bool) or v is None:
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    try:
        return Fraction(str(v))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{where}: cannot parse {v!r} as a rational") from exc


def _kdict(v, where: str) -> dict:
    if not isinstance(v, Mapping):
        raise ConfigError(f"{where}: expected an object of wave numbers")
    out = {}
    for c, x in v.items():
        if c not in CROSS_SECTION[1:]:
            raise ConfigError(f"{where}: unknown coordinate {c!r} (allowed: x1..x5)")
        if isinstance(x, bool) or not isinstance(x, int):
            raise ConfigError(f"{where}.{c}: wave numbers must be integers")
        out[c] = x
    return out


_CONFIG_KEYS = {"schema", "name", "T", "x_points", "neck_points", "perturbations", "twisting", "solver"}


def parse_config(d: Mapping) -> GluingConfig:
    """Validate a config document with field-precise messages."""
    if not isinstance(d, Mapping):
        raise ConfigError("config must be a JSON object")
    extra = set(d) - _CONFIG_KEYS
    if extra:
        raise ConfigError(f"unknown config field(s): {sorted(extra)}")
    T = _frac(d.get("T", 5), "T")
    if T <= 2:
        raise ConfigError("T: must exceed 2")
    xp, nk = d.get("x_points", 8), d.get("neck_points", 512)
    for name, v in (("x_points", xp), ("neck_points", nk)):
        if isinstance(v, bool) or not isinstance(v, int) or v < 2:
            raise ConfigError(f"{name}: must be an integer >= 2")
    perts = []
    for i, p in enumerate(d.get("perturbations", [])):
        w = f"perturbations[{i}]"
        if not isinstance(p, Mapping):
            raise ConfigError(f"{w}: expected an object")
        piece = p.get("piece")
        if piece not in (1, 2):
            raise ConfigError(f"{w}.piece: must be 1 or 2")
        coord = p.get("coord")
        if coord not in CROSS_SECTION[1:] + ("t",):
            raise ConfigError(f"{w}.coord: must be one of x1..x5, t")
        trig = p.get("trig", "c")
        if trig not in ("c", "s"):
            raise ConfigError(f"{w}.trig: must be 'c' or 's'")
        start = tuple(_frac(x, f"{w}.start") for x in p.get("start", ["1/2", "1"]))
        if len(start) != 2 or not 0 <= start[0] < start[1]:
            raise ConfigError(f"{w}.start: need 0 <= a < b")
        mu = _frac(p.get("mu", 2), f"{w}.mu")
        if mu <= 0:
            raise ConfigError(f"{w}.mu: decay rate must be positive")
        perts.append(Perturbation(piece, coord, _frac(p.get("amplitude"), f"{w}.amplitude"),
                                  _kdict(p.get("k", {}), f"{w}.k"), trig, mu, start))
    tw = d.get("twisting", {})
    if not isinstance(tw, Mapping):
        raise ConfigError("twisting: expected an object")
    L = _frac(tw.get("L", 1), "twisting.L")
    if L <= 0:
        raise ConfigError("twisting.L: must be positive (L > 0)")
    harm = {}
    for c, v in tw.get("harmonic", {}).items():
        if c not in CROSS_SECTION[1:]:
            raise ConfigError(f"twisting.harmonic: unknown coordinate {c!r}")
        harm[c] = _frac(v, f"twisting.harmonic.{c}")
    dfs = []
    for i, t in enumerate(tw.get("df", [])):
        w = f"twisting.df[{i}]"
        trig = t.get("trig", "s")
        if trig not in ("c", "s"):
            raise ConfigError(f"{w}.trig: must be 'c' or 's'")
        mu = t.get("mu")
        mu = None if mu is None else _frac(mu, f"{w}.mu")
        if mu is not None and mu <= 0:
            raise ConfigError(f"{w}.mu: decay rate must be positive")
        start = tuple(_frac(x, f"{w}.start") for x in t.get("start", ["1/2", "1"]))
        dfs.append(DfTerm(_frac(t.get("amplitude"), f"{w}.amplitude"), _kdict(t.get("k", {}), f"{w}.k"),
                          trig, mu, start))
    so = d.get("solver", {})
    if not isinstance(so, Mapping):
        raise ConfigError("solver: expected an object")
    opts = SolveOptions()
    for key, v in so.items():
        if key not in opts.__dict__:
            raise ConfigError(f"solver.{key}: unknown option")
        cur = getattr(opts, key)
        if isinstance(cur, bool):
            if not isinstance(v, bool):
                raise ConfigError(f"solver.{key}: expected true or false")
        elif isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"solver.{key}: expected a number")
        setattr(opts, key, type(cur)(v))
    return GluingConfig(T, xp, nk, perts, TwistingSpec(L, harm, dfs), opts, str(d.get("name", "config")))


def _complex_mul(a, b):
    return (a[0].wedge(b[0]) - a[1].wedge(b[1]), a[0].wedge(b[1]) + a[1].wedge(b[0]))


@dataclass
class SU3Piece:
    """S^1-invariant SU(3) data and twisting on one half-cylinder."""

    re: ModelForm
    im: ModelForm
    omega: ModelForm
    z: ModelForm

    def phi(self) -> ModelForm:
        return self.re + self.z.wedge(self.omega)

    def psi(self) -> ModelForm:
        # *phi for phi = Re + z∧omega with the orientation fixed by the standard phi
        return self.omega.wedge(self.omega) * la.q(1, 2) - self.z.wedge(self.im)


def su3_piece(man: ModelManifold, piece: int, perts: Sequence[Perturbation], tw: TwistingSpec) -> SU3Piece:
    """Flat structure (t-flipped on piece 2) pulled back by the listed diffeomorphism components."""
    frame = {}
    for c in man.coords[1:]:
        e = ModelForm.term(man, (c,), 1)
        for p in perts:
            if p.piece == piece and p.coord == c:
                e = e + p.function(man).d()
        frame[c] = e
    tsign = 1 if piece == 1 else -1
    f1 = (frame["x1"], frame["x2"])
    f2 = (frame["x3"], frame["x4"])
    f3 = (frame["x5"], frame["t"] * tsign)
    re, im = _complex_mul(_complex_mul(f1, f2), f3)
    omega = frame["x1"].wedge(frame["x2"]) + frame["x3"].wedge(frame["x4"]) + frame["x5"].wedge(frame["t"]) * tsign
    z = ModelForm.term(man, ("theta",), la.q(tw.L))
    for c, v in tw.harmonic.items():
        z = z + ModelForm.term(man, (c,), la.q(v))
    for t in tw.df:
        z = z + t.function(man).d()
    return SU3Piece(re, im, omega, z)


@dataclass
class GluedPair:
    """Output of glue_su3_pair: glued closed forms and the pair data that produced them."""

    config: GluingConfig
    piece1: SU3Piece
    piece2: SU3Piece
    phi: NeckForm
    psi_hat: NeckForm
    spec: GridSpec
    phi_grid: GridForm
    min_eig: float

    def pair(self, name: str) -> MatchingPair:
        return MatchingPair(getattr(self.piece1, name), getattr(self.piece2, name))

    def predicted(self, name: str) -> AltForm:
        return gamma_T(self.pair(name), self.config.T).harmonic()


def neck_grid(cfg: GluingConfig, forms: Sequence[ModelForm] = ()) -> GridSpec:
    """Lattice on the neck torus; x directions without wave numbers are collapsed."""
    active = set()
    for f in forms:
        for key in f.terms:
            active |= {j for j, kj in enumerate(key[2]) if kj}
    shape = [1] * 7
    for j in range(1, 6):
        if j in active:
            shape[j] = cfg.x_points
    shape[T_AXIS] = cfg.neck_points
    lengths = [2 * np.pi] * 6 + [2 * float(cfg.T)]
    return GridSpec(tuple(lengths), tuple(shape))


def glue_su3_pair(cfg: GluingConfig) -> GluedPair:
    man = end_manifold()
    p1 = su3_piece(man, 1, cfg.perturbations, cfg.twisting)
    p2 = su3_piece(man, 2, cfg.perturbations, cfg.twisting)
    T = la.q(cfg.T)
    for name in ("re", "im", "omega", "z"):
        rep = match_check(MatchingPair(getattr(p1, name), getattr(p2, name)))
        if not rep.matches:
            raise MatchingError(f"{name} limits do not match (residual {rep.residual:.3g})")
    if not asymptotic_limit(p1.z).interior_coord(T_AXIS).is_zero():
        raise MatchingError("the twisting has a nonzero dt component at infinity")
    phi = gamma_T(MatchingPair(p1.phi(), p2.phi()), T)
    psi_hat = gamma_T(MatchingPair(p1.psi(), p2.psi()), T)
    spec = neck_grid(cfg, [phi.side1, phi.side2])
    grid = phi.sample(spec)
    g, s = bt.g2_metric(grid.data)
    ok = np.isfinite(s) & (s > 0)
    min_eig = float(np.min(np.linalg.eigvalsh(g))) if np.all(ok) else float("-inf")
    if not min_eig > 0:
        raise PositivityError("glued 3-form is not positive at some lattice point; increase T or "
                              "reduce perturbation amplitudes")
    return GluedPair(cfg, p1, p2, phi, psi_hat, spec, grid, min_eig)
