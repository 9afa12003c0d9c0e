"""Differential forms on flat model manifolds in a closed-form spectral family.

A ModelManifold is a torus T^n (all coordinates 2π-periodic) or a cylinder
T^n × [0, ∞) whose last coordinate is the end coordinate t. A ModelForm is
a finite sum of terms

    coef · trig(k·x) · t^m e^{-mu t} · Π cutoff factors^p · dx^{legs}

with trig ∈ {cos, sin}, integer wave vectors k, and cutoff factors
(a, b, j) = d^j/dt^j S((t-a)/(b-a)) from ``profiles``. The family is closed
under d, wedge, contraction with ∂_t and the tail integral, so every
identity is checked with exact rational coefficients.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from . import linalg as la
from .exterior import AltForm, basis, basis_index, merge_sign
from .profiles import cutoff

SCHEMA = "g2cy.modelform/1"
MAX_T_DEGREE = 4
INF = float("inf")


class ProfileOverflowError(ValueError):
    """A product left the polynomial-exponential family (t-degree cap exceeded)."""


class NotDecayingError(ValueError):
    pass


class NotClosedError(ValueError):
    pass


@dataclass(frozen=True)
class ModelManifold:
    """Flat torus or half-cylinder; all periodic coordinates have period 2π."""

    coords: tuple[str, ...]
    kind: str = "torus"
    theta: str | None = "theta"

    def __post_init__(self):
        if self.kind not in ("torus", "cylinder"):
            raise ValueError(f"unknown manifold kind {self.kind!r}")
        if len(set(self.coords)) != len(self.coords):
            raise ValueError("coordinate labels must be distinct")
        if self.kind == "cylinder" and self.coords[-1] != "t":
            raise ValueError("the end coordinate t must be the last coordinate")
        if self.theta is not None and self.theta not in self.coords:
            object.__setattr__(self, "theta", None)

    @classmethod
    def torus(cls, coords, theta: str | None = "theta") -> "ModelManifold":
        return cls(tuple(coords), "torus", theta)

    @classmethod
    def cylinder(cls, cross_section, theta: str | None = "theta") -> "ModelManifold":
        return cls(tuple(cross_section) + ("t",), "cylinder", theta)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def t_index(self) -> int | None:
        return self.dim - 1 if self.kind == "cylinder" else None

    @property
    def theta_index(self) -> int | None:
        return None if self.theta is None else self.coords.index(self.theta)

    @property
    def periodic(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.dim) if i != self.t_index)

    def index(self, name: str) -> int:
        return self.coords.index(name)

    def to_json(self) -> dict:
        return {"kind": self.kind, "coords": list(self.coords), "theta": self.theta}

    @classmethod
    def from_json(cls, d: Mapping) -> "ModelManifold":
        return cls(tuple(d["coords"]), d["kind"], d.get("theta"))


# ---------------------------------------------------------------------------
# term algebra

def _canon_mode(kind: str, k: tuple[int, ...]):
    """Canonical (sign, kind, k): first nonzero entry of k positive, sin(0) = 0."""
    nz = next((x for x in k if x != 0), 0)
    if nz == 0:
        return (0, None, None) if kind == "s" else (1, "c", k)
    if nz < 0:
        k = tuple(-x for x in k)
        return (-1, "s", k) if kind == "s" else (1, "c", k)
    return 1, kind, k


def _trig_product(k1, a, k2, b):
    """cos/sin products as a list of (factor numerator over 2, kind, k)."""
    plus = tuple(x + y for x, y in zip(a, b))
    minus = tuple(x - y for x, y in zip(a, b))
    if k1 == "c" and k2 == "c":
        return [(1, "c", minus), (1, "c", plus)]
    if k1 == "s" and k2 == "s":
        return [(1, "c", minus), (-1, "c", plus)]
    if k1 == "s" and k2 == "c":
        return [(1, "s", plus), (1, "s", minus)]
    return [(1, "s", plus), (-1, "s", minus)]  # cos a sin b


def _canon_cut(factors: Mapping) -> tuple | None:
    """Canonical cutoff monomial, or None when it vanishes identically."""
    items = {k: p for k, p in factors.items() if p}
    if not items:
        return ()
    lo = max(a for (a, b, j) in items)
    hi = min((b for (a, b, j) in items if j >= 1), default=INF)
    if hi != INF and lo >= hi:
        return None
    # a step factor equal to 1 on the whole support can be dropped
    items = {k: p for k, p in items.items() if not (k[2] == 0 and k[1] <= lo)}
    return tuple(sorted(items.items(), key=lambda kv: (float(kv[0][0]), float(kv[0][1]), kv[0][2])))


def _cut_mul(c1: tuple, c2: tuple) -> tuple | None:
    d = dict(c1)
    for k, p in c2:
        d[k] = d.get(k, 0) + p
    return _canon_cut(d)


def _is_exact(x) -> bool:
    return la.is_exact(x)


def _half(x):
    return x * la.q(1, 2) if _is_exact(x) else 0.5 * x


def _num(x):
    """Promote python ints to exact rationals; leave floats alone."""
    if isinstance(x, (bool,)):
        raise TypeError("boolean is not a coefficient")
    return la.q(x) if _is_exact(x) else float(x)


@dataclass(frozen=True, eq=False)
class ModelForm:
    """Closed-form differential form on a ModelManifold (see module docstring)."""

    manifold: ModelManifold
    degree: int
    terms: Mapping = field(default_factory=dict)
    rate: object = None  # declared decay rate; None means "computed"

    def __post_init__(self):
        if not 0 <= self.degree <= self.manifold.dim:
            raise ValueError("degree out of range")
        clean: dict = {}
        n = self.manifold.dim
        t_idx = self.manifold.t_index
        for key, c in dict(self.terms).items():
            legs, kind, k, m, mu, cut = key
            if len(legs) != self.degree or len(k) != n:
                raise ValueError(f"malformed term key {key}")
            if t_idx is None and (m or mu or cut):
                raise ValueError("torus forms cannot carry t-profiles")
            if t_idx is not None and k[t_idx] != 0:
                raise ValueError("no Fourier modes along the end coordinate")
            if m > MAX_T_DEGREE:
                raise ProfileOverflowError(f"t-degree {m} exceeds the cap {MAX_T_DEGREE}")
            if c == 0:
                continue
            clean[key] = clean.get(key, 0) + c
        clean = {k: v for k, v in clean.items() if v != 0}
        object.__setattr__(self, "terms", MappingProxyType(clean))

    # -- construction -----------------------------------------------------
    @classmethod
    def _build(cls, manifold, degree, raw: dict, rate=None) -> "ModelForm":
        """Assemble from possibly non-canonical raw terms (legs sorted, sign handled)."""
        out: dict = {}
        for (legs, kind, k, m, mu, cut), c in raw.items():
            sgn, kind, k = _canon_mode(kind, tuple(k))
            if sgn == 0 or c == 0:
                continue
            cut = _canon_cut(dict(cut))
            if cut is None:
                continue
            key = (tuple(legs), kind, k, m, mu, cut)
            out[key] = out.get(key, 0) + (c if sgn > 0 else -c)
        return cls(manifold, degree, out, rate)

    @classmethod
    def zero(cls, manifold: ModelManifold, degree: int) -> "ModelForm":
        return cls(manifold, degree, {})

    @classmethod
    def constant(cls, manifold: ModelManifold, a: AltForm) -> "ModelForm":
        """Translation-invariant form with the coefficients of ``a``."""
        if a.dim != manifold.dim:
            raise ValueError("dimension mismatch")
        z = (0,) * manifold.dim
        return cls(manifold, a.degree, {(I, "c", z, 0, _zero_mu(c), ()): c for I, c in a.coeffs.items()})

    @classmethod
    def term(cls, manifold: ModelManifold, legs, coef=1, kind: str = "c", k=None, m: int = 0,
             mu=0, cut=()) -> "ModelForm":
        """One term; legs given as coordinate indices or names (any order)."""
        legs = [manifold.index(x) if isinstance(x, str) else int(x) for x in legs]
        from .exterior import sort_sign
        sgn, legs = sort_sign(legs)
        if sgn == 0:
            return cls.zero(manifold, len(legs))
        k = tuple(k) if k is not None else (0,) * manifold.dim
        if isinstance(k, dict):
            raise TypeError("pass k as a full tuple")
        coef = _num(coef)
        mu = _num(mu)
        cut = tuple((tuple(_num(x) if i < 2 else int(x) for i, x in enumerate(key)), int(p))
                    for key, p in cut)
        return cls._build(manifold, len(legs), {(legs, kind, k, m, mu, cut): coef if sgn > 0 else -coef})

    @classmethod
    def scalar_function(cls, manifold: ModelManifold, **kw) -> "ModelForm":
        return cls.term(manifold, (), **kw)

    # -- basic queries ----------------------------------------------------
    @property
    def dim(self) -> int:
        return self.manifold.dim

    def is_zero(self) -> bool:
        return not self.terms

    def is_exact(self) -> bool:
        return all(_is_exact(c) for c in self.terms.values()) and all(
            _is_exact(k[4]) and all(_is_exact(f[0][0]) and _is_exact(f[0][1]) for f in k[5])
            for k in self.terms)

    def max_abs(self) -> float:
        return la.scalar_abs_max(self.terms.values())

    def _check(self, other: "ModelForm"):
        if not isinstance(other, ModelForm):
            raise TypeError("expected a ModelForm")
        if other.manifold != self.manifold:
            raise ValueError("forms live on different manifolds")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModelForm):
            return NotImplemented
        return (self.manifold == other.manifold and self.degree == other.degree
                and dict(self.terms) == dict(other.terms))

    __hash__ = None

    def __repr__(self) -> str:
        return f"ModelForm(degree={self.degree}, terms={len(self.terms)}, manifold={self.manifold.kind})"

    # -- linear structure -------------------------------------------------
    def __add__(self, other: "ModelForm") -> "ModelForm":
        self._check(other)
        if other.degree != self.degree:
            raise ValueError("cannot add forms of different degree")
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return ModelForm(self.manifold, self.degree, out)

    def __neg__(self) -> "ModelForm":
        return ModelForm(self.manifold, self.degree, {k: -v for k, v in self.terms.items()}, self.rate)

    def __sub__(self, other: "ModelForm") -> "ModelForm":
        return self + (-other)

    def __mul__(self, c) -> "ModelForm":
        if isinstance(c, ModelForm):
            return self.wedge(c)
        c = _num(c)
        return ModelForm(self.manifold, self.degree, {k: v * c for k, v in self.terms.items()}, self.rate)

    __rmul__ = __mul__

    def __xor__(self, other: "ModelForm") -> "ModelForm":
        return self.wedge(other)

    def to_float(self) -> "ModelForm":
        out = {}
        for (legs, kind, k, m, mu, cut), c in self.terms.items():
            fcut = tuple(((float(a), float(b), j), p) for (a, b, j), p in cut)
            key = (legs, kind, k, m, float(mu), fcut)
            out[key] = out.get(key, 0.0) + float(c)
        return ModelForm(self.manifold, self.degree, out)

    # -- products and derivatives ----------------------------------------
    def wedge(self, other: "ModelForm") -> "ModelForm":
        self._check(other)
        deg = self.degree + other.degree
        if deg > self.dim:
            return ModelForm.zero(self.manifold, min(deg, self.dim))
        raw: dict = {}
        for (l1, k1, w1, m1, mu1, c1), x in self.terms.items():
            for (l2, k2, w2, m2, mu2, c2), y in other.terms.items():
                s = merge_sign(l1, l2)
                if s == 0:
                    continue
                m = m1 + m2
                if m > MAX_T_DEGREE:
                    raise ProfileOverflowError(f"t-degree {m} exceeds the cap {MAX_T_DEGREE}")
                cut = _cut_mul(c1, c2)
                if cut is None:
                    continue
                legs = tuple(sorted(l1 + l2))
                coef = x * y if s > 0 else -(x * y)
                if k1 == "c" and not any(w1):
                    parts = [(2, k2, w2)]
                elif k2 == "c" and not any(w2):
                    parts = [(2, k1, w1)]
                else:
                    parts = _trig_product(k1, w1, k2, w2)
                for f, kind, w in parts:
                    sgn, kind, w = _canon_mode(kind, w)
                    if sgn == 0:
                        continue
                    val = _half(coef * f * sgn)
                    key = (legs, kind, w, m, mu1 + mu2, cut)
                    raw[key] = raw.get(key, 0) + val
        return ModelForm(self.manifold, deg, raw)

    def partial(self, j: int) -> "ModelForm":
        """Coefficient-wise derivative ∂/∂x^j (legs unchanged)."""
        raw: dict = {}
        if j == self.manifold.t_index:
            for (legs, kind, k, m, mu, cut), c in self.terms.items():
                if m:
                    key = (legs, kind, k, m - 1, mu, cut)
                    raw[key] = raw.get(key, 0) + c * m
                if mu != 0:
                    key = (legs, kind, k, m, mu, cut)
                    raw[key] = raw.get(key, 0) - c * mu
                for i, ((a, b, jj), p) in enumerate(cut):
                    d = dict(cut)
                    d[(a, b, jj)] = p - 1
                    d[(a, b, jj + 1)] = d.get((a, b, jj + 1), 0) + 1
                    nc = _canon_cut(d)
                    if nc is None:
                        continue
                    key = (legs, kind, k, m, mu, nc)
                    raw[key] = raw.get(key, 0) + c * p
            return ModelForm(self.manifold, self.degree, raw)
        for (legs, kind, k, m, mu, cut), c in self.terms.items():
            kj = k[j]
            if kj == 0:
                continue
            # d/dx cos(k.x) = -k_j sin, d/dx sin = k_j cos
            nk, val = ("s", -c * kj) if kind == "c" else ("c", c * kj)
            key = (legs, nk, k, m, mu, cut)
            raw[key] = raw.get(key, 0) + val
        return ModelForm(self.manifold, self.degree, raw)

    def d(self) -> "ModelForm":
        if self.degree == self.dim:
            return ModelForm.zero(self.manifold, self.dim)
        out = ModelForm.zero(self.manifold, self.degree + 1)
        for j in range(self.dim):
            dj = self.partial(j)
            if dj.is_zero():
                continue
            out = out + ModelForm.term(self.manifold, (j,), 1).wedge(dj)
        return out

    def interior_coord(self, j: int) -> "ModelForm":
        """Contraction with the coordinate vector field ∂/∂x^j."""
        if self.degree == 0:
            raise ValueError("cannot contract a function")
        raw: dict = {}
        for (legs, kind, k, m, mu, cut), c in self.terms.items():
            if j not in legs:
                continue
            p = legs.index(j)
            key = (legs[:p] + legs[p + 1:], kind, k, m, mu, cut)
            raw[key] = raw.get(key, 0) + (-c if p & 1 else c)
        return ModelForm(self.manifold, self.degree - 1, raw)

    def drop_coordinate_leg(self, j: int) -> "ModelForm":
        """Terms without a dx^j leg."""
        return ModelForm(self.manifold, self.degree,
                         {k: v for k, v in self.terms.items() if j not in k[0]})

    # -- t-profile bookkeeping ------------------------------------------
    def cut_keys(self) -> set:
        return {f for key in self.terms for f, _ in key[5]}

    def substitute_beyond(self, t0) -> "ModelForm":
        """The form as it is for t >= t0 (every cutoff factor must be constant there)."""
        raw: dict = {}
        for (legs, kind, k, m, mu, cut), c in self.terms.items():
            val = c
            for (a, b, j), p in cut:
                if t0 < b:
                    raise ValueError(f"cutoff ({a}, {b}) is not constant for t >= {t0}")
                if j >= 1:
                    val = 0
            if val != 0:
                key = (legs, kind, k, m, mu, ())
                raw[key] = raw.get(key, 0) + val
        return ModelForm(self.manifold, self.degree, raw, self.rate)

    def restrict_below(self, t1) -> "ModelForm":
        """Terms that can be nonzero somewhere in t <= t1 (factors starting at or after t1 vanish there)."""
        keep = {}
        for key, c in self.terms.items():
            if any(a >= t1 for (a, b, j), _ in key[5]):
                continue
            keep[key] = c
        return ModelForm(self.manifold, self.degree, keep)

    def restrict_above(self, t2) -> "ModelForm":
        """The form on t >= t2, substituting every cutoff factor that is constant there."""
        raw: dict = {}
        for (legs, kind, k, m, mu, cut), c in self.terms.items():
            rest = []
            val = c
            for (a, b, j), p in cut:
                if b <= t2:
                    if j >= 1:
                        val = 0
                else:
                    rest.append(((a, b, j), p))
            if val != 0:
                key = (legs, kind, k, m, mu, _canon_cut(dict(rest)))
                raw[key] = raw.get(key, 0) + val
        return ModelForm(self.manifold, self.degree, raw)

    def decay_rate(self):
        """Smallest exponential rate of the non-limit part (inf if compactly supported)."""
        rates = [mu for (legs, kind, k, m, mu, cut) in self.terms if mu != 0]
        return min(rates, default=INF)

    def declared_rate(self):
        return self.rate if self.rate is not None else self.decay_rate()

    def evaluate(self, points: Mapping[str, np.ndarray]) -> np.ndarray:
        """Components (..., C(n, k)) at broadcastable coordinate arrays."""
        arrays = {name: np.asarray(points.get(name, 0.0), dtype=float) for name in self.manifold.coords}
        shape = np.broadcast(*arrays.values()).shape
        idx = basis_index(self.dim, self.degree)
        out = np.zeros(shape + (len(idx),))
        X = [arrays[name] for name in self.manifold.coords]
        t = arrays["t"] if self.manifold.t_index is not None else None
        for (legs, kind, k, m, mu, cut), c in self.terms.items():
            phase = sum(kj * X[j] for j, kj in enumerate(k) if kj)
            val = np.cos(phase) if kind == "c" else np.sin(phase)
            val = float(c) * np.broadcast_to(np.asarray(val, dtype=float), shape)
            if t is not None:
                prof = t ** m * np.exp(-float(mu) * t)
                for (a, b, j), p in cut:
                    prof = prof * cutoff(t, a, b, j) ** p
                val = val * prof
            out[..., idx[legs]] += val
        return out

    # -- serialization --------------------------------------------------
    def to_json(self) -> dict:
        terms = []
        for (legs, kind, k, m, mu, cut), c in sorted(self.terms.items(), key=lambda kv: repr(kv[0])):
            terms.append({
                "legs": list(legs), "trig": kind, "k": list(k), "m": m, "mu": la.scalar_repr(mu),
                "cut": [[la.scalar_repr(a), la.scalar_repr(b), j, p] for (a, b, j), p in cut],
                "coef": la.scalar_repr(c),
            })
        return {"schema": SCHEMA, "manifold": self.manifold.to_json(), "degree": self.degree,
                "rate": None if self.rate is None else la.scalar_repr(self.rate), "terms": terms}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, d: Mapping) -> "ModelForm":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported schema {d.get('schema')!r}")
        man = ModelManifold.from_json(d["manifold"])
        terms = {}
        for t in d["terms"]:
            cut = tuple(((la.scalar_parse(a), la.scalar_parse(b), int(j)), int(p)) for a, b, j, p in t["cut"])
            key = (tuple(t["legs"]), t["trig"], tuple(t["k"]), int(t["m"]), la.scalar_parse(t["mu"]), cut)
            terms[key] = la.scalar_parse(t["coef"])
        rate = None if d.get("rate") is None else la.scalar_parse(d["rate"])
        return cls(man, int(d["degree"]), terms, rate)

    @classmethod
    def loads(cls, s: str) -> "ModelForm":
        return cls.from_json(json.loads(s))


def _zero_mu(c):
    return la.q(0) if _is_exact(c) else 0.0


# ---------------------------------------------------------------------------
# operations

def exterior_d(a: ModelForm) -> ModelForm:
    return a.d()


def wedge(a: ModelForm, b: ModelForm) -> ModelForm:
    return a.wedge(b)


def harmonic_project(a: ModelForm) -> ModelForm:
    """Zero Fourier mode of a form on a flat torus (the harmonic representative of its class)."""
    if a.manifold.kind != "torus":
        raise ValueError("harmonic_project needs a torus; use asymptotic_limit on cylinders")
    return ModelForm(a.manifold, a.degree,
                     {k: v for k, v in a.terms.items() if k[1] == "c" and not any(k[2])})


def class_vector(a: ModelForm) -> AltForm:
    """Harmonic part as a constant AltForm."""
    h = harmonic_project(a)
    return AltForm(a.dim, a.degree, {k[0]: v for k, v in h.terms.items()})


def asymptotic_limit(a: ModelForm) -> ModelForm:
    """Translation-invariant limit t → ∞ (on a torus: the form itself)."""
    if a.manifold.kind != "cylinder":
        return a
    raw: dict = {}
    for (legs, kind, k, m, mu, cut), c in a.terms.items():
        if mu > 0:
            continue
        if mu < 0 or m > 0:
            raise NotDecayingError("form is not asymptotically translation-invariant")
        if any(j >= 1 for (aa, b, j), _ in cut):
            continue
        key = (legs, kind, k, 0, mu, ())
        raw[key] = raw.get(key, 0) + c
    return ModelForm(a.manifold, a.degree, raw)


def dt_leg_part(a: ModelForm) -> ModelForm:
    """Terms carrying a dt leg (flagged part of a limit)."""
    ti = a.manifold.t_index
    if ti is None:
        return ModelForm.zero(a.manifold, a.degree)
    return ModelForm(a.manifold, a.degree, {k: v for k, v in a.terms.items() if ti in k[0]})


def _tail_integral(m: int, mu, c):
    """-∫_t^∞ s^m e^{-mu s} ds · c = -c e^{-mu t} Σ_i m!/i! t^i / mu^{m-i+1}, as (i, coef) pairs."""
    out = []
    for i in range(m + 1):
        f = math.factorial(m) // math.factorial(i)
        denom = mu ** (m - i + 1)
        out.append((i, -(c * f) / denom))
    return out


def exact_primitive_on_end(a: ModelForm, t0=None) -> tuple[ModelForm, object]:
    """eta with d eta = a on {t >= t0}, by eta = -∫_t^∞ ι_{∂t} a.

    ``t0`` defaults to the end of the last cutoff ramp in ``a``; the input must
    be closed with vanishing limit. Returns (eta, t0).
    """
    man = a.manifold
    if man.kind != "cylinder":
        raise ValueError("exact_primitive_on_end needs a cylinder")
    if not a.d().is_zero() and a.d().max_abs() > (0 if a.is_exact() else 1e-12):
        raise NotClosedError("input is not closed")
    if not asymptotic_limit(a).is_zero():
        raise NotDecayingError("input has a nonzero translation-invariant limit")
    if a.degree == 0:
        raise ValueError("a closed decaying function is zero; nothing to integrate")
    if t0 is None:
        t0 = max((b for (aa, b, j) in a.cut_keys()), default=la.q(0) if a.is_exact() else 0.0)
    sub = a.substitute_beyond(t0)
    ia = sub.interior_coord(man.t_index)
    raw: dict = {}
    for (legs, kind, k, m, mu, cut), c in ia.terms.items():
        if mu <= 0:
            raise NotDecayingError("non-decaying term in a closed decaying form")
        for i, val in _tail_integral(m, mu, c):
            key = (legs, kind, k, i, mu, ())
            raw[key] = raw.get(key, 0) + val
    return ModelForm(man, a.degree - 1, raw), t0


def s1_invariance_defect(a: ModelForm) -> float:
    """Coefficient norm of all terms with a nonzero theta wave number."""
    ti = a.manifold.theta_index
    if ti is None:
        raise ValueError("manifold has no theta coordinate")
    return math.sqrt(sum(float(c) ** 2 for k, c in a.terms.items() if k[2][ti] != 0))


def _cutoff_psi():
    return ((la.q(0), la.q(1), 0), 1)


def weighted_norm(a: ModelForm, delta, k: int = 0, x_points: int = 16, t_max: float = 40.0,
                  t_points: int = 4001) -> float:
    """‖(1-ψ)a + ψ e^{δt}(a - ã)‖_{C^k} + ‖ã‖_{C^k}, with ψ = step on [0, 1].

    Sup norms are taken over a fixed sample lattice: ``x_points`` per periodic
    direction that carries a wave number, and a t grid on [0, t_max].
    """
    if a.manifold.kind != "cylinder":
        raise ValueError("weighted_norm needs a cylinder")
    rate = a.declared_rate()
    if not delta < rate:
        raise NotDecayingError(f"delta = {delta} is not below the decay rate {rate}; the norm is infinite")
    man = a.manifold
    lim = asymptotic_limit(a)
    psi = ModelForm.term(man, (), 1, cut=(_cutoff_psi(),))
    one = ModelForm.term(man, (), 1)
    grow = ModelForm.term(man, (), 1, mu=-_num(delta))
    expr = (one - psi).wedge(a) + psi.wedge(grow).wedge(a - lim)
    active = sorted({j for key in expr.terms for j, kj in enumerate(key[2]) if kj}
                    | {j for key in lim.terms for j, kj in enumerate(key[2]) if kj})
    xs = np.arange(x_points) * (2 * np.pi / x_points)
    grids = np.meshgrid(*([xs] * len(active)), np.linspace(0.0, t_max, t_points), indexing="ij")
    pts = {man.coords[j]: grids[i] for i, j in enumerate(active)}
    pts["t"] = grids[-1]
    return _ck_sup(expr, pts, k) + _ck_sup(lim, pts, k)


def _ck_sup(a: ModelForm, pts, k: int) -> float:
    """max over multi-indices |β| <= k of the sup of the pointwise Euclidean norm of ∂^β a."""
    best = 0.0
    frontier = [a]
    for order in range(k + 1):
        nxt = []
        for f in frontier:
            if f.is_zero():
                continue
            vals = f.evaluate(pts)
            best = max(best, float(np.max(np.sqrt(np.sum(vals ** 2, axis=-1)), initial=0.0)))
            if order < k:
                nxt.extend(f.partial(j) for j in range(f.dim))
        frontier = nxt
    return best


def random_model_form(rng: np.random.Generator, manifold: ModelManifold, degree: int,
                      n_terms: int = 4, max_k: int = 2, active: tuple[int, ...] | None = None,
                      rates=(1, 2), bump: bool = False, max_m: int = 1) -> ModelForm:
    """Random exact form in the family (decaying profiles on cylinders)."""
    n = manifold.dim
    legs_all = basis(n, degree)
    if active is None:
        active = tuple(j for j in manifold.periodic if j != manifold.theta_index)[:2]
    out = ModelForm.zero(manifold, degree)
    for _ in range(n_terms):
        legs = legs_all[int(rng.integers(len(legs_all)))]
        k = [0] * n
        for j in active:
            k[j] = int(rng.integers(-max_k, max_k + 1))
        kind = "c" if rng.random() < 0.5 else "s"
        coef = la.q(int(rng.integers(-8, 9)), 4)
        kw = {}
        if manifold.kind == "cylinder":
            kw["m"] = int(rng.integers(0, max_m + 1))
            kw["mu"] = la.q(rates[int(rng.integers(len(rates)))])
            if bump:
                kw["cut"] = (((la.q(0), la.q(1), 0), 1),)
        out = out + ModelForm.term(manifold, legs, coef, kind=kind, k=tuple(k), **kw)
    return out


def random_constant_form(rng: np.random.Generator, manifold: ModelManifold, degree: int,
                         no_leg: tuple[int, ...] = ()) -> ModelForm:
    out = {}
    for I in basis(manifold.dim, degree):
        if set(I) & set(no_leg):
            continue
        v = int(rng.integers(-4, 5))
        if v:
            out[I] = la.q(v, 2)
    return ModelForm.constant(manifold, AltForm(manifold.dim, degree, out))


def grid_points(manifold: ModelManifold, counts: Mapping[str, int], t_values=None) -> dict:
    """Uniform periodic sample lattice (indexing 'ij' over the listed coordinates)."""
    names = [c for c in manifold.coords if c in counts or (c == "t" and t_values is not None)]
    axes = []
    for c in names:
        if c == "t":
            axes.append(np.asarray(t_values, dtype=float))
        else:
            axes.append(np.arange(counts[c]) * (2 * np.pi / counts[c]))
    mesh = np.meshgrid(*axes, indexing="ij")
    return dict(zip(names, mesh))


__all__ = ["ModelManifold", "ModelForm", "exterior_d", "harmonic_project", "asymptotic_limit",
           "exact_primitive_on_end", "s1_invariance_defect", "weighted_norm", "dt_leg_part",
           "class_vector", "random_model_form", "random_constant_form", "ProfileOverflowError",
           "NotDecayingError", "NotClosedError", "grid_points", "wedge"]

