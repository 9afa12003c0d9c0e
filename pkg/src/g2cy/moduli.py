"""Cohomology coordinates on flat model tori.

Classes are zero-mode coefficient vectors in the monomial basis
dx^I (I increasing). On M × S^1 the circle is coordinate 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from . import linalg as la
from .exterior import AltForm, basis, wedge


def coordinate_names(dim: int) -> tuple[str, ...]:
    """(theta, x1..x5, t) on M × S^1, (x1..x5, t) on M, x0.. otherwise."""
    if dim == 7:
        return ("theta", "x1", "x2", "x3", "x4", "x5", "t")
    if dim == 6:
        return ("x1", "x2", "x3", "x4", "x5", "t")
    return tuple(f"x{i}" for i in range(dim))


@dataclass(frozen=True, eq=False)
class CohomologyVector:
    dim: int
    degree: int
    coords: tuple  # one entry per basis monomial

    def __post_init__(self):
        if len(self.coords) != comb(self.dim, self.degree):
            raise ValueError("coordinate count must be C(dim, degree)")

    @classmethod
    def from_altform(cls, a: AltForm) -> "CohomologyVector":
        return cls(a.dim, a.degree, tuple(a.coeffs.get(I, 0) for I in basis(a.dim, a.degree)))

    @classmethod
    def from_array(cls, dim: int, degree: int, v) -> "CohomologyVector":
        return cls(dim, degree, tuple(float(x) for x in v))

    def to_altform(self) -> AltForm:
        return AltForm(self.dim, self.degree, dict(zip(basis(self.dim, self.degree), self.coords)))

    def array(self) -> np.ndarray:
        return np.array([float(x) for x in self.coords])

    def labels(self) -> list[str]:
        names = coordinate_names(self.dim)
        return ["^".join("d" + names[i] for i in I) if I else "1" for I in basis(self.dim, self.degree)]

    def wedge(self, other: "CohomologyVector") -> "CohomologyVector":
        return CohomologyVector.from_altform(wedge(self.to_altform(), other.to_altform()))

    def __sub__(self, o: "CohomologyVector") -> "CohomologyVector":
        return CohomologyVector(self.dim, self.degree, tuple(a - b for a, b in zip(self.coords, o.coords)))

    def __add__(self, o: "CohomologyVector") -> "CohomologyVector":
        return CohomologyVector(self.dim, self.degree, tuple(a + b for a, b in zip(self.coords, o.coords)))

    def scale(self, c) -> "CohomologyVector":
        return CohomologyVector(self.dim, self.degree, tuple(c * a for a in self.coords))

    def max_abs(self) -> float:
        return max((abs(float(x)) for x in self.coords), default=0.0)

    def __eq__(self, o) -> bool:
        return isinstance(o, CohomologyVector) and (self.dim, self.degree, self.coords) == (o.dim, o.degree, o.coords)

    __hash__ = None

    def to_json(self) -> dict:
        return {"degree": self.degree, "dim": self.dim,
                "components": {lab: la.scalar_repr(x) for lab, x in zip(self.labels(), self.coords) if x != 0}}


@dataclass(frozen=True)
class TwistingClass:
    L: object
    v_class: CohomologyVector

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("twisting needs L > 0 (positive orientation)")


class ModuliError(ValueError):
    pass


def su3_coordinates(re, omega) -> tuple[CohomologyVector, CohomologyVector]:
    """([Re Omega], [omega]) for closed torus ModelForms."""
    from .spectral import class_vector
    for name, f in (("Re Omega", re), ("omega", omega)):
        if not f.d().is_zero():
            raise ModuliError(f"{name} is not closed")
    return CohomologyVector.from_altform(class_vector(re)), CohomologyVector.from_altform(class_vector(omega))


def kunneth3(c: CohomologyVector, axis: int = 0) -> tuple[CohomologyVector, CohomologyVector]:
    """Split a degree-3 class on M × S^1 into (H^3(M), H^2(M)) by the dtheta leg."""
    if c.degree != 3:
        raise ValueError("kunneth3 needs a degree-3 class")
    a = c.to_altform()
    no_leg = {}
    with_leg = {}
    for I, v in a.coeffs.items():
        if axis in I:
            rest = tuple(i for i in I if i != axis)
            sgn = -1 if I.index(axis) % 2 else 1
            with_leg[_drop(rest, axis)] = v if sgn > 0 else -v
        else:
            no_leg[_drop(I, axis)] = v
    n = c.dim - 1
    return (CohomologyVector.from_altform(AltForm(n, 3, no_leg)),
            CohomologyVector.from_altform(AltForm(n, 2, with_leg)))


def reassemble(h3: CohomologyVector, h2: CohomologyVector, axis: int = 0) -> CohomologyVector:
    """Inverse of kunneth3: a + dtheta ∧ b."""
    n = h3.dim + 1
    out = {}
    for I, v in h3.to_altform().coeffs.items():
        out[_lift(I, axis)] = v
    for I, v in h2.to_altform().coeffs.items():
        J = _lift(I, axis)
        K = tuple(sorted((axis,) + J))
        sgn = -1 if K.index(axis) % 2 else 1
        out[K] = out.get(K, 0) + (v if sgn > 0 else -v)
    return CohomologyVector.from_altform(AltForm(n, 3, out))


def _drop(I, axis):
    return tuple(i if i < axis else i - 1 for i in I)


def _lift(I, axis):
    return tuple(i if i < axis else i + 1 for i in I)


def twisting_class(z, theta_axis: int = 0, L_tol: float = 0.0) -> TwistingClass:
    """(L, [v]) for a closed S^1-invariant 1-form z = L dtheta + v on a model manifold."""
    from .spectral import asymptotic_limit, class_vector, s1_invariance_defect
    if z.degree != 1:
        raise ModuliError("z must be a 1-form")
    if not z.d().is_zero():
        raise ModuliError("z is not closed")
    if s1_invariance_defect(z) != 0:
        raise ModuliError("z is not S^1-invariant")
    man = z.manifold
    if man.kind == "cylinder":
        lim = asymptotic_limit(z)
        if not lim.interior_coord(man.t_index).is_zero():
            raise ModuliError("the limit of z has a nonzero dt component")
        base = lim
    else:
        base = z
    theta_part = z.interior_coord(theta_axis)
    # closed with an S^1-invariant coefficient: d(z(dtheta)) = 0, so it is constant
    consts = [c for key, c in theta_part.terms.items() if not any(key[2]) and not key[5] and key[4] == 0]
    if len(theta_part.terms) != len(consts):
        raise ModuliError("dtheta coefficient of z is not constant")
    L = consts[0] if consts else 0
    if not L > 0:
        raise ModuliError("L must be positive (positive orientation)")
    v = class_vector(base) if man.kind == "torus" else _cyl_class(base)
    coeffs = {tuple(i - 1 for i in I): c for I, c in v.coeffs.items() if theta_axis not in I}
    return TwistingClass(L, CohomologyVector.from_altform(AltForm(man.dim - 1, 1, coeffs)))


def _cyl_class(lim):
    from .spectral import ModelForm  # noqa: F401
    return AltForm(lim.dim, lim.degree, {k[0]: c for k, c in lim.terms.items() if k[1] == "c" and not any(k[2])})


def msu3_dimension(b1: int, b2: int, b3: int) -> int:
    for b in (b1, b2, b3):
        if isinstance(b, bool) or not isinstance(b, (int, np.integer)) or b < 0:
            raise ValueError("Betti numbers must be nonnegative integers")
    return int(b3 + b2 - b1 - 1)


def torus_betti(n: int) -> tuple[int, ...]:
    return tuple(comb(n, k) for k in range(n + 1))


@dataclass
class RelationCheck:
    name: str
    residual: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.residual <= self.tolerance

    def to_json(self) -> dict:
        return {"name": self.name, "residual": self.residual, "tolerance": self.tolerance, "pass": self.ok}


@dataclass
class GluedClassReport:
    re: CohomologyVector
    omega: CohomologyVector
    z: CohomologyVector
    re_pred: CohomologyVector
    omega_pred: CohomologyVector
    z_pred: CohomologyVector
    L: float
    L_prime: float
    c: float
    relations: list

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.relations)

    def to_json(self) -> dict:
        return {"L": self.L, "L_prime": self.L_prime, "c": self.c,
                "classes": {"re_omega": self.re.to_json(), "omega": self.omega.to_json(), "z": self.z.to_json()},
                "predicted": {"re_omega": self.re_pred.to_json(), "omega": self.omega_pred.to_json(),
                              "z": self.z_pred.to_json()},
                "relations": [r.to_json() for r in self.relations]}


def glued_class_check(re, omega, z, re_pred, omega_pred, z_pred, L, tol: float = 1e-8,
                      c_tol: float = 1e-6, theta_axis: int = 0) -> GluedClassReport:
    """Relations between measured glued classes and the cutoff-gluing predictions.

    Inputs are CohomologyVectors: re, omega on M (6 dims), z on M × S^1 (7 dims).
    """
    L_prime = float(z.coords[theta_axis])
    c = L_prime / float(L)
    rels = [
        RelationCheck("[Re Omega] = [gamma_T(Re Omega_1, Re Omega_2)]", (re - re_pred).max_abs(), tol),
        RelationCheck("[omega] = (1/c)[gamma_T(omega_1, omega_2)]", (omega - omega_pred.scale(1.0 / c)).max_abs(), tol),
        RelationCheck("[z] = c[gamma_T(z_1, z_2)]", (z - z_pred.scale(c)).max_abs(), tol),
        RelationCheck("[Re Omega] ∧ [omega] = 0", re.wedge(omega).max_abs(), tol),
        RelationCheck("|c - 1|", abs(c - 1.0), c_tol),
    ]
    return GluedClassReport(re, omega, z, re_pred, omega_pred, z_pred, float(L), L_prime, c, rels)


def drop_axis(c: CohomologyVector, axis: int = 0, tol: float = 0.0) -> CohomologyVector:
    """Restrict a class on M × S^1 with no dtheta leg to M."""
    a = c.to_altform()
    bad = [v for I, v in a.coeffs.items() if axis in I and abs(float(v)) > tol]
    if bad:
        raise ModuliError("class has a dtheta component; use kunneth3")
    out = {_drop(I, axis): v for I, v in a.coeffs.items() if axis not in I}
    return CohomologyVector.from_altform(AltForm(c.dim - 1, c.degree, out))
