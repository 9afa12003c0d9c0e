import numpy as np
import pytest
from hypothesis import given, strategies as st

from g2cy import linalg as la
from g2cy.correspondence import twist_gauge
from g2cy.exterior import AltForm, basis, e, wedge
from g2cy.moduli import (CohomologyVector, ModuliError, drop_axis, glued_class_check, kunneth3, msu3_dimension,
                         reassemble, su3_coordinates, torus_betti, twisting_class)
from g2cy.spectral import ModelForm, ModelManifold, random_model_form

from conftest import seeds

COORDS = ("theta", "x1", "x2", "x3", "x4", "x5", "x6")


def _class(rng, dim, degree):
    return CohomologyVector(dim, degree, tuple(la.q(int(rng.integers(-5, 6)), 3) for _ in basis(dim, degree)))


def test_dimension_formula():
    b = torus_betti(6)
    assert b == (1, 6, 15, 20, 15, 6, 1)
    assert msu3_dimension(b[1], b[2], b[3]) == 28
    with pytest.raises(ValueError):
        msu3_dimension(-1, 0, 0)


@given(seeds)
def test_kunneth_round_trip(seed):
    c = _class(np.random.default_rng(seed), 7, 3)
    h3, h2 = kunneth3(c)
    assert (h3.dim, h3.degree, h2.dim, h2.degree) == (6, 3, 6, 2)
    assert reassemble(h3, h2) == c


@given(seeds)
def test_kunneth_matches_wedge(seed):
    # oracle: c = lift(a) + dθ ∧ lift(b) built with the exterior algebra directly
    rng = np.random.default_rng(seed)
    a, b = _class(rng, 6, 3), _class(rng, 6, 2)
    from g2cy.correspondence import lift
    c = CohomologyVector.from_altform(lift(a.to_altform()) + wedge(e(7, 0), lift(b.to_altform())))
    assert kunneth3(c) == (a, b)


@given(seeds)
def test_class_wedge_is_cup_product(seed):
    rng = np.random.default_rng(seed)
    man = ModelManifold.torus(COORDS)
    from g2cy.spectral import class_vector, random_constant_form
    a = random_constant_form(rng, man, 1) + random_model_form(rng, man, 0, n_terms=2).d()
    b = random_constant_form(rng, man, 2) + random_model_form(rng, man, 1, n_terms=2).d()
    lhs = CohomologyVector.from_altform(class_vector(a.wedge(b)))
    rhs = CohomologyVector.from_altform(class_vector(a)).wedge(CohomologyVector.from_altform(class_vector(b)))
    assert lhs == rhs


def test_twisting_class_invariant_under_df_and_gauge():
    man = ModelManifold.torus(COORDS)
    L = la.q(3, 2)
    z = ModelForm.term(man, ("theta",), L) + ModelForm.term(man, ("x2",), la.q(1, 4))
    f = ModelForm.term(man, (), la.q(1, 7), kind="s", k=(0, 1, 0, 1, 0, 0, 0))
    tc = twisting_class(z)
    assert tc.L == L
    assert tc.v_class.coords == (0, la.q(1, 4), 0, 0, 0, 0)
    assert twisting_class(z + f.d()) == tc
    assert twisting_class(twist_gauge(z, f, L)) == tc


def test_twisting_class_rejects_bad_input():
    man = ModelManifold.torus(COORDS)
    with pytest.raises(ModuliError):
        twisting_class(ModelForm.term(man, ("theta",), -1))
    nonclosed = ModelForm.term(man, ("x1",), 1, kind="s", k=(0, 0, 1, 0, 0, 0, 0))
    with pytest.raises(ModuliError):
        twisting_class(ModelForm.term(man, ("theta",), 1) + nonclosed)


def test_su3_coordinates_ignore_exact_terms():
    from g2cy.su3 import standard_su3
    man = ModelManifold.torus(COORDS[1:], theta=None)
    s = standard_su3()
    re, om = ModelForm.constant(man, s.re), ModelForm.constant(man, s.omega)
    rng = np.random.default_rng(0)
    c0 = su3_coordinates(re, om)
    c1 = su3_coordinates(re + random_model_form(rng, man, 2, n_terms=2).d(), om + random_model_form(rng, man, 1).d())
    assert c0 == c1
    assert c0[0] == CohomologyVector.from_altform(s.re)


def test_drop_axis():
    c = CohomologyVector.from_altform(e(7, 1, 2))
    assert drop_axis(c) == CohomologyVector.from_altform(e(6, 0, 1))
    with pytest.raises(ModuliError):
        drop_axis(CohomologyVector.from_altform(e(7, 0, 2)))


def test_labels_use_coordinate_names():
    assert CohomologyVector.from_altform(e(7, 0, 1)).labels()[0] == "dtheta^dx1"
    assert CohomologyVector.from_altform(e(6, 5)).labels()[-1] == "dt"


def test_glued_class_check_consistent_c():
    from g2cy.su3 import standard_su3
    s = standard_su3()
    re = CohomologyVector.from_altform(s.re.to_float())
    om = CohomologyVector.from_altform(s.omega.to_float())
    c = 1.0 + 1e-9
    z_pred = CohomologyVector.from_altform(e(7, 0).to_float())
    rep = glued_class_check(re, om.scale(1 / c), z_pred.scale(c), re, om, z_pred, 1.0)
    assert rep.ok and abs(rep.c - c) < 1e-15
    bad = glued_class_check(re, om.scale(1.1), z_pred, re, om, z_pred, 1.0)
    assert not bad.ok
