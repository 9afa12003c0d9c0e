import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from g2cy import linalg as la
from g2cy.exterior import e
from g2cy.gluing import end_manifold
from g2cy.spectral import (ModelForm, ModelManifold, NotClosedError, NotDecayingError, asymptotic_limit,
                           class_vector, exact_primitive_on_end, harmonic_project, random_constant_form,
                           random_model_form, s1_invariance_defect, weighted_norm)

from conftest import seeds

COORDS = ("theta", "x1", "x2", "x3", "x4", "x5", "x6")


def _torus():
    return ModelManifold.torus(COORDS)


def _sample(form, pts):
    return form.evaluate(pts)


@given(seeds, st.integers(0, 5), st.booleans())
def test_d_squared_zero(seed, deg, cyl):
    rng = np.random.default_rng(seed)
    man = end_manifold() if cyl else _torus()
    a = random_model_form(rng, man, min(deg, man.dim - 2), n_terms=3)
    assert a.d().d().is_zero()


@given(seeds, st.integers(0, 2), st.integers(0, 2))
def test_leibniz(seed, p, q):
    rng = np.random.default_rng(seed)
    man = end_manifold()
    a = random_model_form(rng, man, p, n_terms=2, bump=True)
    b = random_model_form(rng, man, q, n_terms=2)
    assert a.wedge(b).d() == a.d().wedge(b) + a.wedge(b.d()) * (-1) ** p


@given(seeds)
def test_d_matches_finite_differences(seed):
    # independent oracle: central differences of sampled coefficients
    rng = np.random.default_rng(seed)
    man = end_manifold()
    f = random_model_form(rng, man, 0, n_terms=3, bump=True)
    pts = {c: np.array([rng.uniform(0, 6)]) for c in man.coords}
    pts["t"] = np.array([rng.uniform(0.1, 3)])
    h = 1e-6
    df = f.d().evaluate(pts)[0]
    for j, c in enumerate(man.coords):
        plus, minus = dict(pts), dict(pts)
        plus[c] = pts[c] + h
        minus[c] = pts[c] - h
        fd = (f.evaluate(plus)[0, 0] - f.evaluate(minus)[0, 0]) / (2 * h)
        assert abs(fd - df[j]) <= 1e-6 * max(1.0, abs(df[j]))


@given(seeds)
def test_json_round_trip(seed):
    a = random_model_form(np.random.default_rng(seed), end_manifold(), 2, n_terms=3, bump=True)
    b = ModelForm.loads(a.dumps())
    assert b == a
    assert json.loads(b.dumps()) == json.loads(a.dumps())


@given(seeds, st.integers(1, 3))
def test_harmonic_part_of_exact_vanishes(seed, deg):
    rng = np.random.default_rng(seed)
    man = _torus()
    c = random_constant_form(rng, man, deg)
    a = c + random_model_form(rng, man, deg - 1, n_terms=3).d()
    assert harmonic_project(a) == c
    assert class_vector(a) == class_vector(c)


@given(seeds, st.integers(1, 3))
def test_end_primitive(seed, deg):
    rng = np.random.default_rng(seed)
    a = random_model_form(rng, end_manifold(), deg - 1, n_terms=2, bump=True).d()
    if a.is_zero():
        return
    eta, t0 = exact_primitive_on_end(a)
    assert eta.d() == a.substitute_beyond(t0)
    assert asymptotic_limit(eta).is_zero()


def test_end_primitive_rejects_bad_input():
    man = end_manifold()
    with pytest.raises(NotDecayingError):
        exact_primitive_on_end(ModelForm.constant(man, e(7, 1)))
    nonclosed = ModelForm.term(man, ("x1",), 1, kind="c", k=(0, 0, 1, 0, 0, 0, 0), mu=1)
    with pytest.raises(NotClosedError):
        exact_primitive_on_end(nonclosed)


def test_s1_defect():
    man = _torus()
    inv = ModelForm.term(man, ("x1",), 1, kind="c", k=(0, 1, 0, 0, 0, 0, 0))
    dep = ModelForm.term(man, ("x1",), la.q(3, 4), kind="c", k=(1, 0, 0, 0, 0, 0, 0))
    assert s1_invariance_defect(inv) == 0
    assert s1_invariance_defect(inv + dep) == pytest.approx(0.75)


def test_weighted_norm_of_decaying_term():
    # e^{-2t} on the end has weighted norm sup e^{(δ-2)t} = 1 at t = 0 for δ < 2
    man = end_manifold()
    a = ModelForm.term(man, (), 1, mu=2)
    assert weighted_norm(a, 1) == pytest.approx(1.0, rel=1e-9)
