import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from g2cy import linalg as la
from g2cy.correspondence import (CorrespondenceError, CorrespondenceTriple, Twisting, enumerate_triples, field_torsion,
                                 g2_from_su3, lift, random_triple, restrict, sign_twin, su3_from_g2,
                                 torsion_instance, twist_gauge, unit_conormals, untwist_cover)
from g2cy.exterior import AltForm, e, random_form
from g2cy.g2 import G2Structure, standard_phi, standard_phi_form
from g2cy.spectral import ModelForm, ModelManifold, random_model_form
from g2cy.su3 import SU3Structure, standard_su3, validate_su3

from conftest import seeds


def test_standard_decomposition():
    t = su3_from_g2(standard_phi())
    assert t.z.z == e(7, 0)
    assert t.su3 == standard_su3()


@given(seeds, st.integers(0, 6))
def test_lift_restrict_round_trip(seed, axis):
    a = random_form(np.random.default_rng(seed), 6, 3, density=0.5)
    assert restrict(lift(a, axis), axis) == a
    assert all(axis not in k for k in lift(a, axis).coeffs)


def test_restrict_rejects_circle_leg():
    with pytest.raises(CorrespondenceError):
        restrict(e(7, 0, 1), 0)


@given(seeds)
def test_round_trip_exact(seed):
    t = random_triple(np.random.default_rng(seed))
    G = g2_from_su3(t)
    assert su3_from_g2(G, orientation=t.z.orientation) == t
    # product metric z⊗z + g_(Omega, omega), compared against the G2 metric
    assert np.all(G.metric.matrix == t.metric().matrix)


@given(seeds)
def test_round_trip_float(seed):
    t = random_triple(np.random.default_rng(seed), exact=False)
    back = su3_from_g2(g2_from_su3(t), orientation=t.z.orientation)
    assert back.max_abs_diff(t) <= 1e-10


@given(seeds)
def test_two_triples(seed):
    t = random_triple(np.random.default_rng(seed))
    found = enumerate_triples(g2_from_su3(t))
    assert len(found) == 2
    twin = sign_twin(t)
    assert any(f == t for f in found) and any(f == twin for f in found)


@given(seeds)
def test_conormals_are_unit_and_orthogonal(seed):
    t = random_triple(np.random.default_rng(seed))
    G = g2_from_su3(t)
    ginv = G.metric.inverse_matrix()
    for n in unit_conormals(G):
        v = n.to_vector()
        assert v @ ginv @ v == 1
        w = ginv @ v  # the dual vector is normal to the hyperplane e^0 = 0 ... and proportional to e_0
        assert all(w[j] == 0 for j in range(1, 7))


@given(seeds)
def test_dual_four_form_identity(seed):
    t = random_triple(np.random.default_rng(seed))
    G = g2_from_su3(t)
    assert G.psi == t.psi_predicted(z_sign=-1)
    # the opposite-sign variant does not hold
    assert G.psi != t.psi_predicted(z_sign=1)


def test_invalid_input_rejected():
    s = standard_su3()
    bad = SU3Structure(s.re, s.im, s.omega * 2)
    with pytest.raises(CorrespondenceError):
        g2_from_su3(CorrespondenceTriple(Twisting(e(7, 0)), bad))
    with pytest.raises(CorrespondenceError):
        Twisting(e(7, 1))


def _torus():
    return ModelManifold.torus(("theta", "x1", "x2", "x3", "x4", "x5", "x6"))


def test_twist_gauge_and_untwist():
    man = _torus()
    L = la.q(3, 2)
    s = standard_su3()
    re = ModelForm.constant(man, lift(s.re))
    om = ModelForm.constant(man, lift(s.omega))
    f = ModelForm.term(man, (), la.q(1, 5), kind="s", k=(0, 1, 0, 0, 0, 0, 0))
    z = ModelForm.term(man, ("theta",), L) + f.d()
    phi = re + z.wedge(om)
    flat, f_back = untwist_cover(phi, z, L)
    assert f_back == f
    assert flat == re + ModelForm.term(man, ("theta",), L).wedge(om)
    assert twist_gauge(flat, f, L) == phi


@pytest.mark.parametrize("pattern", [(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)])
def test_torsion_dictionary(pattern):
    rng = np.random.default_rng(sum(p << i for i, p in enumerate(pattern)))
    inst = torsion_instance(rng, pattern)
    r = field_torsion(inst)
    assert r["flags"] == tuple(bool(p) for p in pattern)
    worst = max(r["d_phi"], r["d_psi"])
    if any(pattern):
        assert worst >= 1e-3
    else:
        assert worst <= 1e-10


def test_torsion_instance_is_su3_pointwise():
    inst = torsion_instance(np.random.default_rng(0), (1, 1, 1))
    pt = {c: np.array([0.3 * i + 0.1]) for i, c in enumerate(("theta", "x1", "x2", "x3", "x4", "x5", "x6"))}

    def at(f):
        return restrict(AltForm.from_vector(7, f.degree, f.evaluate(pt)[0]), 0, 1e-14)

    s = SU3Structure(at(inst.re), at(inst.im), at(inst.omega))
    assert validate_su3(s, tol=1e-10).ok
