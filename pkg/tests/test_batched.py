import numpy as np
from hypothesis import given, strategies as st

from g2cy import batched as bt
from g2cy.correspondence import g2_from_su3, random_triple, su3_from_g2
from g2cy.exterior import AltForm, pullback_linear, random_form, wedge
from g2cy.g2 import G2Structure, random_gl_plus, standard_phi_form
from g2cy.su3 import SU3Structure, induced_metric, random_su3, standard_su3

from conftest import seeds


def _vec(a):
    return a.to_vector().astype(float)


def _phis(rng, n=4):
    out = []
    for _ in range(n):
        A = random_gl_plus(rng, 7, exact=False)
        out.append(_vec(pullback_linear(A, standard_phi_form().to_float())))
    return np.array(out)


@given(seeds, st.integers(0, 3), st.integers(0, 3))
def test_wedge_matches_sparse(seed, p, q):
    rng = np.random.default_rng(seed)
    a, b = random_form(rng, 7, p, exact=False), random_form(rng, 7, q, exact=False)
    got = bt.wedge(_vec(a)[None], _vec(b)[None], 7, p, q)[0]
    assert np.allclose(got, _vec(wedge(a, b)), atol=1e-13)


@given(seeds, st.integers(1, 4))
def test_pullback_matches_sparse(seed, k):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(7, 7))
    a = random_form(rng, 7, k, exact=False)
    assert np.allclose(bt.pullback(A[None], _vec(a)[None], k)[0], _vec(pullback_linear(A, a)), atol=1e-12)


@given(seeds)
def test_metric_and_psi_match_pointwise(seed):
    rng = np.random.default_rng(seed)
    phis = _phis(rng)
    g, s = bt.g2_metric(phis)
    psi = bt.g2_psi(phis)
    for i in range(len(phis)):
        G = G2Structure.from_phi(AltForm.from_vector(7, 3, phis[i]))
        assert np.allclose(g[i], G.metric.matrix, atol=1e-11)
        assert np.allclose(psi[i], _vec(G.psi), atol=1e-10)


@given(seeds)
def test_su3_split_matches_pointwise(seed):
    rng = np.random.default_rng(seed)
    ts = [random_triple(rng, exact=False) for _ in range(3)]
    phis = np.array([_vec(t.phi()) for t in ts])
    z, re, im, om = bt.su3_from_phi(phis)
    for i, t in enumerate(ts):
        assert np.allclose(z[i], _vec(t.z.z), atol=1e-10)
        assert np.allclose(re[i], _vec(t.su3.re), atol=1e-10)
        assert np.allclose(im[i], _vec(t.su3.im), atol=1e-10)
        assert np.allclose(om[i], _vec(t.su3.omega), atol=1e-10)
    assert np.allclose(bt.phi_from_su3(z, re, im, om), phis, atol=1e-12)
    assert np.allclose(bt.psi_from_su3(z, re, im, om), bt.g2_psi(phis), atol=1e-10)


@given(seeds)
def test_validate_agrees_with_pointwise(seed):
    rng = np.random.default_rng(seed)
    good = [random_su3(rng, exact=False)[0] for _ in range(3)]
    bad = SU3Structure(good[0].re, good[0].im, good[0].omega * 1.5)
    neg = SU3Structure(good[1].re, good[1].im, -good[1].omega)
    all_s = good + [bad, neg, good[2].conjugate()]
    re = np.array([_vec(s.re) for s in all_s])
    im = np.array([_vec(s.im) for s in all_s])
    om = np.array([_vec(s.omega) for s in all_s])
    v = bt.validate_su3(re, im, om)
    assert list(v["ok"]) == [True, True, True, False, False, True]
    gm = bt.metric_from_su3(re[:3], im[:3], om[:3])
    for i, s in enumerate(good):
        assert np.allclose(gm[i], induced_metric(s).matrix, atol=1e-11)


@given(seeds)
def test_linearization_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    phis = _phis(rng, 2)
    a = rng.normal(size=phis.shape)
    lin = bt.G2Linearization(phis)
    h = 1e-5
    fd = (bt.g2_psi(phis + h * a) - bt.g2_psi(phis - h * a)) / (2 * h)
    assert np.allclose(lin.apply(a), fd, rtol=1e-6, atol=1e-6 * np.max(np.abs(fd)))
    # transpose agrees with the explicit matrices
    M = bt.dstar_matrix(phis)[0]
    y = rng.normal(size=phis.shape)
    assert np.allclose(lin.apply(a), np.einsum("...ij,...j->...i", M, a), atol=1e-10)
    assert np.allclose(lin.apply_T(y), np.einsum("...ji,...j->...i", M, y), atol=1e-10)


def test_stability_matches_pointwise():
    from g2cy.su3 import stability_data
    s, _ = random_su3(np.random.default_rng(1), exact=False)
    K, lam = bt.stability(_vec(s.re)[None])
    ref = stability_data(s.re)
    assert np.allclose(K[0], ref.K.astype(float), atol=1e-12)
    assert np.isclose(lam[0], float(ref.lam))
