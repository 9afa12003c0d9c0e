import numpy as np
import pytest
from hypothesis import given, strategies as st

from g2cy import linalg as la
from g2cy.exterior import AltForm, BilinearForm, OrientedFrame, e, hodge, inner, pullback_linear, random_form
from g2cy.g2 import (G2Structure, NotG2Error, TwoFormSplitting, b_form, b_form_bruteforce, is_positive_g2,
                     random_gl_plus, split2, standard_phi, standard_phi_form)

from conftest import seeds


def test_standard_terms_and_metric():
    phi = standard_phi_form()
    assert len(phi.coeffs) == 7
    assert phi[(0, 1, 2)] == 1 and phi[(1, 4, 6)] == -1 and phi[(2, 4, 5)] == -1
    G = standard_phi()
    assert np.all(G.metric.matrix == la.identity(7))
    assert G.scale == 1


def test_standard_psi_is_euclidean_star():
    G = standard_phi()
    assert G.psi == hodge(G.phi, BilinearForm.euclidean(7), OrientedFrame(7))


@given(seeds)
def test_b_form_matches_bruteforce(seed):
    phi = random_form(np.random.default_rng(seed), 7, 3, density=0.7)
    assert np.all(b_form(phi).matrix == b_form_bruteforce(phi).matrix)


@given(seeds)
def test_metric_naturality(seed):
    # oracle: the metric of A*phi_std is the pulled-back Euclidean metric A^T A
    A = random_gl_plus(np.random.default_rng(seed), 7)
    G = G2Structure.from_phi(pullback_linear(A, standard_phi_form()))
    assert np.all(G.metric.matrix == A.T @ A)
    assert G.vol == e(7, *range(7)) * la.det(A)


@given(seeds)
def test_psi_naturality_and_normalization(seed):
    A = random_gl_plus(np.random.default_rng(seed), 7)
    G = G2Structure.from_phi(pullback_linear(A, standard_phi_form()))
    assert G.psi == pullback_linear(A, standard_phi().psi)
    assert G.phi ^ G.psi == G.vol * 7
    assert inner(G.phi, G.phi, G.metric) == 7


@given(seeds)
def test_float_path_matches_exact(seed):
    rng = np.random.default_rng(seed)
    A = random_gl_plus(rng, 7, exact=False, spread=2)
    phi = pullback_linear(A, standard_phi_form().to_float())
    G = G2Structure.from_phi(phi)
    ref = G2Structure.from_phi(phi.to_exact())  # exact input, irrational scale
    assert np.allclose(G.metric.matrix, A.T @ A, atol=1e-11 * np.linalg.cond(A.T @ A))
    assert (G.psi - pullback_linear(A, standard_phi().psi.to_float())).max_abs() <= 1e-10 * max(1, G.psi.max_abs())
    assert (G.psi - ref.psi).max_abs() <= 1e-12 * max(1, G.psi.max_abs())


def test_orientation_reversing_pullback():
    A = la.identity(7)
    A[0, 0] = la.q(-1)
    G = G2Structure.from_phi(pullback_linear(A, standard_phi_form()))
    assert G.scale == -1
    assert np.all(G.metric.matrix == la.identity(7))


@pytest.mark.parametrize("phi", [e(7, 0, 1, 2), AltForm.zero(7, 3), e(7, 0, 1, 2) + e(7, 3, 4, 5)])
def test_degenerate_forms_rejected(phi):
    with pytest.raises(NotG2Error):
        G2Structure.from_phi(phi)
    assert not is_positive_g2(phi).positive


def test_indefinite_form_rejected():
    # split G2*: flip the signs of the terms through e^1 ∧ e^2 ∧ e^3 except the first
    phi = standard_phi_form()
    flipped = AltForm(7, 3, {k: (v if k == (0, 1, 2) or len(set(k) & {3, 4, 5, 6}) != 2 else -v)
                             for k, v in phi.coeffs.items()})
    rep = is_positive_g2(flipped)
    assert not rep.positive


@given(seeds)
def test_two_form_splitting(seed):
    rng = np.random.default_rng(seed)
    A = random_gl_plus(rng, 7)
    G = G2Structure.from_phi(pullback_linear(A, standard_phi_form()))
    sp = TwoFormSplitting.of(G)
    P = sp.projector
    assert np.all(P @ P == P)
    assert np.linalg.matrix_rank(P.astype(float)) == 7
    beta = random_form(rng, 7, 2)
    b7, b14 = sp.split(beta)
    assert b7 + b14 == beta
    assert inner(b7, b14, G.metric) == 0
    # Λ²_14 is the kernel of β ↦ β ∧ ψ (independent characterization)
    assert (b14 ^ G.psi).is_zero()
    # Λ²_7 satisfies *(φ∧β) = 2β
    assert hodge(G.phi ^ b7, G.metric, G.orientation) == b7 * 2


def test_split2_rejects_wrong_degree():
    with pytest.raises(ValueError):
        split2(standard_phi(), e(7, 0, 1, 2))
