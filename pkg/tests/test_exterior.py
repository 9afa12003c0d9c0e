import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from g2cy import linalg as la
from g2cy.exterior import (AltForm, BilinearForm, OrientedFrame, basis, e, evaluate, hodge, inner, interior,
                           pullback_linear, random_form, wedge)

from conftest import seeds


def _perm_sign(p):
    s = 1
    for i, j in itertools.combinations(range(len(p)), 2):
        if p[i] > p[j]:
            s = -s
    return s


def _eval_oracle(a, vectors):
    """Sum over permutations of the defining alternating sum, from coefficients only."""
    k = a.degree
    tot = 0
    for I, c in a.coeffs.items():
        for p in itertools.permutations(range(k)):
            term = c * _perm_sign(p)
            for slot, idx in zip(p, I):
                term = term * vectors[slot][idx]
            tot += term
    return tot


def _vec(rng, n):
    return tuple(la.q(int(rng.integers(-4, 5)), int(rng.integers(1, 3))) for _ in range(n))


def _spd(rng, n):
    A = la.matrix([[la.q(int(rng.integers(-3, 4)), 2) for _ in range(n)] for _ in range(n)]) + la.identity(n) * 3
    return BilinearForm(n, A.T @ A + la.identity(n))


@given(seeds, st.integers(2, 7), st.integers(0, 3), st.integers(0, 3))
def test_graded_commutativity(seed, n, p, q):
    rng = np.random.default_rng(seed)
    p, q = min(p, n), min(q, n)
    a, b = random_form(rng, n, p), random_form(rng, n, q)
    assert wedge(a, b) == wedge(b, a) * (-1) ** (p * q)


@given(seeds)
def test_wedge_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_form(rng, 6, k, density=0.5) for k in (1, 2, 2))
    assert wedge(wedge(a, b), c) == wedge(a, wedge(b, c))


@given(seeds, st.integers(1, 4))
def test_evaluate_matches_permutation_sum(seed, k):
    rng = np.random.default_rng(seed)
    a = random_form(rng, 5, k, density=0.6)
    vs = [_vec(rng, 5) for _ in range(k)]
    assert evaluate(a, vs) == _eval_oracle(a, vs)


@given(seeds, st.integers(1, 3))
def test_pullback_is_precomposition(seed, k):
    rng = np.random.default_rng(seed)
    n = 5
    A = la.matrix([[la.q(int(rng.integers(-3, 4)), 2) for _ in range(n)] for _ in range(n)])
    a = random_form(rng, n, k, density=0.6)
    vs = [_vec(rng, n) for _ in range(k)]
    assert evaluate(pullback_linear(A, a), vs) == evaluate(a, [tuple(A @ np.array(v, dtype=object)) for v in vs])


@given(seeds)
def test_interior_is_antiderivation(seed):
    rng = np.random.default_rng(seed)
    a, b = random_form(rng, 6, 2, density=0.5), random_form(rng, 6, 3, density=0.5)
    v = _vec(rng, 6)
    assert interior(v, wedge(a, b)) == wedge(interior(v, a), b) + wedge(a, interior(v, b))


def test_hodge_trivial_examples():
    g7 = BilinearForm.euclidean(7)
    o7 = OrientedFrame(7)
    assert hodge(e(7, 0, 1, 2), g7, o7) == e(7, 3, 4, 5, 6)
    assert hodge(AltForm.scalar(6, 1), BilinearForm.euclidean(6), OrientedFrame(6)) == e(6, *range(6))


@given(seeds, st.integers(0, 4))
def test_hodge_defining_identity(seed, k):
    rng = np.random.default_rng(seed)
    n = 4
    g = _spd(rng, n)
    if not la.is_exact(la.exact_sqrt(g.det())):
        g = BilinearForm(n, np.diag([la.q(int(x) ** 2) for x in rng.integers(1, 4, size=n)]).astype(object))
    o = OrientedFrame(n)
    a, b = random_form(rng, n, k), random_form(rng, n, k)
    vol = hodge(AltForm.scalar(n, 1), g, o)
    assert wedge(a, hodge(b, g, o)) == vol * inner(a, b, g)


@given(seeds, st.integers(0, 7))
def test_double_star_euclidean(seed, k):
    rng = np.random.default_rng(seed)
    g, o = BilinearForm.euclidean(7), OrientedFrame(7)
    a = random_form(rng, 7, k, density=0.4)
    assert hodge(hodge(a, g, o), g, o) == a * (-1) ** (k * (7 - k))


def test_form_validation():
    with pytest.raises(ValueError):
        AltForm(3, 4)
    with pytest.raises(ValueError):
        AltForm(3, 1, {(5,): 1})
    assert AltForm(3, 2, {(1, 0): 1}) == -e(3, 0, 1)
    assert AltForm(3, 2, {(1, 1): 1}).is_zero()


def test_basis_sizes():
    assert [len(basis(7, k)) for k in range(8)] == [1, 7, 21, 35, 35, 21, 7, 1]
