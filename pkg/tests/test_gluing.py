import json
from importlib.resources import files

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from g2cy import linalg as la
from g2cy.gluing import (ConfigError, GluingConfig, MatchingError, MatchingPair, end_manifold, flip_dt, gamma_T,
                         glue_su3_pair, match_check, parse_config, wedge_defect_primitive)
from g2cy.spectral import ModelForm, random_constant_form
from g2cy.suites import random_matching_pair

from conftest import seeds

T5 = la.q(5)


@given(seeds, st.integers(1, 3))
@settings(max_examples=10)
def test_gamma_closed_and_glues(seed, deg):
    g = gamma_T(random_matching_pair(np.random.default_rng(seed), deg), T5)
    assert g.is_closed()
    assert g.sides_agree()


@given(seeds, st.integers(1, 3))
@settings(max_examples=10)
def test_gamma_fixes_translation_invariant_pairs(seed, deg):
    c = random_constant_form(np.random.default_rng(seed), end_manifold(), deg)
    g = gamma_T(MatchingPair(c, flip_dt(c)), T5)
    assert g.side1 == c and g.side2 == flip_dt(c)


@given(seeds)
@settings(max_examples=10)
def test_gamma_is_linear(seed):
    rng = np.random.default_rng(seed)
    p, q = random_matching_pair(rng, 2), random_matching_pair(rng, 2)
    a, b = gamma_T(p + q, T5), gamma_T(p, T5) + gamma_T(q, T5)
    assert a.side1 == b.side1 and a.side2 == b.side2


@given(seeds, st.integers(1, 2), st.integers(1, 2))
@settings(max_examples=4)
def test_wedge_defect_primitive(seed, p, q):
    rng = np.random.default_rng(seed)
    w = wedge_defect_primitive(random_matching_pair(rng, p), random_matching_pair(rng, q), T5)
    assert w.certificate.ok
    # the harmonic part comes from quadrature along the neck, so it is zero up to roundoff
    assert all(abs(float(v)) <= 1e-10 for v in w.defect.harmonic().coeffs.values())


def test_match_check():
    rng = np.random.default_rng(0)
    p = random_matching_pair(rng, 2)
    assert match_check(p).matches
    c = random_constant_form(rng, end_manifold(), 2)
    bad = MatchingPair(p.alpha1 + c, p.alpha2)
    rep = match_check(bad)
    assert not rep.matches and rep.residual > 0
    with pytest.raises(MatchingError):
        MatchingPair(p.alpha1, random_matching_pair(rng, 1).alpha1)


@pytest.mark.parametrize("doc, field", [
    ({"twisting": {"L": 0}}, "twisting.L"),
    ({"twisting": {"L": "-1/2"}}, "twisting.L"),
    ({"T": 2}, "T"),
    ({"neck_points": 1}, "neck_points"),
    ({"bogus": 1}, "bogus"),
    ({"perturbations": [{"piece": 3, "coord": "x1", "amplitude": "1/50"}]}, "perturbations[0].piece"),
    ({"perturbations": [{"piece": 1, "coord": "x9", "amplitude": "1/50"}]}, "perturbations[0].coord"),
    ({"perturbations": [{"piece": 1, "coord": "x1", "amplitude": "abc"}]}, "perturbations[0].amplitude"),
    ({"twisting": {"harmonic": {"y": 1}}}, "twisting.harmonic"),
    ({"solver": {"tol": "x"}}, "solver.tol"),
])
def test_config_errors_name_the_field(doc, field):
    with pytest.raises(ConfigError, match=field.replace("[", r"\[").replace("]", r"\]")):
        parse_config(doc)


@pytest.mark.parametrize("name", ["flat", "perturbed"])
def test_bundled_configs_round_trip(name):
    cfg = GluingConfig.load(files("g2cy") / "configs" / f"{name}.json")
    again = parse_config(json.loads(json.dumps(cfg.to_json())))
    assert again.to_json() == cfg.to_json()


def test_flat_glue_is_constant():
    cfg = GluingConfig.load(files("g2cy") / "configs" / "flat.json")
    gp = glue_su3_pair(cfg)
    data = gp.phi_grid.data
    assert np.all(data == data.reshape(-1, 35)[0])
    assert gp.min_eig > 0.5
