"""Acceptance criteria 1-10. Each test records one PASS/FAIL line (see conftest)."""
import copy
import json
import time
from functools import lru_cache
from importlib.resources import files

import numpy as np
import pytest

from g2cy import linalg as la
from g2cy.correspondence import (enumerate_triples, field_torsion, g2_from_su3, random_triple, sign_twin,
                                 su3_from_g2, torsion_instance)
from g2cy.exterior import basis, inner, pullback_linear, random_form
from g2cy.g2 import G2Structure, TwoFormSplitting, random_gl_plus, standard_phi_form
from g2cy.gluing import gamma_T, parse_config, wedge_defect_primitive
from g2cy.grid import GridForm, GridSpec
from g2cy.moduli import CohomologyVector, kunneth3, msu3_dimension, reassemble, torus_betti
from g2cy.suites import exact_cosine, random_matching_pair
from g2cy.torsion import fd_order_check, glue_and_solve, random_exact_direction

N_TRIPLES = 500
N_SPLIT = 100
N_TORSION = 50
N_GLUE = 20
N_DIRECTIONS = 10
N_CLASSES = 100
FLOAT_TOL = 1e-10
SPLIT_TOL = 1e-12
TORSION_FREE_TOL = 1e-10
TORSION_SEPARATION = 1e-3
HARMONIC_TOL = 1e-10
SOLVE_TOL = 1e-8
MAX_NEWTON = 20
C_TOL = 1e-6
TWIST_TOL = 1e-8
MIN_ORDER = 1.9
RUNTIME_1 = 30.0
RUNTIME_7 = 120.0


def _rngs(tag: int, n: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence([2026, tag]).spawn(n)]


@lru_cache(maxsize=None)
def _triples(exact: bool):
    return tuple(random_triple(r, exact=exact) for r in _rngs(1 if exact else 2, N_TRIPLES))


@lru_cache(maxsize=None)
def _structures():
    return tuple(g2_from_su3(t) for t in _triples(True))


def _perturbed_doc():
    return json.loads((files("g2cy") / "configs" / "perturbed.json").read_text())


@lru_cache(maxsize=None)
def _glue(doc_json: str):
    t0 = time.perf_counter()
    rep = glue_and_solve(parse_config(json.loads(doc_json)))
    return rep, time.perf_counter() - t0


def test_criterion_1_round_trip_rational(acceptance):
    t0 = time.perf_counter()
    triples = _triples(True)
    bad_trip = bad_metric = 0
    for t, G in zip(triples, _structures()):
        bad_trip += su3_from_g2(G, orientation=t.z.orientation) != t
        bad_metric += not np.all(G.metric.matrix == t.metric().matrix)
    dt = time.perf_counter() - t0
    ok = bad_trip == 0 and bad_metric == 0 and dt < RUNTIME_1
    acceptance("1 (rational)", ok, f"{N_TRIPLES} triples, {bad_trip} round-trip mismatches, {bad_metric} "
                                   f"product-metric mismatches, exact comparison, {dt:.1f} s (limit {RUNTIME_1:.0f} s)")
    assert ok


def test_criterion_1_round_trip_float(acceptance):
    t0 = time.perf_counter()
    worst = worst_metric = 0.0
    for t in _triples(False):
        G = g2_from_su3(t)
        worst = max(worst, su3_from_g2(G, orientation=t.z.orientation).max_abs_diff(t))
        worst_metric = max(worst_metric, float(np.max(np.abs(G.metric.matrix - t.metric().matrix))))
    dt = time.perf_counter() - t0
    ok = worst <= FLOAT_TOL and worst_metric <= FLOAT_TOL and dt < RUNTIME_1
    acceptance("1 (float)", ok, f"{N_TRIPLES} triples, max round-trip error {worst:.1e}, max product-metric error "
                                f"{worst_metric:.1e} (tol {FLOAT_TOL:.0e}), {dt:.1f} s (limit {RUNTIME_1:.0f} s)")
    assert ok


def test_criterion_2_two_triples(acceptance):
    wrong = 0
    for t, G in zip(_triples(True), _structures()):
        found = enumerate_triples(G)
        twin = sign_twin(t)
        wrong += not (len(found) == 2 and any(f == t for f in found) and any(f == twin for f in found))
    acceptance("2", wrong == 0, f"{N_TRIPLES} structures, {wrong} where the enumeration is not exactly "
                                "{(z, Omega, omega), (-z, conj Omega, -omega)}")
    assert wrong == 0


def test_criterion_3_dual_form_as_stated(acceptance):
    holds = sum(G.psi == t.psi_predicted(z_sign=+1) for t, G in zip(_triples(True), _structures()))
    ok = holds == N_TRIPLES
    acceptance("3 (as stated, *phi = ½ω∧ω + z∧ImΩ)", ok,
               f"holds exactly on {holds}/{N_TRIPLES}; the pinned conventions force the minus sign (see 3 pinned)")
    assert ok


def test_criterion_3_dual_form_pinned_sign(acceptance):
    holds = sum(G.psi == t.psi_predicted(z_sign=-1) for t, G in zip(_triples(True), _structures()))
    ok = holds == N_TRIPLES
    acceptance("3 (pinned, *phi = ½ω∧ω - z∧ImΩ)", ok, f"holds exactly on {holds}/{N_TRIPLES}")
    assert ok


def _cosine(a, b, g):
    nrm = float(inner(a, a, g)) * float(inner(b, b, g))
    return abs(float(inner(a, b, g))) / np.sqrt(nrm) if nrm > 0 else 0.0


def test_criterion_4_two_form_splitting(acceptance):
    worst_orth = worst_idem = worst_float = 0.0
    dims_ok = True
    for i, rng in enumerate(_rngs(4, N_SPLIT)):
        exact = i % 2 == 0
        A = random_gl_plus(rng, 7, exact=exact)
        phi = standard_phi_form() if exact else standard_phi_form().to_float()
        G = G2Structure.from_phi(pullback_linear(A, phi))
        sp = TwoFormSplitting.of(G)
        P = sp.projector
        rank = int(np.linalg.matrix_rank(P.astype(float), tol=1e-9))
        dims_ok &= (rank, 21 - rank) == (7, 14)
        if exact:
            idem = 0.0 if np.all(P @ P == P) else float(np.max(np.abs((P @ P - P).astype(float))))
        else:
            idem = float(np.max(np.abs(P @ P - P)))
        b7, b14 = sp.split(random_form(rng, 7, 2, exact=exact))
        worst_orth = max(worst_orth, exact_cosine(b7, b14, G))
        worst_float = max(worst_float, _cosine(b7, b14, G.metric))
        worst_idem = max(worst_idem, idem)
    ok = dims_ok and worst_orth <= SPLIT_TOL and worst_idem <= SPLIT_TOL
    acceptance("4", ok, f"{N_SPLIT} random positive phi (half rational, half float), dims (7, 14) "
                        f"{'everywhere' if dims_ok else 'NOT everywhere'}, max cos(b7, b14) {worst_orth:.1e} "
                        f"(float-evaluated metric: {worst_float:.1e}), "
                        f"max idempotence defect {worst_idem:.1e} (tol {SPLIT_TOL:.0e})")
    assert ok


def test_criterion_5_torsion_dictionary(acceptance):
    patterns = [(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)]
    free_worst, torsion_least, wrong = 0.0, np.inf, 0
    for i, rng in enumerate(_rngs(5, N_TORSION)):
        pattern = tuple(bool(x) for x in patterns[i % len(patterns)])
        r = field_torsion(torsion_instance(rng, pattern))
        res = max(r["d_phi"], r["d_psi"])
        wrong += r["flags"] != pattern
        if any(pattern):
            torsion_least = min(torsion_least, res)
        else:
            free_worst = max(free_worst, res)
    ok = wrong == 0 and free_worst <= TORSION_FREE_TOL and torsion_least >= TORSION_SEPARATION
    acceptance("5", ok, f"{N_TORSION} instances over all 8 patterns, torsion-free max residual {free_worst:.1e} "
                        f"(tol {TORSION_FREE_TOL:.0e}), otherwise min residual {torsion_least:.1e} "
                        f"(need >= {TORSION_SEPARATION:.0e}), {wrong} flag mismatches")
    assert ok


def test_criterion_6_gluing_identities(acceptance):
    T = la.q(5)
    not_closed = bad_cert = 0
    worst_h = 0.0
    for i, rng in enumerate(_rngs(6, N_GLUE)):
        p, q = 1 + i % 2, 1 + (i // 2) % 2
        pa, pb = random_matching_pair(rng, p), random_matching_pair(rng, q)
        not_closed += not gamma_T(pa, T).is_closed()
        w = wedge_defect_primitive(pa, pb, T)
        bad_cert += not w.certificate.ok
        worst_h = max([worst_h] + [abs(float(v)) for v in w.defect.harmonic().coeffs.values()])
    ok = not_closed == 0 and bad_cert == 0 and worst_h <= HARMONIC_TOL
    acceptance("6", ok, f"{N_GLUE} matching configs, {not_closed} gamma_T outputs not closed, {bad_cert} failed support "
                        f"certificates, max harmonic part of defect {worst_h:.1e} (tol {HARMONIC_TOL:.0e})")
    assert ok


def test_criterion_7_glue_and_solve(acceptance):
    rep, dt = _glue(json.dumps(_perturbed_doc()))
    st = rep.state
    rels = {r.name: r for r in rep.classes.relations}
    checks = {
        "converged": st.converged and st.iterations <= MAX_NEWTON and st.residual <= SOLVE_TOL,
        "s1": rep.phi.theta_defect(0) == 0.0,
        "su3": rep.validation["all_ok"] and max(rep.validation[k] for k in ("i", "iii", "iv")) <= SOLVE_TOL,
        "classes": rep.classes.ok,
        "c": abs(rep.classes.c - 1.0) <= C_TOL,
        "time": dt < RUNTIME_7,
    }
    ok = all(checks.values())
    re_rel = rels["[Re Omega] = [gamma_T(Re Omega_1, Re Omega_2)]"].residual
    om_rel = rels["[omega] = (1/c)[gamma_T(omega_1, omega_2)]"].residual
    acceptance("7", ok, f"{st.iterations} Newton steps, projected residual {st.residual:.1e} (tol {SOLVE_TOL:.0e}), "
                        f"full residual {st.history[-1].full_residual:.1e}, truncation floor {st.truncation_floor:.1e}, "
                        f"S1 defect {rep.phi.theta_defect(0)}, SU(3) residual "
                        f"{max(rep.validation[k] for k in ('i', 'iii', 'iv')):.1e}, [Re Omega] gap {re_rel:.1e}, "
                        f"[omega] gap {om_rel:.1e}, |c - 1| = {abs(rep.classes.c - 1):.1e}, {dt:.1f} s "
                        f"(limit {RUNTIME_7:.0f} s); failed: {[k for k, v in checks.items() if not v] or 'none'}")
    assert ok


def test_criterion_8_twisting_independence(acceptance):
    base = _perturbed_doc()
    moved = copy.deepcopy(base)
    moved["twisting"]["harmonic"] = dict(base["twisting"]["harmonic"], x1="1/20")
    moved["twisting"]["df"] = base["twisting"]["df"] + [{"amplitude": "1/30", "k": {"x2": 1}, "trig": "c"}]
    A, _ = _glue(json.dumps(base))
    B, _ = _glue(json.dumps(moved))
    ca, cb = A.classes, B.classes
    d_re = (ca.re - cb.re).max_abs()
    d_om = (ca.omega - cb.omega).max_abs()
    shift = np.zeros(7)
    shift[1] = 1 / 20  # harmonic x1 shift; df terms carry no class
    d_z = float(np.max(np.abs((cb.z - ca.z).array() - ca.c * shift)))
    ok = A.ok and B.ok and d_re <= TWIST_TOL and d_om <= TWIST_TOL and d_z <= TWIST_TOL
    acceptance("8", ok, f"|Δ[Re Omega]| {d_re:.1e}, |Δ[omega]| {d_om:.1e} (tol {TWIST_TOL:.0e}), "
                        f"|Δ[z] - c·shift| {d_z:.1e} with c = {ca.c:.12f}, both runs ok: {A.ok and B.ok}")
    assert ok


def test_criterion_9_derivative_order(acceptance):
    spec = GridSpec((2 * np.pi,) * 7, (1, 6, 6, 1, 1, 1, 6))
    base = GridForm.constant(spec, standard_phi_form().to_float())
    orders = []
    for rng in _rngs(9, N_DIRECTIONS):
        phi = base + random_exact_direction(rng, spec, amplitude=0.05)
        r = fd_order_check(phi, random_exact_direction(rng, spec), h0=1e-2, halvings=2)
        orders.append(min(r["orders"]))
    ok = min(orders) >= MIN_ORDER
    acceptance("9", ok, f"{N_DIRECTIONS} directions, observed orders {min(orders):.3f} to {max(orders):.3f} "
                        f"(need >= {MIN_ORDER})")
    assert ok


def test_criterion_10_dimension_and_kunneth(acceptance):
    b = torus_betti(6)
    dim = msu3_dimension(b[1], b[2], b[3])
    bad = 0
    for rng in _rngs(10, N_CLASSES):
        c = CohomologyVector(7, 3, tuple(la.q(int(rng.integers(-9, 10)), int(rng.integers(1, 6)))
                                         for _ in basis(7, 3)))
        bad += reassemble(*kunneth3(c)) != c
    ok = dim == 28 and bad == 0
    acceptance("10", ok, f"dim M_SU(3)(T^6) = {dim} (expect 28), Künneth round-trip failures {bad}/{N_CLASSES}")
    assert ok
