import numpy as np
import pytest
from hypothesis import given, settings

from g2cy.g2 import standard_phi_form
from g2cy.grid import GridForm, GridSpec, rms
from g2cy.torsion import (GaugeReduction, NotConvergedError, PositivityError, SolveOptions, expand_axis,
                          fd_order_check, hitchin_map_F, random_exact_direction, remove_torsion,
                          s1_invariant_solve, torsion_residual)

from conftest import seeds

SHAPE = (1, 6, 6, 1, 1, 1, 6)


def _flat(shape=SHAPE):
    spec = GridSpec((2 * np.pi,) * 7, shape)
    return GridForm.constant(spec, standard_phi_form().to_float())


def _perturbed(amplitude, seed=0, shape=SHAPE):
    phi = _flat(shape)
    ds = random_exact_direction(np.random.default_rng(seed), phi.spec)
    return phi + ds * (amplitude / np.max(np.abs(ds.data)))


def test_flat_is_fixed_point():
    phi = _flat()
    out, st = remove_torsion(phi)
    assert st.iterations == 0 and st.converged
    assert np.array_equal(out.data, phi.data)
    assert torsion_residual(out) == (0.0, 0.0)


@given(seeds)
@settings(max_examples=4)
def test_derivative_order(seed):
    rng = np.random.default_rng(seed)
    phi = _flat() + random_exact_direction(rng, _flat().spec, amplitude=0.05)
    r = fd_order_check(phi, random_exact_direction(rng, phi.spec), h0=1e-2, halvings=2)
    assert min(r["orders"]) >= 1.9


def test_gauge_reduction_rank():
    phi = _perturbed(0.05)
    red = GaugeReduction(phi.spec, phi.mean())
    assert red.U.shape[-1] == 8 and red.V.shape[-1] == 8
    # the projectors are idempotent
    F = hitchin_map_F(phi).data
    PF = red.Pi(F)
    assert rms(red.Pi(PF) - PF) < 1e-12


@pytest.mark.parametrize("amplitude", [0.01, 0.05])
def test_solver_converges_and_keeps_class(amplitude):
    phi = _perturbed(amplitude)
    out, st = remove_torsion(phi, SolveOptions(tol=1e-10))
    assert st.converged and st.iterations <= 5
    assert np.max(np.abs(out.mean() - phi.mean())) < 1e-12
    # output differs from input by an exact form
    diff = out - phi
    assert rms(diff.data - diff.exact_part().data) < 1e-12
    d_phi, d_psi = torsion_residual(out)
    assert d_phi < 1e-12
    assert d_psi <= 2 * st.truncation_floor + 1e-10
    assert [r.residual for r in st.history][-1] == st.residual


def test_quadratic_convergence():
    _, st = remove_torsion(_perturbed(0.1), SolveOptions(tol=1e-13))
    r = [h.residual for h in st.history]
    assert r[2] <= 10 * r[1] ** 2 / r[0] + 1e-13


def test_strict_mode_reports_curve():
    with pytest.raises(NotConvergedError, match="residual curve"):
        remove_torsion(_perturbed(0.05), SolveOptions(max_iter=0))
    _, st = remove_torsion(_perturbed(0.05), SolveOptions(max_iter=0), strict=False)
    assert not st.converged


def test_positivity_failure_is_reported():
    with pytest.raises(PositivityError):
        remove_torsion(_perturbed(2.0))


def test_s1_invariant_solve_has_no_theta_dependence():
    phi = _perturbed(0.05)
    out, st = s1_invariant_solve(phi)
    assert st.converged
    assert out.theta_defect(0) == 0.0
    wide = expand_axis(out, 0, 4)
    assert wide.theta_defect(0) == 0.0


def test_history_csv_is_reproducible():
    _, st = remove_torsion(_perturbed(0.05))
    text = st.history_csv()
    assert text.splitlines()[0] == "iteration,residual,full_residual,damping,lsmr_iters"
    assert "wall_time" in st.history_csv(timing=True)
    _, st2 = remove_torsion(_perturbed(0.05))
    assert st2.history_csv() == text
