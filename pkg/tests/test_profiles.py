import numpy as np
import pytest
from hypothesis import given, strategies as st

from g2cy.profiles import cutoff, neck_cutoff, neck_key, step


def test_step_plateaus():
    x = np.array([-1.0, 0.0, 1.0, 2.0])
    assert np.array_equal(step(x), [0.0, 0.0, 1.0, 1.0])
    for j in (1, 2, 3):
        assert np.array_equal(step(x, j), np.zeros(4))


def test_step_symmetry():
    x = np.linspace(0.01, 0.99, 99)
    assert np.allclose(step(x) + step(1 - x), 1.0, atol=1e-15)


@given(st.floats(0.05, 0.95), st.integers(0, 3))
def test_derivatives_match_finite_differences(x, j):
    h = 1e-5
    fd = (step(np.array([x + h]), j) - step(np.array([x - h]), j)) / (2 * h)
    assert np.allclose(step(np.array([x]), j + 1), fd, rtol=1e-5, atol=1e-6)


def test_step_is_monotone():
    v = step(np.linspace(0, 1, 2001))
    assert np.all(np.diff(v) >= 0)


@given(st.floats(3, 20), st.floats(-5, 25))
def test_neck_cutoff_ramp(T, t):
    v = float(neck_cutoff(T, np.array([t]))[0])
    if t <= T - 2:
        assert v == 0.0
    elif t >= T - 1:
        assert v == 1.0
    else:
        assert 0.0 <= v <= 1.0


def test_cutoff_scaling():
    t = np.linspace(2.1, 3.9, 7)
    assert np.allclose(cutoff(t, 2, 4, 1), step((t - 2) / 2, 1) / 2)
    assert neck_key(5) == (3, 4, 0)
