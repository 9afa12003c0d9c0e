"""Smooth step functions and their derivatives.

The step S(x) = f(x) / (f(x) + f(1 - x)) with f(x) = exp(-1/x) is 0 for
x <= 0, 1 for x >= 1 and C^∞. A cutoff factor (a, b, j) denotes the
function t ↦ d^j/dt^j S((t - a)/(b - a)). The neck cutoff psi_T is the
factor (T - 2, T - 1, 0).
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import sympy as sp
from scipy.special import expit

from . import linalg as la

_s, _r, _p, _q = sp.symbols("s r p q")


@lru_cache(maxsize=None)
def _step_derivative_expr(j: int):
    # polynomial in s = S(x), r = 1 - S(x), p = 1/x, q = 1/(1-x); keeping s and r
    # separate avoids cancellation near the ends of the ramp
    expr = _s
    for _ in range(j):
        flow = _s * _r * (_p ** 2 + _q ** 2)
        expr = sp.expand(-_p ** 2 * sp.diff(expr, _p) + _q ** 2 * sp.diff(expr, _q)
                         + flow * (sp.diff(expr, _s) - sp.diff(expr, _r)))
    return expr


@lru_cache(maxsize=None)
def _step_derivative_fn(j: int):
    return sp.lambdify((_s, _r, _p, _q), _step_derivative_expr(j), "numpy")


def step(x, j: int = 0) -> np.ndarray:
    """j-th derivative of the smooth step S at x (vectorized, float)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    if j == 0:
        out[x >= 1.0] = 1.0
    inside = (x > 0.0) & (x < 1.0)
    if np.any(inside):
        xi = x[inside]
        p, q = 1.0 / xi, 1.0 / (1.0 - xi)
        s, r = expit(q - p), expit(p - q)
        with np.errstate(over="ignore", invalid="ignore"):
            val = np.asarray(_step_derivative_fn(j)(s, r, p, q), dtype=float) * np.ones_like(xi)
        out[inside] = np.nan_to_num(val, nan=0.0, posinf=0.0, neginf=0.0)
    return out


def cutoff(t, a, b, j: int = 0) -> np.ndarray:
    """Value of the cutoff factor (a, b, j) at t."""
    a, b = float(a), float(b)
    w = b - a
    return step((np.asarray(t, dtype=float) - a) / w, j) / w ** j


def neck_cutoff(T, t, j: int = 0) -> np.ndarray:
    """psi_T and its derivatives: 0 for t <= T-2, 1 for t >= T-1."""
    return cutoff(t, la.q(T) - 2 if la.is_exact(T) else T - 2,
                  la.q(T) - 1 if la.is_exact(T) else T - 1, j)


def neck_key(T) -> tuple:
    T = la.q(T) if la.is_exact(T) else T
    return (T - 2, T - 1, 0)
