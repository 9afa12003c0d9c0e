"""Scalar and small-matrix helpers shared by the exact and float backends.

Exact scalars are ``gmpy2.mpq`` rationals (``int`` and ``fractions.Fraction``
are accepted and promoted). Float scalars are Python/numpy floats. Matrices
are 2-D numpy arrays: ``dtype=object`` holding rationals, or ``float64``.
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Number

import gmpy2
import numpy as np

MPQ = type(gmpy2.mpq(0))
EXACT_TYPES = (int, MPQ, Fraction, type(gmpy2.mpz(0)))


def is_exact(x) -> bool:
    return isinstance(x, EXACT_TYPES) and not isinstance(x, bool)


def q(x, den=None):
    """Promote to an exact rational. Floats convert by their binary value."""
    if den is not None:
        return q(x) / q(den)
    if isinstance(x, MPQ):
        return x
    if isinstance(x, Fraction):
        return gmpy2.mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        return gmpy2.mpq(Fraction(x).numerator, Fraction(x).denominator)
    return gmpy2.mpq(x)


def as_scalar(x, mode: str):
    if mode == "rational":
        return q(x)
    if mode == "float":
        return float(x)
    raise ValueError(f"unknown scalar mode {mode!r}")


def to_fraction(x) -> Fraction:
    x = q(x)
    return Fraction(int(x.numerator), int(x.denominator))


def scalar_repr(x):
    """JSON-ready value: rationals as 'p/q' strings, floats as numbers."""
    if is_exact(x):
        x = q(x)
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return float(x)


def scalar_parse(v):
    if isinstance(v, str):
        return q(v)
    if isinstance(v, bool):
        raise TypeError("boolean is not a scalar")
    if isinstance(v, int):
        return q(v)
    return float(v)


def exact_sqrt(x):
    """Square root; exact when x is a rational perfect square, else float."""
    if is_exact(x):
        x = q(x)
        if x < 0:
            raise ValueError("square root of a negative number")
        n, d = int(x.numerator), int(x.denominator)
        rn, rd = math.isqrt(n), math.isqrt(d)
        if rn * rn == n and rd * rd == d:
            return gmpy2.mpq(rn, rd)
        return math.sqrt(float(x))
    return math.sqrt(x)


def odd_root(x, n: int):
    """Real n-th root for odd n; exact for rational perfect powers."""
    if n % 2 == 0:
        raise ValueError("odd_root needs an odd index")
    if is_exact(x):
        x = q(x)
        sign = -1 if x < 0 else 1
        num, den = abs(int(x.numerator)), int(x.denominator)
        rn, ok_n = gmpy2.iroot(num, n)
        rd, ok_d = gmpy2.iroot(den, n)
        if ok_n and ok_d:
            return sign * gmpy2.mpq(int(rn), int(rd))
        x = float(x)
    return math.copysign(abs(x) ** (1.0 / n), x)


def all_exact(values) -> bool:
    return all(is_exact(v) for v in values)


# ----------------------------------------------------------------------------
# matrices

def matrix(rows, mode: str | None = None) -> np.ndarray:
    """Build a matrix; mode None infers exactness from the entries."""
    arr = np.array(rows, dtype=object)
    if arr.ndim != 2:
        raise ValueError("matrix must be 2-dimensional")
    if mode is None:
        mode = "rational" if all_exact(arr.ravel()) else "float"
    if mode == "rational":
        out = np.empty(arr.shape, dtype=object)
        for idx, v in np.ndenumerate(arr):
            out[idx] = q(v)
        return out
    return arr.astype(float)


def is_exact_matrix(m: np.ndarray) -> bool:
    return m.dtype == object


def identity(n: int, exact: bool = True) -> np.ndarray:
    if exact:
        m = np.empty((n, n), dtype=object)
        m[...] = gmpy2.mpq(0)
        for i in range(n):
            m[i, i] = gmpy2.mpq(1)
        return m
    return np.eye(n)


def _eliminate(m: np.ndarray):
    """Gaussian elimination with exact pivoting. Returns (U, perm_sign)."""
    a = [list(row) for row in m]
    n = len(a)
    sign = 1
    for c in range(n):
        p = next((r for r in range(c, n) if a[r][c] != 0), None)
        if p is None:
            return None, 0
        if p != c:
            a[c], a[p] = a[p], a[c]
            sign = -sign
        piv = a[c][c]
        for r in range(c + 1, n):
            f = a[r][c]
            if f != 0:
                f = f / piv
                row_r, row_c = a[r], a[c]
                for j in range(c, n):
                    row_r[j] = row_r[j] - f * row_c[j]
    return a, sign


def det(m: np.ndarray):
    if not is_exact_matrix(m):
        return float(np.linalg.det(m.astype(float)))
    n = m.shape[0]
    if n == 0:
        return gmpy2.mpq(1)
    if n == 1:
        return m[0, 0]
    if n == 2:
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if n == 3:
        return (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
                - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
                + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))
    u, sign = _eliminate(m)
    if u is None:
        return gmpy2.mpq(0)
    out = gmpy2.mpq(sign)
    for i in range(n):
        out *= u[i][i]
    return out


def solve(m: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve m x = b (b may be a vector or matrix)."""
    if not is_exact_matrix(m):
        return np.linalg.solve(m.astype(float), np.asarray(b, dtype=float))
    b = np.asarray(b, dtype=object)
    vec = b.ndim == 1
    rhs = b.reshape(len(b), -1)
    n = m.shape[0]
    a = [list(m[i]) + list(rhs[i]) for i in range(n)]
    w = len(a[0])
    for c in range(n):
        p = next((r for r in range(c, n) if a[r][c] != 0), None)
        if p is None:
            raise np.linalg.LinAlgError("singular matrix")
        a[c], a[p] = a[p], a[c]
        piv = a[c][c]
        row_c = a[c] = [v / piv for v in a[c]]
        for r in range(n):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [a[r][j] - f * row_c[j] for j in range(w)]
    out = np.array([row[n:] for row in a], dtype=object)
    return out[:, 0] if vec else out


def inv(m: np.ndarray) -> np.ndarray:
    if not is_exact_matrix(m):
        return np.linalg.inv(m.astype(float))
    return solve(m, identity(m.shape[0]))


def is_symmetric(m: np.ndarray, tol: float = 0.0) -> bool:
    if is_exact_matrix(m):
        return bool(np.all(m == m.T))
    return bool(np.max(np.abs(m - m.T), initial=0.0) <= tol)


def is_positive_definite(m: np.ndarray, tol: float = 0.0) -> bool:
    """Exact: Sylvester-type pivot test. Float: smallest eigenvalue > tol."""
    if is_exact_matrix(m):
        if not is_symmetric(m):
            return False
        a = [list(row) for row in m]
        n = len(a)
        for c in range(n):
            piv = a[c][c]
            if piv <= 0:
                return False
            for r in range(c + 1, n):
                f = a[r][c] / piv
                if f != 0:
                    for j in range(c, n):
                        a[r][j] -= f * a[c][j]
        return True
    m = m.astype(float)
    return bool(np.linalg.eigvalsh(0.5 * (m + m.T))[0] > tol)


def min_eigenvalue(m: np.ndarray) -> float:
    m = np.asarray(m, dtype=float)
    return float(np.linalg.eigvalsh(0.5 * (m + m.T))[0])


def scalar_abs_max(values) -> float:
    vals = [abs(float(v)) for v in values]
    return max(vals, default=0.0)


def is_number(x) -> bool:
    return isinstance(x, Number) or is_exact(x)
