"""Collocation grids on flat tori and FFT exterior calculus.

A GridForm stores a k-form on T^n as an array (*shape, C(n, k)) of samples
on a uniform lattice; a direction of size 1 is "collapsed" (the form does
not depend on it). Derivatives use the FFT with the Nyquist mode dropped.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import batched as bt
from .exterior import AltForm, basis


@dataclass(frozen=True)
class GridSpec:
    lengths: tuple[float, ...]
    shape: tuple[int, ...]

    def __post_init__(self):
        if len(self.lengths) != len(self.shape):
            raise ValueError("lengths and shape must have equal length")
        if any(s < 1 for s in self.shape) or any(L <= 0 for L in self.lengths):
            raise ValueError("grid sizes and lengths must be positive")

    @property
    def n(self) -> int:
        return len(self.shape)

    @property
    def npoints(self) -> int:
        return int(np.prod(self.shape))

    def axes(self) -> list[np.ndarray]:
        return [np.arange(s) * (L / s) for s, L in zip(self.shape, self.lengths)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    @cached_property
    def wavenumbers(self) -> list[np.ndarray]:
        """Angular wavenumbers per axis, Nyquist set to 0, broadcastable to the grid."""
        out = []
        for ax, (s, L) in enumerate(zip(self.shape, self.lengths)):
            k = np.fft.fftfreq(s, d=1.0 / s) * (2 * np.pi / L)
            if s % 2 == 0:
                k[s // 2] = 0.0
            shape = [1] * self.n
            shape[ax] = s
            out.append(k.reshape(shape))
        return out

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on modes kept by the discrete calculus."""
        m = np.ones(self.shape, dtype=bool)
        for ax, s in enumerate(self.shape):
            if s % 2 == 0 and s > 1:
                idx = [slice(None)] * self.n
                idx[ax] = s // 2
                m[tuple(idx)] = False
        return m

    @cached_property
    def kappa(self) -> np.ndarray:
        return np.stack(np.broadcast_arrays(*self.wavenumbers), axis=-1)

    @cached_property
    def kappa_sq(self) -> np.ndarray:
        return np.sum(self.kappa ** 2, axis=-1)


def _fft(a: np.ndarray, n: int) -> np.ndarray:
    return np.fft.fftn(a, axes=tuple(range(n)))


def _ifft(a: np.ndarray, n: int) -> np.ndarray:
    return np.fft.ifftn(a, axes=tuple(range(n))).real


@dataclass(frozen=True, eq=False)
class GridForm:
    spec: GridSpec
    degree: int
    data: np.ndarray

    def __post_init__(self):
        want = tuple(self.spec.shape) + (len(basis(self.spec.n, self.degree)),)
        if self.data.shape != want:
            raise ValueError(f"data shape {self.data.shape} != {want}")

    @classmethod
    def constant(cls, spec: GridSpec, a: AltForm) -> "GridForm":
        vec = np.array([float(a.coeffs.get(I, 0)) for I in basis(spec.n, a.degree)])
        return cls(spec, a.degree, np.broadcast_to(vec, tuple(spec.shape) + vec.shape).copy())

    def __add__(self, o: "GridForm") -> "GridForm":
        return GridForm(self.spec, self.degree, self.data + o.data)

    def __sub__(self, o: "GridForm") -> "GridForm":
        return GridForm(self.spec, self.degree, self.data - o.data)

    def __mul__(self, c: float) -> "GridForm":
        return GridForm(self.spec, self.degree, self.data * c)

    __rmul__ = __mul__

    def wedge(self, o: "GridForm") -> "GridForm":
        n = self.spec.n
        return GridForm(self.spec, self.degree + o.degree,
                        bt.wedge(self.data, o.data, n, self.degree, o.degree))

    def mean(self) -> np.ndarray:
        """Zero Fourier mode = harmonic part (components in basis order)."""
        return self.data.reshape(-1, self.data.shape[-1]).mean(axis=0)

    def class_form(self) -> AltForm:
        return AltForm(self.spec.n, self.degree,
                       {I: float(v) for I, v in zip(basis(self.spec.n, self.degree), self.mean()) if v != 0.0})

    def rms(self) -> float:
        return rms(self.data)

    def sup(self) -> float:
        return float(np.max(np.abs(self.data), initial=0.0))

    def d(self) -> "GridForm":
        return GridForm(self.spec, self.degree + 1, grid_d(self.spec, self.data, self.degree))

    def exact_part(self) -> "GridForm":
        return GridForm(self.spec, self.degree, project_exact(self.spec, self.data, self.degree))

    def coexact_part(self) -> "GridForm":
        return GridForm(self.spec, self.degree, project_coexact(self.spec, self.data, self.degree))

    def closed_part(self) -> "GridForm":
        """Harmonic plus exact part (drops the coexact remainder)."""
        return self - self.coexact_part()

    def theta_defect(self, axis: int = 0) -> float:
        """Norm of the non-constant part along ``axis`` (exactly 0 when the axis is collapsed)."""
        if self.spec.shape[axis] == 1:
            return 0.0
        return rms(self.data - self.data.mean(axis=axis, keepdims=True))


def rms(a: np.ndarray) -> float:
    """Root mean square over grid points of the Euclidean component norm."""
    if a.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(np.sum(a ** 2, axis=-1))))


def _stacked(mats: np.ndarray, active: list[int]) -> np.ndarray:
    """(m, p, q) -> (p, len(active) * q) for one matmul over active axes."""
    sel = mats[active]
    return np.concatenate(list(sel), axis=1)


def _axis_sum(prod: np.ndarray, weights: list[np.ndarray], q: int) -> np.ndarray:
    out = None
    for i, w in enumerate(weights):
        term = w[..., None] * prod[..., i * q:(i + 1) * q]
        out = term if out is None else out + term
    return out


def _active(spec: GridSpec) -> list[int]:
    return [j for j in range(spec.n) if spec.shape[j] > 1]


def grid_d(spec: GridSpec, a: np.ndarray, k: int) -> np.ndarray:
    n = spec.n
    W = bt.wedge_tensor(n, 1, k)  # (n, C(n,k), C(n,k+1))
    act = _active(spec)
    if not act:
        return np.zeros(a.shape[:-1] + (W.shape[-1],))
    ah = _fft(a, n)
    prod = ah @ _stacked(W, act)
    out = _axis_sum(prod, [1j * spec.wavenumbers[j] for j in act], W.shape[-1])
    return _ifft(out, n)


def grid_dT(spec: GridSpec, b: np.ndarray, k: int) -> np.ndarray:
    """Adjoint of ``grid_d`` (on k-forms) for the coefficient-wise L² product; input is a (k+1)-form."""
    n = spec.n
    W = bt.wedge_tensor(n, 1, k)
    act = _active(spec)
    if not act:
        return np.zeros(b.shape[:-1] + (W.shape[1],))
    bh = _fft(b, n)
    prod = bh @ _stacked(np.transpose(W, (0, 2, 1)), act)
    out = _axis_sum(prod, [-1j * spec.wavenumbers[j] for j in act], W.shape[1])
    return _ifft(out, n)


def _exact_hat(spec: GridSpec, ah: np.ndarray, k: int) -> np.ndarray:
    """κ∧(ι_κ â)/|κ|² per mode (zero on the zero mode and dropped Nyquist modes)."""
    n = spec.n
    ksq = spec.kappa_sq
    inv = np.where(ksq > 0, 1.0 / np.where(ksq > 0, ksq, 1.0), 0.0)
    if k == 0:
        return np.zeros_like(ah)
    act = _active(spec)
    if not act:
        return np.zeros_like(ah)
    C = bt.interior_tensor(n, k)
    W = bt.wedge_tensor(n, 1, k - 1)
    kw = [spec.wavenumbers[j] for j in act]
    ia = _axis_sum(ah @ _stacked(C, act), kw, C.shape[-1])
    out = _axis_sum(ia @ _stacked(W, act), kw, W.shape[-1])
    return out * inv[..., None]


def project_exact(spec: GridSpec, a: np.ndarray, k: int) -> np.ndarray:
    n = spec.n
    return _ifft(_exact_hat(spec, _fft(a, n), k), n)


def project_coexact(spec: GridSpec, a: np.ndarray, k: int) -> np.ndarray:
    """Non-constant part minus the exact part (includes dropped Nyquist content)."""
    n = spec.n
    ah = _fft(a, n)
    ah_nc = ah.copy()
    ah_nc[(0,) * n] = 0.0
    return _ifft(ah_nc - _exact_hat(spec, ah, k), n)


def inverse_gradient_scale(spec: GridSpec, a: np.ndarray) -> np.ndarray:
    """Apply |κ|^{-1} mode-wise (zero on the zero mode and Nyquist modes)."""
    n = spec.n
    ksq = spec.kappa_sq
    lam = np.where(ksq > 0, 1.0 / np.sqrt(np.where(ksq > 0, ksq, 1.0)), 0.0)
    lam = lam * spec.nyquist_mask
    return _ifft(_fft(a, n) * lam[..., None], n)


def star0(a: np.ndarray, n: int, k: int) -> np.ndarray:
    """Euclidean Hodge star in coordinates."""
    return a @ bt.star_permutation(n, k).T


def star0_T(b: np.ndarray, n: int, k: int) -> np.ndarray:
    """Transpose of ``star0`` on k-forms."""
    return b @ bt.star_permutation(n, k)


def sample_model_form(form, spec: GridSpec, coords: tuple[str, ...]) -> GridForm:
    """Evaluate a torus ModelForm at the lattice of ``spec`` (axes listed by ``coords``)."""
    mesh = spec.mesh()
    pts = {c: m for c, m in zip(coords, mesh)}
    return GridForm(spec, form.degree, form.evaluate(pts))
