"""Vectorized float kernels: forms stored as arrays (..., C(n, k)).

Components follow the lexicographic order of ``exterior.basis``. These are
the grid-pointwise counterparts of the exact routines in ``exterior``,
``g2`` and ``su3``; the tests compare the two on random points.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .exterior import basis, basis_index, complement, merge_sign


@lru_cache(maxsize=None)
def wedge_tensor(n: int, p: int, q: int) -> np.ndarray:
    """W[i, j, k] with (a ∧ b)_k = Σ a_i b_j W[i, j, k]."""
    bp, bq = basis(n, p), basis(n, q)
    out_idx = basis_index(n, p + q) if p + q <= n else {}
    W = np.zeros((len(bp), len(bq), max(len(out_idx), 1)))
    if p + q > n:
        return W[..., :0]
    for i, I in enumerate(bp):
        for j, J in enumerate(bq):
            s = merge_sign(I, J)
            if s:
                W[i, j, out_idx[tuple(sorted(I + J))]] = s
    return W


@lru_cache(maxsize=None)
def interior_tensor(n: int, k: int) -> np.ndarray:
    """C[a, i, j] with (ι_{e_a} x)_j = Σ_i C[a, i, j] x_i."""
    bk = basis(n, k)
    out = basis_index(n, k - 1)
    C = np.zeros((n, len(bk), len(out)))
    for i, I in enumerate(bk):
        for pos, a in enumerate(I):
            C[a, i, out[I[:pos] + I[pos + 1:]]] = -1.0 if pos & 1 else 1.0
    return C


@lru_cache(maxsize=None)
def star_permutation(n: int, k: int) -> np.ndarray:
    """E[Ic, I] = sign(I, Ic): the Euclidean Hodge star on Λ^k → Λ^{n-k}."""
    bk = basis(n, k)
    out = basis_index(n, n - k)
    E = np.zeros((len(out), len(bk)))
    for i, I in enumerate(bk):
        Ic = complement(n, I)
        E[out[Ic], i] = merge_sign(I, Ic)
    return E


def wedge(a: np.ndarray, b: np.ndarray, n: int, p: int, q: int) -> np.ndarray:
    W = wedge_tensor(n, p, q)
    a, b = np.broadcast_arrays(a[..., :, None], b[..., None, :])
    outer = (a * b).reshape(a.shape[:-2] + (W.shape[0] * W.shape[1],))
    return outer @ W.reshape(-1, W.shape[-1])


def interior(v: np.ndarray, a: np.ndarray, n: int, k: int) -> np.ndarray:
    """ι_v a with v (..., n)."""
    return np.einsum("...a,aij,...i->...j", v, interior_tensor(n, k), a, optimize=True)


def interior_basis(a: np.ndarray, n: int, k: int) -> np.ndarray:
    """ι_{e_a} x for all a: shape (..., n, C(n, k-1))."""
    C = interior_tensor(n, k)
    flat = a @ np.transpose(C, (1, 0, 2)).reshape(C.shape[1], -1)
    return flat.reshape(a.shape[:-1] + (C.shape[0], C.shape[2]))


@lru_cache(maxsize=None)
def _compound_index(n: int, k: int):
    b = np.array(basis(n, k), dtype=int).reshape(-1, k)
    return b


def compound(M: np.ndarray, k: int, chunk: int = 256) -> np.ndarray:
    """k-th compound: C[I, J] = det(M[I, J]) for M (..., n, n)."""
    n = M.shape[-1]
    idx = _compound_index(n, k)
    lead = M.shape[:-2]
    flat = M.reshape((-1, n, n))
    N = len(idx)
    out = np.empty((flat.shape[0], N, N))
    if k == 0:
        out[...] = 1.0
        return out.reshape(lead + (1, 1))
    if k == 1:
        return M.copy()
    rows = idx[:, None, :, None]
    cols = idx[None, :, None, :]
    for s in range(0, flat.shape[0], chunk):
        sub = flat[s:s + chunk][:, rows, cols]  # (c, N, N, k, k)
        out[s:s + chunk] = np.linalg.det(sub)
    return out.reshape(lead + (N, N))


@lru_cache(maxsize=None)
def _expansion(n: int, k: int):
    """X (C(n,k), n^k) scattering components to the full antisymmetric tensor, and the gather index."""
    from itertools import permutations
    bk = basis(n, k)
    X = np.zeros((len(bk), n ** k))
    gather = np.zeros(len(bk), dtype=int)
    for i, I in enumerate(bk):
        gather[i] = np.ravel_multi_index(I, (n,) * k) if k else 0
        for perm in permutations(range(k)):
            J = tuple(I[p] for p in perm)
            inv = sum(1 for x in range(k) for y in range(x + 1, k) if perm[x] > perm[y])
            X[i, np.ravel_multi_index(J, (n,) * k) if k else 0] = -1.0 if inv & 1 else 1.0
    return X, gather


def _contract_slots(full: np.ndarray, A: np.ndarray, n: int, k: int) -> np.ndarray:
    """Apply A[i, j] (contracting i) on each of the k slots of a tensor (..., n, ..., n)."""
    lead = full.shape[:-k]
    At = np.swapaxes(A, -1, -2)
    R = n ** (k - 1)
    t = full.reshape(lead + (n, R))
    for _ in range(k):
        # contract the leading slot, then rotate it to the back
        t = np.swapaxes(At @ t, -1, -2).reshape(lead + (n, R))
    return t.reshape(lead + (n ** k,))


def pullback(A: np.ndarray, a: np.ndarray, k: int) -> np.ndarray:
    """Pullback by linear maps A (..., n, n): (A* a)_J = Σ_I a_I det(A[I, J])."""
    n = A.shape[-1]
    if k == 0:
        return a.copy()
    X, gather = _expansion(n, k)
    full = (a @ X).reshape(a.shape[:-1] + (n,) * k)
    return _contract_slots(full, A, n, k)[..., gather]


# ---------------------------------------------------------------------------
# G2

@lru_cache(maxsize=None)
def _b_tensor():
    # U[i, j, n] = ((x_i ∧ y_j) ∧ phi_n) top coefficient for 2-forms x, y
    W22 = wedge_tensor(7, 2, 2)
    W43 = wedge_tensor(7, 4, 3)[..., 0]
    return np.einsum("ijm,mn->ijn", W22, W43)


def g2_metric(phi: np.ndarray):
    """Calibrated metric, scale s (vol = s e_1..7) and B for phi (..., 35)."""
    ip = interior_basis(phi, 7, 3)  # (..., 7, 21)
    U = np.einsum("ijn,...n->...ij", _b_tensor(), phi, optimize=True)
    B = np.einsum("...ai,...ij,...bj->...ab", ip, U, ip, optimize=True)
    d = np.linalg.det(B / 6.0)
    s = np.sign(d) * np.abs(d) ** (1.0 / 9.0)
    g = B / (6.0 * s[..., None, None])
    return g, s


def hodge(a: np.ndarray, g: np.ndarray, sqrt_det_signed: np.ndarray, n: int, k: int,
          ginv: np.ndarray | None = None) -> np.ndarray:
    """*a with *1 = vol; ``sqrt_det_signed`` = orientation · sqrt(det g)."""
    if ginv is None:
        ginv = np.linalg.inv(g)
    raised = pullback(ginv, a, k)
    return sqrt_det_signed[..., None] * np.einsum("ci,...i->...c", star_permutation(n, k), raised)


def g2_psi(phi: np.ndarray, g=None, s=None) -> np.ndarray:
    if g is None:
        g, s = g2_metric(phi)
    return hodge(phi, g, s, 7, 3)


def star_matrix(g: np.ndarray, s: np.ndarray, n: int, k: int, ginv=None) -> np.ndarray:
    """Matrix of the Hodge star Λ^k → Λ^{n-k} at each point."""
    if ginv is None:
        ginv = np.linalg.inv(g)
    H = compound(ginv, k)  # H[I, J]; raised_J = Σ_I a_I H[I, J]
    return s[..., None, None] * np.einsum("ci,...ji->...cj", star_permutation(n, k), H)


def dstar_matrix(phi: np.ndarray):
    """Pointwise linearization of phi ↦ *_phi phi as (..., 35, 35) matrices.

    D*(a) = *_phi((7/3) π_1 a + 2 π_7 a - a).
    """
    g, s = g2_metric(phi)
    ginv = np.linalg.inv(g)
    H3 = compound(ginv, 3)  # inner product <a, b> = a H3 b
    S = star_matrix(g, s, 7, 3, ginv)
    psi = np.einsum("...ci,...i->...c", S, phi)
    b7 = interior_basis(psi, 7, 4)  # (..., 7, 35)
    gram = np.einsum("...ai,...ij,...bj->...ab", b7, H3, b7)
    Hb = np.einsum("...ij,...bj->...ib", H3, b7)  # (..., 35, 7)
    P7 = np.einsum("...ai,...ab,...jb->...ij", b7, np.linalg.inv(gram), Hb)
    Hphi = np.einsum("...ij,...j->...i", H3, phi)
    P1 = np.einsum("...i,...j->...ij", phi, Hphi) / 7.0
    eye = np.eye(35)
    M = (7.0 / 3.0) * P1 + 2.0 * P7 - eye
    return np.einsum("...ci,...ij->...cj", S, M), psi, g, s


# ---------------------------------------------------------------------------
# SU(3) data from phi, and validation

@lru_cache(maxsize=None)
def _restrict_index(n: int, k: int, axis: int):
    """Components of Λ^k(R^n) without leg ``axis``, as indices into the big basis."""
    big = basis_index(n, k)
    keep = [j for j in range(n) if j != axis]
    return np.array([big[tuple(keep[i] for i in I)] for I in basis(n - 1, k)], dtype=int)


def restrict(a: np.ndarray, n: int, k: int, axis: int = 0) -> np.ndarray:
    return a[..., _restrict_index(n, k, axis)]


def lift(a: np.ndarray, n: int, k: int, axis: int = 0) -> np.ndarray:
    out = np.zeros(a.shape[:-1] + (len(basis(n + 1, k)),))
    out[..., _restrict_index(n + 1, k, axis)] = a
    return out


def su3_from_phi(phi: np.ndarray, axis: int = 0, orientation: int = 1, g=None, s=None):
    """(z, re, im, omega) with z on R^7 and the rest restricted to the complement of ``axis``."""
    if g is None:
        g, s = g2_metric(phi)
    psi = hodge(phi, g, s, 7, 3)
    norm = np.sqrt(g[..., axis, axis])
    z = orientation * g[..., :, axis] / norm[..., None]
    zn = orientation * norm
    omega7 = interior_basis(phi, 7, 3)[..., axis, :] / zn[..., None]
    re7 = phi - wedge(z, omega7, 7, 1, 2)
    im7 = -interior_basis(psi, 7, 4)[..., axis, :] / zn[..., None]
    return z, restrict(re7, 7, 3, axis), restrict(im7, 7, 3, axis), restrict(omega7, 7, 2, axis)


def phi_from_su3(z, re, im, omega, axis: int = 0):
    del im
    return lift(re, 6, 3, axis) + wedge(z, lift(omega, 6, 2, axis), 7, 1, 2)


def psi_from_su3(z, re, im, omega, axis: int = 0, z_sign: int = -1):
    w = lift(omega, 6, 2, axis)
    return 0.5 * wedge(w, w, 7, 2, 2) + z_sign * wedge(z, lift(im, 6, 3, axis), 7, 1, 3)


@lru_cache(maxsize=None)
def _k_tensor():
    # K[j, a] = (-1)^j (ι_a rho ∧ rho)[complement of j]; as a cubic in rho:
    # K[j, a] = Σ rho_i rho_m Kt[a, i, m, j]
    C = interior_tensor(6, 3)
    W = wedge_tensor(6, 2, 3)
    five = basis_index(6, 5)
    sel = np.zeros((6, 6))
    for j in range(6):
        sel[five[tuple(k for k in range(6) if k != j)], j] = -1.0 if j % 2 else 1.0
    return np.einsum("aip,pmf,fj->aimj", C, W, sel)


def stability(rho: np.ndarray):
    """(K, lambda) for 3-forms on R^6, matching ``su3.stability_data``."""
    Kt = _k_tensor()  # (a, i, m, j)
    first = rho @ np.transpose(Kt, (1, 0, 2, 3)).reshape(Kt.shape[1], -1)
    first = first.reshape(rho.shape[:-1] + (Kt.shape[0], Kt.shape[2], Kt.shape[3]))
    K = np.swapaxes(np.einsum("...amj,...m->...aj", first, rho), -1, -2)
    lam = np.einsum("...ij,...ji->...", K, K) / 6.0
    return K, lam


def _omega_matrix(omega: np.ndarray) -> np.ndarray:
    idx = basis(6, 2)
    W = np.zeros(omega.shape[:-1] + (6, 6))
    for c, (u, v) in enumerate(idx):
        W[..., u, v] = omega[..., c]
        W[..., v, u] = -omega[..., c]
    return W


def complex_structure(re: np.ndarray, im: np.ndarray):
    """I with ι_{Iv} Re = -ι_v Im (sign chosen per point) and its type residual."""
    K, lam = stability(re)
    root = np.sqrt(np.clip(-lam, 1e-300, None))
    J = K / root[..., None, None]
    ire = interior_basis(re, 6, 3)  # (..., 6, 15): ι_{e_a} re
    iim = interior_basis(im, 6, 3)
    res = []
    for sgn in (1.0, -1.0):
        I = sgn * J
        lhs = np.einsum("...ma,...mj->...aj", I, ire)  # ι_{I e_a} re
        res.append(np.max(np.abs(lhs + iim), axis=(-2, -1)))
    res = np.stack(res)
    pick = np.where(res[0] <= res[1], 1.0, -1.0)
    return pick[..., None, None] * J, np.minimum(res[0], res[1]), lam


def validate_su3(re, im, omega, tol: float = 1e-9) -> dict:
    """Float residuals of conditions i-v at every point, scaled as in ``su3.validate_su3``."""
    scale = np.maximum.reduce([np.ones(re.shape[:-1]), np.max(np.abs(re), axis=-1),
                               np.max(np.abs(im), axis=-1), np.max(np.abs(omega), axis=-1)])
    t = tol * scale ** 3
    # (i) ι_b ι_a Omega ∧ Omega = 0
    a_idx, b_idx = np.triu_indices(6, 1)
    iba_re = interior_basis(interior_basis(re, 6, 3), 6, 2)[..., a_idx, b_idx, :]
    iba_im = interior_basis(interior_basis(im, 6, 3), 6, 2)[..., a_idx, b_idx, :]
    W = wedge_tensor(6, 1, 3)
    Wflat = np.transpose(W, (1, 0, 2)).reshape(W.shape[1], -1)
    by = lambda f: (f @ Wflat).reshape(f.shape[:-1] + (W.shape[0], W.shape[2]))  # noqa: E731
    Wre, Wim = by(re), by(im)  # u ↦ u ∧ re as (6, 15) matrices
    w_re = iba_re @ Wre - iba_im @ Wim
    w_im = iba_re @ Wim + iba_im @ Wre
    r1 = np.maximum(np.max(np.abs(w_re), axis=(-2, -1)), np.max(np.abs(w_im), axis=(-2, -1)))
    top = wedge(re, im, 6, 3, 3)[..., 0]
    w3 = wedge(wedge(omega, omega, 6, 2, 2), omega, 6, 4, 2)[..., 0]
    r3 = np.abs(top - (2.0 / 3.0) * w3)
    r4 = np.maximum(np.max(np.abs(wedge(omega, re, 6, 2, 3)), axis=-1),
                    np.max(np.abs(wedge(omega, im, 6, 2, 3)), axis=-1))
    I, type_res, lam = complex_structure(re, im)
    g = _omega_matrix(omega) @ I
    sym = np.max(np.abs(g - np.swapaxes(g, -1, -2)), axis=(-2, -1))
    mine = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))[..., 0]
    return {
        "i": r1, "ii": np.abs(top), "iii": r3, "iv": r4,
        "v_min_eig": mine, "v_symmetry": sym, "v_type": type_res, "lambda": lam,
        "ok": (r1 <= t) & (np.abs(top) > t) & (r3 <= t) & (r4 <= t) & (mine > t)
              & (sym <= t) & (type_res <= t) & (lam < 0),
    }


def metric_from_su3(re, im, omega) -> np.ndarray:
    I, _, _ = complex_structure(re, im)
    g = _omega_matrix(omega) @ I
    return 0.5 * (g + np.swapaxes(g, -1, -2))


class G2Linearization:
    """Matrix-free derivative of phi ↦ *_phi phi at every point of a batch.

    ``apply(a) = D*(a)`` and ``apply_T`` is its pointwise transpose; both agree
    with ``dstar_matrix`` but never form the 35×35 matrices.
    """

    def __init__(self, phi: np.ndarray):
        self.phi = phi
        self.g, self.s = g2_metric(phi)
        self.ginv = np.linalg.inv(self.g)
        self.E = star_permutation(7, 3)
        self.hphi = pullback(self.ginv, phi, 3)
        self.psi = self.s[..., None] * (self.hphi @ self.E.T)
        self.b7 = interior_basis(self.psi, 7, 4)  # (..., 7, 35)
        self.hb7 = pullback(self.ginv[..., None, :, :], self.b7, 3)
        gram = np.einsum("...ai,...bi->...ab", self.b7, self.hb7)
        self.gram_inv = np.linalg.inv(gram)

    def raise3(self, a: np.ndarray) -> np.ndarray:
        return pullback(self.ginv, a, 3)

    def _K(self, a):
        c1 = np.sum(self.hphi * a, axis=-1) / 3.0
        c7 = self.gram_inv @ (self.hb7 @ a[..., None])
        return c1[..., None] * self.phi + 2.0 * (np.swapaxes(self.b7, -1, -2) @ c7)[..., 0] - a

    def _KT(self, w):
        c1 = np.sum(self.phi * w, axis=-1) / 3.0
        c7 = np.swapaxes(self.gram_inv, -1, -2) @ (self.b7 @ w[..., None])
        return c1[..., None] * self.hphi + 2.0 * (np.swapaxes(self.hb7, -1, -2) @ c7)[..., 0] - w

    def apply(self, a: np.ndarray) -> np.ndarray:
        return self.s[..., None] * (self.raise3(self._K(a)) @ self.E.T)

    def apply_T(self, y: np.ndarray) -> np.ndarray:
        return self._KT(self.s[..., None] * self.raise3(y @ self.E))

    def min_eig(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.g)[..., 0]
