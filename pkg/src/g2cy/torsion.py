"""Torsion removal for closed G2 structures on flat model tori.

The unknown is a 2-form eta on the collocation grid; the corrected
structure is phi + d eta, so the cohomology class never moves. We solve
F(phi + d eta) = 0 with F(phi) = P(*0 *_phi phi), where *0 is the flat
coordinate star and P the projection onto exact forms, by damped
Gauss-Newton. Each step is a minimum-norm LSMR solve in the variable
u = |kappa| eta, which makes the linearized operator well conditioned.
"""
from __future__ import annotations

import csv
import io
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, lsmr

from . import batched as bt
from .grid import (GridForm, GridSpec, grid_d, grid_dT, inverse_gradient_scale, project_exact, rms,
                   star0, star0_T)


class TorsionError(RuntimeError):
    pass


class PositivityError(TorsionError):
    pass


class NotConvergedError(TorsionError):
    pass


@dataclass
class SolveOptions:
    tol: float = 1e-10
    max_iter: int = 20
    lsmr_maxiter: int = 200
    min_eig: float = 0.1
    damping: bool = True
    floor_factor: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class StepRecord:
    iteration: int
    residual: float
    damping: float
    lsmr_iters: int
    wall_time: float
    full_residual: float = float("nan")


@dataclass
class TorsionSolveState:
    """Iteration state: base form, current eta and the residual history."""

    base: GridForm
    eta: GridForm
    truncation_floor: float
    options: SolveOptions
    history: list = field(default_factory=list)
    converged: bool = False

    @property
    def correction(self) -> GridForm:
        return self.eta.d()

    @property
    def phi(self) -> GridForm:
        return self.base + self.correction

    @property
    def residual(self) -> float:
        return self.history[-1].residual if self.history else float("nan")

    @property
    def iterations(self) -> int:
        return max(len(self.history) - 1, 0)

    def history_csv(self, timing: bool = False) -> str:
        """Residual curve as CSV; wall time only on request so the file is reproducible."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "residual", "full_residual", "damping", "lsmr_iters"] + (["wall_time"] if timing else []))
        for r in self.history:
            row = [r.iteration, f"{r.residual:.6e}", f"{r.full_residual:.6e}", r.damping, r.lsmr_iters]
            w.writerow(row + ([f"{r.wall_time:.3f}"] if timing else []))
        return buf.getvalue()


def positivity(phi: np.ndarray) -> tuple[float, int]:
    """(smallest metric eigenvalue over the grid, flat index where it occurs)."""
    flat = phi.reshape(-1, 35)
    g, s = bt.g2_metric(flat)
    bad = ~np.isfinite(s) | (s <= 0)
    eig = np.full(len(flat), -np.inf)
    good = ~bad
    if np.any(good):
        eig[good] = np.linalg.eigvalsh(g[good])[:, 0]
    i = int(np.argmin(eig))
    return float(eig[i]), i


def _require_positive(phi: GridForm, margin: float = 0.0):
    m, i = positivity(phi.data)
    if not m > margin:
        idx = tuple(int(x) for x in np.unravel_index(i, phi.spec.shape))
        if m == -np.inf:
            raise PositivityError(f"not a positive 3-form at grid point {idx} (degenerate or orientation reversed)")
        raise PositivityError(f"metric eigenvalue {m:.3g} <= {margin} at grid point {idx}")
    return m


def torsion_residual(phi: GridForm) -> tuple[float, float]:
    """(||d phi||, ||d *_phi phi||) as grid RMS values."""
    _require_positive(phi)
    psi = bt.g2_psi(phi.data)
    return rms(grid_d(phi.spec, phi.data, 3)), rms(grid_d(phi.spec, psi, 4))


def hitchin_map_F(phi: GridForm) -> GridForm:
    """F(phi) = P(*0 *_phi phi), an exact 3-form on the grid."""
    _require_positive(phi)
    psi = bt.g2_psi(phi.data)
    return GridForm(phi.spec, 3, project_exact(phi.spec, star0(psi, 7, 4), 3))


def DF(phi: GridForm, direction: GridForm, lin: bt.G2Linearization | None = None) -> GridForm:
    """Derivative of the Hitchin map at phi along a 3-form."""
    lin = lin or bt.G2Linearization(phi.data)
    dpsi = lin.apply(direction.data)
    return GridForm(phi.spec, 3, project_exact(phi.spec, star0(dpsi, 7, 4), 3))


class GaugeReduction:
    """Per-mode range/domain projectors of the linearized map at a constant structure.

    At a constant G2 form the map u -> P *0 D*(d Lambda u) acts on each
    Fourier mode through the unit wavevector only. It has rank 8 out of the
    15 exact 3-forms; its kernel is the gauge d(iota_X phi). ``Pi`` projects
    3-forms on its range and ``Q`` projects 2-forms off its kernel.
    """

    RANK = 8

    def __init__(self, spec: GridSpec, phi_ref: np.ndarray):
        self.spec = spec
        M = bt.dstar_matrix(np.asarray(phi_ref, dtype=float)[None])[0][0]
        S0M = bt.star_permutation(7, 4) @ M
        kap = spec.kappa.reshape(-1, spec.n)
        ksq = spec.kappa_sq.reshape(-1)
        keep = (ksq > 0) & spec.nyquist_mask.reshape(-1)
        khat = np.zeros_like(kap)
        khat[keep] = kap[keep] / np.sqrt(ksq[keep])[:, None]
        Wc = np.einsum("na,aik->nki", khat, bt.wedge_tensor(7, 1, 2))  # 21 -> 35
        Ic = np.einsum("na,aij->nji", khat, bt.interior_tensor(7, 3))  # 35 -> 21
        A = Wc @ Ic @ S0M @ Wc
        U, sv, Vt = np.linalg.svd(A[keep], full_matrices=False)
        r = self.RANK
        gap = sv[:, r - 1].min() / max(sv[:, r].max(), 1e-300)
        if gap < 1e3:
            raise TorsionError(f"reference structure has no clean rank-{r} gap (ratio {gap:.3g})")
        self.singular_range = (float(sv[:, r - 1].min()), float(sv[:, 0].max()))
        self.U = np.zeros((len(kap), 35, r))
        self.V = np.zeros((len(kap), 21, r))
        self.U[keep] = U[:, :, :r]
        self.V[keep] = np.transpose(Vt[:, :r, :], (0, 2, 1))

    def _apply(self, B: np.ndarray, a: np.ndarray) -> np.ndarray:
        n = self.spec.n
        ah = np.fft.fftn(a, axes=tuple(range(n))).reshape(-1, a.shape[-1])
        c = np.einsum("nir,ni->nr", B, ah)
        out = np.einsum("nir,nr->ni", B, c).reshape(a.shape)
        return np.fft.ifftn(out, axes=tuple(range(n))).real

    def Pi(self, F: np.ndarray) -> np.ndarray:
        return self._apply(self.U, F)

    def Q(self, u: np.ndarray) -> np.ndarray:
        return self._apply(self.V, u)


class _Jacobian:
    """u -> Pi *0 D*(d Lambda Q u) and its transpose, on flattened real arrays.

    Without a reduction this is u -> P *0 D*(d Lambda u).
    """

    def __init__(self, spec: GridSpec, lin, red: GaugeReduction | None = None):
        self.spec = spec
        self.lin = lin
        self.red = red
        self.shape2 = tuple(spec.shape) + (21,)
        self.shape3 = tuple(spec.shape) + (35,)
        self.count = 0

    def _range(self, F):
        return self.red.Pi(F) if self.red is not None else project_exact(self.spec, F, 3)

    def matvec(self, u):
        self.count += 1
        u = np.asarray(u).reshape(self.shape2)
        if self.red is not None:
            u = self.red.Q(u)
        deta = grid_d(self.spec, inverse_gradient_scale(self.spec, u), 2)
        return self._range(star0(self.lin.apply(deta), 7, 4)).ravel()

    def rmatvec(self, v):
        self.count += 1
        v = np.asarray(v).reshape(self.shape3)
        w = self.lin.apply_T(star0_T(self._range(v), 7, 4))
        out = inverse_gradient_scale(self.spec, grid_dT(self.spec, w, 2))
        if self.red is not None:
            out = self.red.Q(out)
        return out.ravel()

    def operator(self) -> LinearOperator:
        n2 = int(np.prod(self.shape2))
        n3 = int(np.prod(self.shape3))
        return LinearOperator((n3, n2), matvec=self.matvec, rmatvec=self.rmatvec, dtype=float)


def _residual(spec: GridSpec, phi: np.ndarray, red: GaugeReduction | None = None):
    """(F, projected residual, full residual)."""
    psi = bt.g2_psi(phi)
    S = star0(psi, 7, 4)
    F = project_exact(spec, S, 3)
    Fp = red.Pi(S) if red is not None else F
    return Fp, rms(Fp), rms(F)


def remove_torsion(phi_closed: GridForm, opts: SolveOptions | None = None,
                   eta0: GridForm | None = None, strict: bool = True) -> tuple[GridForm, TorsionSolveState]:
    """Solve Pi F(phi + d eta) = 0 starting from eta0 (default 0).

    The input is first replaced by its discretely closed part. Pi is the
    per-mode range projector at the mean structure (see GaugeReduction),
    so each Newton system is square and well conditioned. What Pi drops is
    the part of F no exact correction can reach on this grid; its size at
    the final iterate, together with the removed coexact remainder, is the
    truncation floor.
    """
    opts = opts or SolveOptions()
    spec = phi_closed.spec
    t_start = time.perf_counter()
    co = phi_closed.coexact_part()
    base = phi_closed - co
    _require_positive(base, opts.min_eig)
    red = GaugeReduction(spec, base.mean())
    eta = eta0 if eta0 is not None else GridForm(spec, 2, np.zeros(tuple(spec.shape) + (21,)))
    phi = base.data + grid_d(spec, eta.data, 2)
    F, res, full = _residual(spec, phi, red)
    state = TorsionSolveState(base, eta, co.rms(), opts)
    state.history.append(StepRecord(0, res, 1.0, 0, time.perf_counter() - t_start, full))
    it = 0
    while res > opts.tol and it < opts.max_iter:
        it += 1
        lin = bt.G2Linearization(phi.reshape(-1, 35))
        jac = _Jacobian(spec, _Reshaped(lin, spec), red)
        rtol = min(1e-2, max(0.1 * opts.tol / res, 1e-14))
        sol = lsmr(jac.operator(), -F.ravel(), atol=rtol, btol=rtol, maxiter=opts.lsmr_maxiter)
        du = sol[0].reshape(tuple(spec.shape) + (21,))
        deta = inverse_gradient_scale(spec, red.Q(du))
        alpha = 1.0
        while True:
            trial_eta = eta.data + alpha * deta
            trial = base.data + grid_d(spec, trial_eta, 2)
            m, _ = positivity(trial)
            if m >= opts.min_eig:
                F_new, res_new, full_new = _residual(spec, trial, red)
                if res_new < res or not opts.damping:
                    break
            if not opts.damping or alpha < 1e-4:
                raise NotConvergedError(f"step rejected at iteration {it} (positivity or no decrease)")
            alpha *= 0.5
        eta = GridForm(spec, 2, trial_eta)
        phi, F, res, full = trial, F_new, res_new, full_new
        state.history.append(StepRecord(it, res, alpha, int(sol[2]), time.perf_counter() - t_start, full))
    state.eta = eta
    state.truncation_floor = float(np.hypot(co.rms(), full))
    state.converged = res <= opts.tol
    if strict and not state.converged:
        raise NotConvergedError(f"no convergence in {opts.max_iter} iterations; residual curve: "
                                + ", ".join(f"{r.residual:.2e}" for r in state.history))
    return state.phi, state


class _Reshaped:
    """Adapter giving G2Linearization grid-shaped inputs and outputs."""

    def __init__(self, lin: bt.G2Linearization, spec: GridSpec):
        self.lin = lin
        self.shape = tuple(spec.shape) + (35,)

    def apply(self, a):
        return self.lin.apply(a.reshape(-1, 35)).reshape(self.shape)

    def apply_T(self, y):
        return self.lin.apply_T(y.reshape(-1, 35)).reshape(self.shape)


def s1_invariant_solve(phi_closed: GridForm, opts: SolveOptions | None = None, axis: int = 0,
                       **kw) -> tuple[GridForm, TorsionSolveState]:
    """Torsion removal restricted to theta-independent corrections.

    The theta axis is collapsed, so every iterate is S^1-invariant by
    construction and the output defect is exactly zero.
    """
    if phi_closed.theta_defect(axis) != 0.0:
        raise TorsionError("input depends on theta; s1_invariant_solve needs an S^1-invariant form")
    spec = phi_closed.spec
    if spec.shape[axis] != 1:
        data = np.take(phi_closed.data, [0], axis=axis)
        shape = list(spec.shape)
        shape[axis] = 1
        phi_closed = GridForm(GridSpec(spec.lengths, tuple(shape)), 3, data)
    return remove_torsion(phi_closed, opts, **kw)


def expand_axis(form: GridForm, axis: int, points: int) -> GridForm:
    """Replicate a form along a collapsed axis (for unrestricted solves)."""
    if form.spec.shape[axis] != 1:
        raise ValueError("axis is not collapsed")
    shape = list(form.spec.shape)
    shape[axis] = points
    data = np.repeat(form.data, points, axis=axis)
    return GridForm(GridSpec(form.spec.lengths, tuple(shape)), form.degree, data)


def random_exact_direction(rng: np.random.Generator, spec: GridSpec, modes: int = 2,
                           amplitude: float = 1.0) -> GridForm:
    """d sigma for a random band-limited 2-form sigma."""
    mesh = spec.mesh()
    active = [j for j, s in enumerate(spec.shape) if s > 1]
    sigma = np.zeros(tuple(spec.shape) + (21,))
    for _ in range(modes):
        comp = int(rng.integers(21))
        phase = np.zeros(spec.shape)
        for j in active:
            kj = int(rng.integers(-2, 3))
            phase = phase + kj * mesh[j] * (2 * np.pi / spec.lengths[j])
        sigma[..., comp] += amplitude * rng.normal() * np.cos(phase + rng.uniform(0, 2 * np.pi))
    return GridForm(spec, 2, sigma).d()


def fd_order_check(phi: GridForm, direction: GridForm, h0: float = 1e-2, halvings: int = 3) -> dict:
    """Central finite differences of F against DF; observed orders under h-halving."""
    exact = DF(phi, direction).data
    errs, hs = [], []
    h = h0
    for _ in range(halvings + 1):
        Fp = hitchin_map_F(phi + direction * h).data
        Fm = hitchin_map_F(phi - direction * h).data
        errs.append(rms((Fp - Fm) / (2 * h) - exact))
        hs.append(h)
        h /= 2
    orders = [float(np.log2(errs[i] / errs[i + 1])) for i in range(len(errs) - 1)]
    return {"h": hs, "errors": errs, "orders": orders}


REPORT_SCHEMA = "g2cy.glue-report/1"


@dataclass
class GlueReport:
    """Outcome of glue_and_solve; ``to_json`` is deterministic unless timing is requested."""

    config: object
    glued: object
    phi: GridForm
    state: TorsionSolveState
    su3: dict
    validation: dict
    classes: object
    class_shift: float
    timing: dict

    @property
    def ok(self) -> bool:
        return self.state.converged and bool(self.validation["all_ok"]) and self.classes.ok

    def to_json(self, timing: bool = False) -> dict:
        st = self.state
        d = {
            "schema": REPORT_SCHEMA,
            "config": self.config.to_json(),
            "grid": {"shape": list(self.phi.spec.shape), "lengths": list(self.phi.spec.lengths)},
            "glue": {"min_metric_eigenvalue": self.glued.min_eig},
            "solver": {
                "converged": st.converged, "iterations": st.iterations, "residual": st.residual,
                "full_residual": st.history[-1].full_residual, "truncation_floor": st.truncation_floor,
                "history": [{"iteration": r.iteration, "residual": r.residual, "full_residual": r.full_residual,
                             "damping": r.damping, "lsmr_iters": r.lsmr_iters} for r in st.history],
                "torsion": {"d_phi": self.su3["d_phi"], "d_psi": self.su3["d_psi"]},
                "class_shift": self.class_shift, "s1_defect": self.phi.theta_defect(0),
            },
            "su3_validation": {k: v for k, v in self.validation.items()},
            "classes": self.classes.to_json(),
            "ok": self.ok,
        }
        if timing:
            d["timing"] = dict(self.timing)
        return d


class StageError(TorsionError):
    """A pipeline failure labeled by stage."""

    def __init__(self, stage: str, err: Exception):
        super().__init__(f"[{stage}] {err}")
        self.stage = stage


def glue_and_solve(cfg, validate_tol: float = 1e-8) -> GlueReport:
    """glue_su3_pair -> s1_invariant_solve -> SU(3) decomposition -> validation and classes."""
    from .gluing import glue_su3_pair
    from .moduli import CohomologyVector, drop_axis, glued_class_check

    timing = {}
    t0 = time.perf_counter()
    try:
        gp = glue_su3_pair(cfg)
    except Exception as err:
        raise StageError("glue", err) from err
    timing["glue"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    try:
        phi, state = s1_invariant_solve(gp.phi_grid, cfg.solver, strict=False)
    except Exception as err:
        raise StageError("solve", err) from err
    timing["solve"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    try:
        z, re, im, om = bt.su3_from_phi(phi.data, axis=0)
        val = bt.validate_su3(re, im, om, tol=validate_tol)
    except Exception as err:
        raise StageError("decompose", err) from err
    validation = {k: float(np.max(val[k])) for k in ("i", "iii", "iv", "v_symmetry", "v_type")}
    validation["v_min_eig"] = float(np.min(val["v_min_eig"]))
    validation["all_ok"] = bool(np.all(val["ok"]))
    d_phi, d_psi = torsion_residual(phi)
    mean = lambda a: a.reshape(-1, a.shape[-1]).mean(axis=0)  # noqa: E731
    re_c = CohomologyVector.from_array(6, 3, mean(re))
    om_c = CohomologyVector.from_array(6, 2, mean(om))
    z_c = CohomologyVector.from_array(7, 1, mean(z))
    pred = {name: CohomologyVector.from_altform(gp.predicted(name)) for name in ("re", "omega", "z")}
    pred = {k: CohomologyVector.from_array(v.dim, v.degree, v.array()) for k, v in pred.items()}
    classes = glued_class_check(re_c, om_c, z_c, drop_axis(pred["re"]), drop_axis(pred["omega"]), pred["z"],
                                cfg.twisting.L, tol=validate_tol)
    shift = float(np.max(np.abs(phi.mean() - gp.phi_grid.mean())))
    timing["decompose"] = time.perf_counter() - t0
    su3 = {"z": z, "re": re, "im": im, "omega": om, "d_phi": d_phi, "d_psi": d_psi}
    return GlueReport(cfg, gp, phi, state, su3, validation, classes, shift, timing)
