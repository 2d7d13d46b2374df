"""Antenna placement: analytic gradient, projected gradient ascent, discrete greedy search."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..metrics import DesignPoint, noma_sinrs_batch, parts_batch
from ..model import (
    Scenario, UserSet, channel_jacobian, equivalent_channels, guided_phase, pa_channels,
)

LN2 = np.log(2.0)


@dataclass
class SolverReport:
    status: str = "optimal"
    iterations: int = 0
    trace: list = field(default_factory=list)

    @property
    def final_objective(self) -> float:
        return self.trace[-1] if self.trace else float("nan")


@dataclass
class PlacementConstraints:
    """Side constraints a placement move must respect (None disables one)."""

    r_min: np.ndarray | None = None
    mse_cap: float | None = None


class PlacementObjective:
    """R_H as a function of the PA positions with powers, phases and w frozen."""

    def __init__(self, design: DesignPoint, users: UserSet, sc: Scenario, alpha=None,
                 constraints: PlacementConstraints | None = None):
        self.users = users.all
        self.ka = users.n_aircomp
        self.sc = sc
        self.alpha = sc.alpha if alpha is None else alpha
        self.p_a = design.p_aircomp
        self.rho_n = np.asarray(design.rho_noma, float)
        self.w = design.w
        self.cons = constraints or PlacementConstraints()

    def _split(self, g):
        return g[..., : self.ka], g[..., self.ka:]

    def evaluate_channels(self, g, p_a=None, rho_n=None):
        """(R_H, feasible) for channel vectors g of shape (..., K).

        ``p_a``/``rho_n`` override the frozen powers (they broadcast with g).
        """
        sc = self.sc
        ga, gn = self._split(g)
        p_a = self.p_a if p_a is None else p_a
        rho_n = self.rho_n if rho_n is None else rho_n
        r_h, _, _, mse, ia, _ = parts_batch(ga, gn, p_a, rho_n, self.w,
                                             sc.noise_total, sc.bandwidth, self.alpha)
        ok = np.ones(np.shape(r_h), dtype=bool)
        if self.cons.r_min is not None:
            sinr = noma_sinrs_batch(gn, rho_n, ia, sc.noise_total)
            rates = sc.bandwidth * np.log2(1 + sinr)
            ok &= np.all(rates >= self.cons.r_min, axis=-1)
        if self.cons.mse_cap is not None:
            ok &= mse <= self.cons.mse_cap
        return r_h, ok

    def __call__(self, v):
        g = equivalent_channels(self.users, v, self.sc)
        r_h, ok = self.evaluate_channels(g)
        return float(r_h), bool(ok)

    def gradient(self, v):
        return _gradient(self.users, self.ka, np.asarray(v, float), self.p_a, self.rho_n,
                         self.w, self.sc, self.alpha)


def _gradient(users, ka, v, p_a, rho_n, w, sc: Scenario, alpha):
    g = equivalent_channels(users, v, sc)
    jac = channel_jacobian(users, v, sc)
    ga, gn = g[:ka], g[ka:]
    ja, jn = jac[:ka], jac[ka:]
    n0 = sc.noise_total
    coef = sc.bandwidth / LN2

    # magnitude-driven NOMA term through d|g|^2 = 2 Re(conj(g) dg)
    d_ia = (np.abs(p_a) ** 2) @ (2 * np.real(np.conj(ga)[:, None] * ja))
    d_s = rho_n @ (2 * np.real(np.conj(gn)[:, None] * jn))
    ia = float(np.sum(np.abs(p_a * ga) ** 2))
    s = float(np.sum(rho_n * np.abs(gn) ** 2))
    d_rn = coef * ((d_s + d_ia) / (s + ia + n0) - d_ia / (ia + n0))

    # the complex products w^H g_k p_k carry phase, so propagate the full differential
    y = np.conj(w) * ga * p_a
    dy = np.conj(w) * ja * p_a[:, None]
    nw = n0 * abs(w) ** 2
    e2 = float(np.sum(np.abs(y) ** 2)) + nw
    mse = float(np.sum(np.abs(y - 1) ** 2)) + nw
    if e2 > mse:
        d_e = np.sum(2 * np.real(np.conj(y)[:, None] * dy), axis=0)
        d_m = np.sum(2 * np.real(np.conj(y - 1)[:, None] * dy), axis=0)
        d_ra = coef * (d_e / e2 - d_m / mse)
    else:
        d_ra = np.zeros_like(v)
    return alpha * d_ra + (1 - alpha) * d_rn


def hybrid_gradient_v(design: DesignPoint, users: UserSet, sc: Scenario, alpha=None) -> np.ndarray:
    """dR_H/dv_n for every PA."""
    a = sc.alpha if alpha is None else alpha
    return _gradient(users.all, users.n_aircomp, np.asarray(design.placement, float),
                     design.p_aircomp, np.asarray(design.rho_noma, float), design.w, sc, a)


def placement_pga(design: DesignPoint, users: UserSet, sc: Scenario, max_iters: int = 100,
                  alpha=None, constraints: PlacementConstraints | None = None,
                  step_fraction: float = 0.1, armijo: float = 1e-4, shrink: float = 0.5,
                  max_backtracks: int = 30, tol: float = 1e-6):
    """Projected gradient ascent on [0, L_x]^N with Armijo backtracking.

    Trial points that break a side constraint are treated like insufficient
    increase and shrink the step. The start must be feasible.
    """
    obj = PlacementObjective(design, users, sc, alpha, constraints)
    return _pga_loop(obj, np.asarray(design.placement, float), sc.waveguide_length, max_iters,
                     step_fraction, armijo, shrink, max_backtracks, tol)


def _pga_loop(obj, v, L, max_iters, step_fraction=0.1, armijo=1e-4, shrink=0.5,
              max_backtracks=30, tol=1e-6):
    v = np.clip(v, 0.0, L)
    f = float(obj(v)[0])
    rep = SolverReport(trace=[f])
    prev = None
    for it in range(1, max_iters + 1):
        grad = obj.gradient(v)
        gnorm = float(np.linalg.norm(grad))
        if gnorm == 0.0 or not np.isfinite(gnorm):
            rep.status = "stationary"
            rep.iterations = it - 1
            break
        eta = step_fraction * L / gnorm
        if prev is not None:
            # Barzilai-Borwein guess for the first trial, never longer than the cap
            s, y = v - prev[0], grad - prev[1]
            sy = abs(float(s @ y))
            if sy > 0:
                eta = min(eta, float(s @ s) / sy)
        prev = (v, grad)
        accepted = False
        for _ in range(max_backtracks + 1):
            trial = np.clip(v + eta * grad, 0.0, L)
            ft, ok = obj(trial)
            ft = float(ft)
            if ok and ft >= f + armijo * float(grad @ (trial - v)) and ft >= f:
                accepted = True
                break
            eta *= shrink
        if not accepted:
            rep.status = "line-search"
            rep.iterations = it - 1
            break
        moved = float(np.linalg.norm(trial - v))
        v, f = trial, ft
        rep.trace.append(f)
        rep.iterations = it
        if moved <= tol:
            rep.status = "converged"
            break
    else:
        rep.status = "max-iterations"
    return v, rep


def discrete_grid(anchor: float, step: float, length: float) -> np.ndarray:
    """Grid points anchor + m*step inside [0, L]."""
    lo = -np.floor(anchor / step + 1e-12)
    hi = np.floor((length - anchor) / step + 1e-12)
    pts = anchor + np.arange(lo, hi + 1) * step
    return np.clip(pts, 0.0, length)


def placement_discrete(design: DesignPoint, users: UserSet, sc: Scenario, anchors,
                       step: float | None = None, alpha=None,
                       constraints: PlacementConstraints | None = None, max_passes: int = 50,
                       follow_powers: bool = False):
    """Greedy coordinate search: each PA in turn jumps to its best grid point.

    PA n may only sit on ``anchors[n] + m*step``; with the uniform layout as
    anchors, the fixed layout is always reachable. Stops after a full pass
    without strict improvement. With ``follow_powers`` every candidate is
    scored with powers re-scaled to hold the received signals (see
    :func:`rescaled_design`). Returns the updated design and a report.
    """
    step = sc.discrete_step if step is None else step
    obj = PlacementObjective(design, users, sc, alpha, constraints)
    ka = obj.ka
    v = np.asarray(design.placement, float).copy()
    p_a, rho_n = design.p_aircomp, np.asarray(design.rho_noma, float)
    grids = [discrete_grid(a, step, sc.waveguide_length) for a in anchors]
    usr = obj.users
    g = equivalent_channels(usr, v, sc)
    f, _ = obj.evaluate_channels(g)
    f = float(f)
    rep = SolverReport(trace=[f])
    for p in range(max_passes):
        improved = False
        for n, grid in enumerate(grids):
            own = pa_channels(usr, v[n:n + 1], sc)[:, 0] * guided_phase(v[n:n + 1], sc)[0]
            rest = g - own
            cand = pa_channels(usr, grid, sc) * guided_phase(grid, sc)[None, :]
            gc = (rest[:, None] + cand).T  # (M, K)
            if follow_powers:
                pc, rc = _follow_powers(p_a, rho_n, g, gc, ka, sc)
            else:
                pc, rc = p_a, rho_n
            vals, ok = obj.evaluate_channels(gc, pc, rc)
            vals = np.where(ok, vals, -np.inf)
            best = int(np.argmax(vals))
            if vals[best] > f + 1e-12 * max(abs(f), 1.0):
                v[n] = grid[best]
                g = gc[best]
                if follow_powers:
                    p_a, rho_n = pc[best], rc[best]
                f = float(vals[best])
                improved = True
        rep.trace.append(f)
        rep.iterations = p + 1
        if not improved:
            rep.status = "converged"
            break
    else:
        rep.status = "max-iterations"
    out = design.replace(placement=v, rho_aircomp=np.abs(p_a) ** 2, theta_aircomp=np.angle(p_a),
                         rho_noma=rho_n)
    return out, rep


def _follow_powers(p0, rho0, g_ref, g_new, ka: int, sc: Scenario):
    """Transmit powers that hold each received signal fixed (broadcasts over rows of g_new).

    AirComp users keep the complex product g_k p_k, NOMA users keep rho_j |g_j|^2.
    Users already at their budget stay there (AirComp phases still follow the
    channel), and nobody is pushed past it.
    """
    tight = 1 - 1e-9
    cap = np.sqrt(sc.p_aircomp)
    p = p0 * g_ref[:ka] / g_new[..., :ka]
    pinned = np.abs(p0) >= tight * cap
    p = np.where(pinned | (np.abs(p) > cap), cap * np.exp(1j * np.angle(p)), p)
    rho = np.minimum(rho0 * np.abs(g_ref[ka:]) ** 2 / np.abs(g_new[..., ka:]) ** 2, sc.p_noma)
    rho = np.where(rho0 >= tight * sc.p_noma, sc.p_noma, rho)
    return p, rho


def rescaled_design(design: DesignPoint, g_ref, g_new, ka: int, sc: Scenario) -> DesignPoint:
    """Design whose powers keep the received signals they produced under ``g_ref``."""
    p, rho = _follow_powers(design.p_aircomp, np.asarray(design.rho_noma, float), g_ref, g_new, ka, sc)
    return design.replace(rho_aircomp=np.abs(p) ** 2, theta_aircomp=np.angle(p), rho_noma=rho)


class _RescaledObjective:
    """R_H(v) with transmit powers re-scaled to hold received signals (see rescaled_design)."""

    def __init__(self, design, users, sc, alpha, constraints, fd_step=1e-6):
        self.design = design
        self.users = users.all
        self.ka = users.n_aircomp
        self.sc = sc
        self.alpha = sc.alpha if alpha is None else alpha
        self.cons = constraints or PlacementConstraints()
        self.g_ref = equivalent_channels(self.users, design.placement, sc)
        self.h = fd_step

    def design_at(self, v):
        g = equivalent_channels(self.users, v, self.sc)
        return rescaled_design(self.design, self.g_ref, g, self.ka, self.sc).replace(placement=v), g

    def __call__(self, v):
        d, g = self.design_at(v)
        return PlacementObjective(d, _Users(self.users, self.ka), self.sc, self.alpha,
                                  self.cons).evaluate_channels(g)

    def gradient(self, v):
        out = np.empty(len(v))
        for n in range(len(v)):
            e = np.zeros(len(v))
            e[n] = self.h
            out[n] = (float(self(v + e)[0]) - float(self(v - e)[0])) / (2 * self.h)
        return out


@dataclass
class _Users:
    all: np.ndarray
    n_aircomp: int


def placement_pga_rescaled(design: DesignPoint, users: UserSet, sc: Scenario, max_iters: int = 50,
                           alpha=None, constraints: PlacementConstraints | None = None, **kw):
    """PGA over v in which transmit powers follow the placement (rescaled_design).

    With powers frozen, a placement move also detunes every power-controlled
    user, so plain PGA stalls on a ridge that the power blocks then re-balance
    a little at a time. Holding received signals fixed removes that coupling:
    only users pinned at their budget still feel the move.
    Returns the new design (placement and powers) and the solver report.
    """
    obj = _RescaledObjective(design, users, sc, alpha, constraints)
    v, rep = _pga_loop(obj, np.asarray(design.placement, float), sc.waveguide_length, max_iters, **kw)
    d, _ = obj.design_at(v)
    return d, rep
