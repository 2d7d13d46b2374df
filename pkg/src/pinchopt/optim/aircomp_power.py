"""AirComp power block: phase alignment followed by DC (minorize-maximize) iterations.

With theta_k = -arg(w^H g_k) every product w^H g_k p_k equals c_k sqrt(rho_k)
with c_k = |w^H g_k| >= 0, and the hybrid rate splits as F(rho) - G(rho, beta):

    F = (1-a) B log2(sum b rho + I_N + n) + a B log2(sum c^2 rho + n|w|^2)
    G = (1-a) B log2(sum b rho + n)       + a B log2(beta + n|w|^2)
    beta >= sum (c_k sqrt(rho_k) - 1)^2

Both pieces are concave, so replacing G by its tangent plane gives a global
minorizer of the hybrid rate that touches it at the expansion point. Each
surrogate is maximized in u = sqrt(rho), where every constraint is smooth.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from ..model import ChannelState, Scenario
from ..metrics import aligned_phases

LN2 = np.log(2.0)


@dataclass
class DcReport:
    status: str = "optimal"
    iterations: int = 0
    trace: list = field(default_factory=list)  # true objective at each iterate
    tangency_gap: list = field(default_factory=list)  # |surrogate - true| at expansion points
    surrogate_gain: list = field(default_factory=list)
    iterates: list = field(default_factory=list)  # AirComp powers at each accepted iterate

    @property
    def final_objective(self) -> float:
        return self.trace[-1]


@dataclass
class AircompPowerResult:
    rho: np.ndarray
    theta: np.ndarray
    beta: float
    report: DcReport


class _Model:
    """Aligned-phase hybrid rate over x = (sqrt(rho_aircomp), rho_noma / P_noma).

    The NOMA part of x is held fixed by the bounds; keeping it in x lets the
    same expressions serve both the objective and its surrogate.
    """

    def __init__(self, ch: ChannelState, w, sc: Scenario, alpha):
        self.b = np.abs(ch.g_aircomp) ** 2
        self.c = np.abs(np.conj(w) * ch.g_aircomp)
        self.q = np.abs(ch.g_noma) ** 2 * sc.p_noma  # received NOMA power at full budget
        self.n = sc.noise_total
        self.nw = sc.noise_total * abs(w) ** 2
        self.B = sc.bandwidth
        self.a = sc.alpha if alpha is None else alpha
        self.ka = len(self.b)

    def split(self, x):
        return x[: self.ka], x[self.ka:]

    def beta(self, x):
        return float(np.sum((self.c * x[: self.ka] - 1.0) ** 2))

    def true(self, x):
        u, r = self.split(x)
        rho = u * u
        ia = self.b @ rho
        r_n = self.B * np.log2(1 + (self.q @ r) / (ia + self.n))
        e2 = (self.c**2) @ rho + self.nw
        mse = self.beta(x) + self.nw
        r_a = self.B * np.log2(max(e2 / mse, 1.0))
        return self.a * r_a + (1 - self.a) * r_n

    def surrogate(self, x0):
        """(value, grad) of the tangent minorizer built at x0."""
        a, B, b, c, n, nw, q, ka = self.a, self.B, self.b, self.c, self.n, self.nw, self.q, self.ka
        u0 = x0[:ka]
        rho0 = u0 * u0
        beta0 = self.beta(x0)
        ia0 = b @ rho0
        g0 = (1 - a) * B * np.log2(ia0 + n) + a * B * np.log2(beta0 + nw)
        grad_rho = (1 - a) * B / LN2 * b / (ia0 + n)
        grad_beta = a * B / LN2 / (beta0 + nw)

        def value(x):
            u, r = self.split(x)
            rho = u * u
            f = (1 - a) * B * np.log2(b @ rho + q @ r + n) + a * B * np.log2((c**2) @ rho + nw)
            lin = g0 + grad_rho @ (rho - rho0) + grad_beta * (self.beta(x) - beta0)
            return f - lin

        def grad(x):
            u, r = self.split(x)
            rho = u * u
            tot = b @ rho + q @ r + n
            df = (1 - a) * B / LN2 * b / tot + a * B / LN2 * c**2 / ((c**2) @ rho + nw)
            gu = (df - grad_rho) * 2 * u - grad_beta * 2 * c * (c * u - 1.0)
            gr = (1 - a) * B / LN2 * q / tot
            return np.concatenate([gu, gr])

        return value, grad


def aircomp_power_allocation(
    ch: ChannelState,
    rho_noma,
    w,
    sc: Scenario,
    rho_init=None,
    interference_cap=None,
    mse_cap=None,
    alpha=None,
    max_iter: int = 50,
    tol: float = 1e-8,
) -> AircompPowerResult:
    """Maximize the hybrid rate over AirComp powers for fixed NOMA powers, w, placement.

    ``interference_cap`` bounds sum_k rho_k |g_k|^2 (keeps the NOMA QoS targets met);
    ``mse_cap`` bounds the AirComp MSE. Both are optional; the start point must
    satisfy whichever caps are given.
    """
    theta = aligned_phases(ch.g_aircomp, w)
    pmax = sc.p_aircomp
    rho0 = 0.5 * pmax if rho_init is None else np.clip(np.asarray(rho_init, float), 0, pmax)
    m = _Model(ch, w, sc, alpha)
    ka, kn = m.ka, len(m.q)
    r0 = np.clip(np.asarray(rho_noma, float) / sc.p_noma, 0.0, 1.0)
    x = np.concatenate([np.sqrt(rho0), r0])
    lb = np.concatenate([np.zeros(ka), r0])
    ub = np.concatenate([np.sqrt(pmax), r0])
    free = np.concatenate([np.ones(ka, bool), np.zeros(kn, bool)])

    cons, checks = [], []
    if interference_cap is not None and np.isfinite(interference_cap):
        iscale = max(interference_cap, float(m.b @ pmax), 1e-300)
        cons.append({
            "type": "ineq",
            "fun": lambda y: (interference_cap - m.b @ (y[:ka] ** 2)) / iscale,
            "jac": lambda y: np.concatenate([-2 * m.b * y[:ka], np.zeros(kn)]) / iscale,
        })
        checks.append(lambda y: m.b @ (y[:ka] ** 2) <= interference_cap)
    if mse_cap is not None:
        beta_cap = mse_cap - m.nw
        bscale = max(abs(beta_cap), 1e-12)
        cons.append({
            "type": "ineq",
            "fun": lambda y: (beta_cap - m.beta(y)) / bscale,
            "jac": lambda y: np.concatenate([-2 * m.c * (m.c * y[:ka] - 1.0), np.zeros(kn)]) / bscale,
        })
        checks.append(lambda y: m.beta(y) <= beta_cap)

    def feasible(y):
        return all(chk(y) for chk in checks)

    rep = DcReport()
    cur = m.true(x)
    rep.trace.append(cur)
    rep.iterates.append(x[:ka] ** 2)
    scale = sc.bandwidth
    for it in range(max_iter):
        value, grad = m.surrogate(x)
        rep.tangency_gap.append(abs(value(x) - cur))
        with warnings.catch_warnings():
            # SLSQP clips its own line-search probes to the bounds; harmless here
            warnings.filterwarnings("ignore", "Values in x were outside bounds", RuntimeWarning)
            res = minimize(
                lambda y: -value(y) / scale, x, jac=lambda y: -grad(y) / scale, method="SLSQP",
                bounds=list(zip(lb, ub)), constraints=cons,
                options={"ftol": 1e-12, "maxiter": 200},
            )
        cand = np.where(free, np.clip(res.x, lb, ub), x)
        # SLSQP may end a hair outside the convex set; back off along the segment
        t = 1.0
        while not feasible(x + t * (cand - x)) and t > 1e-12:
            t *= 0.5
        cand = x + t * (cand - x)
        gain = value(cand) - value(x)
        rep.surrogate_gain.append(gain)
        if not feasible(cand) or gain <= 0:
            rep.iterations = it + 1
            break
        new = m.true(cand)
        if new < cur:
            # only reachable when the R_A clamp is active at x (surrogate not tangent there)
            rep.status = "clamped"
            rep.iterations = it + 1
            break
        x = cand
        prev, cur = cur, new
        rep.trace.append(cur)
        rep.iterates.append(x[:ka] ** 2)
        rep.iterations = it + 1
        if abs(cur - prev) < tol * max(abs(prev), 1.0):
            break
    else:
        rep.status = "max-iterations"

    u = x[:ka]
    return AircompPowerResult(rho=u * u, theta=theta, beta=m.beta(x), report=rep)


@dataclass
class ScalingResult:
    t: float
    value: float
    start_value: float


def amplitude_scaling(g_aircomp, g_noma, p_aircomp, rho_noma, w, sc: Scenario,
                      interference_cap=None, mse_cap=None, alpha=None, grid: int = 400) -> ScalingResult:
    """Best common scale t for (p_k -> t p_k, w -> w / t).

    Every product w^H g_k p_k is unchanged, so only the noise term n|w|^2/t^2
    and the AirComp interference t^2 I_A move. The power and receive-scalar
    blocks cannot take this step on their own: with w frozen the computation
    rate is sharply peaked at the current amplitudes. ``t = 1`` is returned
    when no admissible scale improves the hybrid rate.
    """
    a = sc.alpha if alpha is None else alpha
    B, n = sc.bandwidth, sc.noise_total
    y = np.conj(w) * np.asarray(g_aircomp) * np.asarray(p_aircomp)
    Y = float(np.sum(np.abs(y) ** 2))
    M = float(np.sum(np.abs(y - 1) ** 2))
    nw = n * abs(w) ** 2
    ia = float(np.sum(np.abs(g_aircomp * p_aircomp) ** 2))
    s = float(np.sum(np.abs(g_noma) ** 2 * rho_noma))
    rho = np.abs(p_aircomp) ** 2

    def value(t):
        t = np.asarray(t, float)
        r_a = B * np.log2(np.maximum((Y + nw / t**2) / (M + nw / t**2), 1.0))
        r_n = B * np.log2(1 + s / (t**2 * ia + n))
        return a * r_a + (1 - a) * r_n

    f1 = float(value(1.0))
    if ia <= 0 or nw <= 0:
        return ScalingResult(1.0, f1, f1)
    pos = rho > 0
    t_hi = float(np.min(np.sqrt(sc.p_aircomp[pos] / rho[pos])))
    if interference_cap is not None and np.isfinite(interference_cap):
        t_hi = min(t_hi, np.sqrt(max(interference_cap, 0.0) / ia))
    t_lo = 1e-3
    if mse_cap is not None:
        if mse_cap <= M:
            return ScalingResult(1.0, f1, f1)
        t_lo = max(t_lo, np.sqrt(nw / (mse_cap - M)))
    if t_hi <= t_lo:
        return ScalingResult(1.0, f1, f1)
    ts = np.geomspace(t_lo, t_hi, grid)
    vals = value(ts)
    k = int(np.argmax(vals))
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, grid - 1)]
    res = minimize_scalar(lambda t: -float(value(t)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12 * hi})
    cands = [(float(vals[k]), float(ts[k]))]
    if res.success:
        cands.append((-float(res.fun), float(res.x)))
    best_v, best_t = max(cands)
    # the caps use strict arithmetic, so a tiny overshoot at t_hi is clipped back
    best_t = min(max(best_t, t_lo), t_hi)
    best_v = float(value(best_t))
    if best_v > f1:
        return ScalingResult(best_t, best_v, f1)
    return ScalingResult(1.0, f1, f1)
