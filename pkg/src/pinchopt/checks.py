"""Oracle and property suites behind ``pinchopt selftest``.

Each suite compares a solver or identity against an independent reference
(brute-force enumeration, finite differences, closed forms) on seeded random
instances and returns a :class:`CheckResult`.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .ao import AoConfig, ao_solve
from .metrics import (
    DesignPoint, aircomp_mse, aircomp_second_moment, hybrid_value, noma_rates, noma_sum_closed_form,
)
from .model import ChannelState, Scenario, channel_state, sample_users
from .optim import aircomp_power_allocation, hybrid_gradient_v, noma_power_allocation
from .optim.aircomp_power import _Model


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float  # worst observed statistic (meaning depends on the suite)
    limit: float
    cases: int
    seconds: float = 0.0
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] {self.name}: worst={self.worst:.3g} limit={self.limit:.3g} "
                f"cases={self.cases} ({self.seconds:.1f}s){' ' + self.detail if self.detail else ''}")


def _random_design(rng, sc: Scenario, users, v=None, aligned=False):
    v = np.sort(rng.uniform(0, sc.waveguide_length, sc.n_antennas)) if v is None else v
    rho_a = rng.uniform(0, 1, sc.n_aircomp) * sc.p_aircomp
    rho_n = rng.uniform(0, 1, sc.n_noma) * sc.p_noma
    ch = channel_state(users, v, sc)
    if aligned:
        theta = -np.angle(ch.g_aircomp)
    else:
        theta = rng.uniform(-np.pi, np.pi, sc.n_aircomp)
    # centroid scalar so that the computation rate is away from its clamp
    a = ch.g_aircomp * np.sqrt(rho_a) * np.exp(1j * theta)
    w = 1.0 / np.conj(np.mean(np.conj(a)))
    return DesignPoint(rho_a, theta, rho_n, w, v), ch


# -- (a) telescoping -----------------------------------------------------------

def check_telescoping(n: int = 1000, seed: int = 0, limit: float = 1e-10) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        sc = Scenario().with_users(n_aircomp=int(rng.integers(1, 7)), n_noma=int(rng.integers(1, 7)),
                                   n_antennas=int(rng.integers(1, 9)))
        users = sample_users(rng, sc)
        d, ch = _random_design(rng, sc, users)
        _, total = noma_rates(d, ch, sc)
        closed = noma_sum_closed_form(d, ch, sc)
        worst = max(worst, abs(total - closed) / max(abs(closed), 1e-300))
    return CheckResult("telescoping identity", worst <= limit, worst, limit, n)


# -- (b) gradient ----------------------------------------------------------------

def check_gradient(n: int = 100, seed: int = 1, step: float = 1e-6, limit: float = 1e-4) -> CheckResult:
    """Relative error ||analytic - FD|| / ||FD|| of dR_H/dv on the default scenario."""
    rng = np.random.default_rng(seed)
    sc = Scenario()
    worst = 0.0
    for _ in range(n):
        users = sample_users(rng, sc)
        # keep PAs off the boundary so the central difference stays inside [0, L]
        v = np.sort(rng.uniform(0.01, sc.waveguide_length - 0.01, sc.n_antennas))
        d, _ = _random_design(rng, sc, users, v)
        grad = hybrid_gradient_v(d, users, sc)
        fd = np.empty_like(grad)
        for k in range(len(v)):
            e = np.zeros_like(v)
            e[k] = step
            hi = hybrid_value(d.replace(placement=v + e), channel_state(users, v + e, sc), sc)
            lo = hybrid_value(d.replace(placement=v - e), channel_state(users, v - e, sc), sc)
            fd[k] = (hi - lo) / (2 * step)
        worst = max(worst, float(np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-300)))
    return CheckResult("placement gradient vs finite differences", worst <= limit, worst, limit, n)


# -- (c) LP vs brute force -----------------------------------------------------------

def _qos_feasible_grid(gain, rho_grid, ia, noise, gamma):
    """Boolean mask of grid points meeting every SINR target, evaluated from the SINR definition."""
    k = len(gain)
    rx = [gain[j] * rho_grid[j] for j in range(k)]
    ok = np.ones(np.broadcast(*rho_grid).shape, dtype=bool)
    for j in range(k):
        stronger = [t for t in range(k) if gain[t] > gain[j] or (gain[t] == gain[j] and t > j)]
        interf = sum((rx[t] for t in stronger), np.zeros_like(rx[j])) + ia + noise
        ok &= rx[j] >= gamma[j] * interf * (1 - 1e-12)
    return ok


def _vertex_oracle(gain, pmax, ia, noise, gamma):
    """Exact LP optimum of max sum gain*rho by enumerating basic solutions."""
    k = len(gain)
    rows, rhs = [], []
    for j in range(k):
        if gamma[j] > 0:
            row = np.zeros(k)
            row[j] = -gain[j]
            for t in range(k):
                if gain[t] > gain[j] or (gain[t] == gain[j] and t > j):
                    row[t] += gamma[j] * gain[t]
            rows.append(row)
            rhs.append(-gamma[j] * (ia + noise))
    for j in range(k):
        e = np.zeros(k)
        e[j] = 1.0
        rows += [e, -e]
        rhs += [pmax[j], 0.0]
    A, b = np.array(rows), np.array(rhs)
    best = None
    for idx in itertools.combinations(range(len(A)), k):
        sub = A[list(idx)]
        if abs(np.linalg.det(sub)) < 1e-14 * max(1.0, np.abs(sub).max() ** k):
            continue
        x = np.linalg.solve(sub, b[list(idx)])
        if np.all(A @ x <= b + 1e-9 * (np.abs(b) + np.abs(A) @ np.abs(x) + 1e-30)):
            val = float(gain @ x)
            best = val if best is None else max(best, val)
    return best


def check_lp(n: int = 100, seed: int = 2, points: int = 200) -> CheckResult:
    """NOMA power LP against vertex enumeration and a ``points``-per-axis grid.

    The grid check requires grid_best <= LP (nothing feasible beats the LP)
    and LP - grid_best <= the objective change of one grid step per axis.
    Returned ``worst`` is the largest gap/allowance ratio seen.
    """
    rng = np.random.default_rng(seed)
    worst, fails = 0.0, []
    for case in range(n):
        kn = int(rng.integers(1, 4))
        sc = Scenario(r_min=float(rng.uniform(0, 2e6)), power_max=float(rng.uniform(0.01, 0.2)),
                      n_noma=kn, n_aircomp=2)
        g_n = (rng.normal(size=kn) + 1j * rng.normal(size=kn)) * 10 ** rng.uniform(-3.5, -2.5, kn)
        g_a = (rng.normal(size=2) + 1j * rng.normal(size=2)) * 1e-3
        rho_a = rng.uniform(0, 1, 2) * sc.p_aircomp * 10 ** rng.uniform(-4, 0)
        ch = ChannelState(g_a, g_n)
        ia = float(np.sum(np.abs(g_a) ** 2 * rho_a))
        gain = np.abs(g_n) ** 2
        gamma = sc.gamma
        res = noma_power_allocation(ch, rho_a, sc)
        exact = _vertex_oracle(gain, sc.p_noma, ia, sc.noise_total, gamma)
        if exact is None:
            if res.status != "infeasible":
                fails.append(f"case {case}: oracle infeasible, LP {res.status}")
            continue
        if res.status != "optimal":
            fails.append(f"case {case}: LP {res.status}, oracle optimum {exact:.3g}")
            continue
        s_lp = float(gain @ res.rho)
        if abs(s_lp - exact) > 1e-8 * exact:
            fails.append(f"case {case}: LP {s_lp:.12g} vs vertices {exact:.12g}")
        axes = [np.linspace(0, sc.p_noma[j], points) for j in range(kn)]
        grid = np.meshgrid(*axes, indexing="ij", sparse=True)
        ok = _qos_feasible_grid(gain, grid, ia, sc.noise_total, gamma)
        if not ok.any():
            continue
        s_grid = sum(gain[j] * grid[j] for j in range(kn))
        s_best = float(np.max(np.where(ok, s_grid, -np.inf)))
        to_rate = lambda s: sc.bandwidth * np.log2(1 + s / (ia + sc.noise_total))  # noqa: E731
        allowance = to_rate(s_lp) - to_rate(max(s_lp - float(np.sum(gain * sc.p_noma)) / (points - 1), 0))
        gap = to_rate(s_lp) - to_rate(s_best)
        if gap < -1e-9 * to_rate(s_lp):
            fails.append(f"case {case}: grid beats LP by {-gap:.3g}")
        worst = max(worst, gap / allowance if allowance > 0 else 0.0)
    passed = not fails and worst <= 1.0
    return CheckResult("NOMA power LP vs brute force", passed, worst, 1.0, n, detail="; ".join(fails[:3]))


# -- (d) MM ascent and tangency ---------------------------------------------------------

def _unclamped_hybrid(design, ch, sc):
    """alpha B log2(E/MSE) + (1 - alpha) R_N without the zero clamp on the computation rate."""
    e2 = aircomp_second_moment(design, ch, sc)
    mse = aircomp_mse(design, ch, sc)
    return sc.alpha * sc.bandwidth * np.log2(e2 / mse) + (1 - sc.alpha) * noma_sum_closed_form(design, ch, sc)


def check_mm(n: int = 50, seed: int = 3, rel: float = 1e-10) -> CheckResult:
    """Every DC iterate: the true objective never drops and the surrogate is tangent.

    Tangency is checked against the unclamped rate, which is what the DC split
    represents exactly; the ascent check uses the clamped objective. Both
    tolerances are relative to the objective scale (rates are ~1e7 bit/s).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    iters = 0
    for _ in range(n):
        sc = Scenario(alpha=float(rng.uniform(0, 1)))
        users = sample_users(rng, sc)
        d, ch = _random_design(rng, sc, users, aligned=True)
        res = aircomp_power_allocation(ch, d.rho_noma, d.w, sc, rho_init=d.rho_aircomp)
        tr = np.array(res.report.trace)
        scale = max(abs(tr).max(), 1.0)
        worst = max(worst, np.maximum(tr[:-1] - tr[1:], 0.0).max(initial=0.0) / scale)
        m = _Model(ch, d.w, sc, None)
        for rho in res.report.iterates:
            x = np.concatenate([np.sqrt(rho), np.asarray(d.rho_noma) / sc.p_noma])
            value, _ = m.surrogate(x)
            point = d.replace(rho_aircomp=rho, theta_aircomp=res.theta)
            worst = max(worst, abs(value(x) - _unclamped_hybrid(point, ch, sc)) / scale)
        iters += res.report.iterations
    return CheckResult("DC ascent and tangency", worst <= rel, worst, rel, n, detail=f"{iters} DC iterations")


# -- (e) micro instance ------------------------------------------------------------------

def micro_grid_optimum(users, sc: Scenario, n_rho: int = 400, n_v: int = 2001) -> float:
    """Brute-force optimum for K_A = K_N = N = 1.

    Grid over (rho_A, rho_N, v_1); the receive scalar is optimized in closed
    form per point. With one AirComp user the feasible set of wt = 1/w under
    the MSE cap is a disk about A/(1-eps) on the real axis (after rotating
    a* = conj(g p) onto it), so the best wt is A itself or that disk's edge.
    """
    assert sc.n_aircomp == sc.n_noma == sc.n_antennas == 1
    L, d, lam, n0, eps, B, al = (sc.waveguide_length, sc.height, sc.wavelength, sc.noise_total,
                                 sc.mse_threshold, sc.bandwidth, sc.alpha)
    v = np.linspace(0, L, n_v)[:, None, None]
    ua, un = users.aircomp[0], users.noma[0]
    ga2 = (lam / (4 * np.pi)) ** 2 / ((v - ua[0]) ** 2 + ua[1] ** 2 + d ** 2)
    gn2 = (lam / (4 * np.pi)) ** 2 / ((v - un[0]) ** 2 + un[1] ** 2 + d ** 2)
    rho_a = np.linspace(0, sc.p_aircomp[0], n_rho)[None, :, None]
    rho_n = np.linspace(0, sc.p_noma[0], 21)[None, None, :]
    amp2 = ga2 * rho_a  # |a|^2, A = |a|
    ia = amp2
    r_n = B * np.log2(1 + gn2 * rho_n / (ia + n0))
    qos = gn2 * rho_n >= sc.gamma[0] * (ia + n0) * (1 - 1e-12)
    A = np.sqrt(amp2)
    with np.errstate(divide="ignore", invalid="ignore"):
        if eps < 1:
            c = A / (1 - eps)
            r2 = c ** 2 - (amp2 + n0) / (1 - eps)
            edge = c - np.sqrt(np.maximum(r2, 0))
            centroid_ok = n0 <= eps * amp2
            z = np.where(centroid_ok, A, edge)
            mse_ok = (r2 >= 0) & (A > 0)
        else:
            z = A
            mse_ok = A > 0
        dist2 = (z - A) ** 2
        ratio = (amp2 + n0) / (dist2 + n0)
        r_a = B * np.log2(np.maximum(ratio, 1.0))
    val = al * r_a + (1 - al) * r_n
    val = np.where(qos & mse_ok, val, -np.inf)
    return float(np.max(val))


def check_micro(n: int = 5, seed: int = 4, limit: float = 0.01) -> CheckResult:
    rng = np.random.default_rng(seed)
    sc = Scenario(n_antennas=1, n_aircomp=1, n_noma=1)
    worst, done, detail = 0.0, 0, []
    for case in range(n * 4):
        if done == n:
            break
        users = sample_users(rng, sc)
        ref = micro_grid_optimum(users, sc)
        if not np.isfinite(ref):
            continue  # no feasible point on the grid: not a usable instance
        design, rep = ao_solve(users, sc, AoConfig(seed=case))
        if not rep.constraints_ok:
            detail.append(f"case {case}: solver output infeasible")
            worst = max(worst, 1.0)
        else:
            worst = max(worst, abs(rep.final_objective - ref) / ref)
        done += 1
    return CheckResult("micro instance vs grid search", worst <= limit, worst, limit, done,
                       detail="; ".join(detail))


SUITES = {
    "telescoping": check_telescoping,
    "gradient": check_gradient,
    "lp": check_lp,
    "mm": check_mm,
    "micro": check_micro,
}


def run_selftest(names=None, out=print) -> list[CheckResult]:
    results = []
    for name in names or SUITES:
        t0 = time.perf_counter()
        r = SUITES[name]()
        r.seconds = time.perf_counter() - t0
        results.append(r)
        if out is not None:
            out(r.line())
    return results
