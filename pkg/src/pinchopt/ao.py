"""Alternating optimization over (NOMA power, AirComp power, receive scalar, placement).

Every block starts from the current iterate and only hands back a point
that is at least as good, so the outer trace is non-decreasing. Side
constraints that a block cannot see directly are passed down as caps:

* AirComp powers may not raise the interference seen by NOMA beyond what
  the QoS targets tolerate, nor push the MSE above its threshold.
* Placement moves must keep QoS and MSE satisfied.

When a drop starts MSE-infeasible (relaxed policy), the threshold used by
the blocks is max(eps0, current MSE): the violation may shrink, never grow.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .metrics import (
    DesignPoint, aircomp_mse, aligned_phases, check_constraints, hybrid_rate, hybrid_value,
)
from .model import ChannelState, Scenario, UserSet, channel_state, equivalent_channels, uniform_placement
from .optim import (
    PlacementConstraints, PlacementObjective, aircomp_interference_cap, aircomp_power_allocation, amplitude_scaling,
    noma_min_power,
    noma_power_allocation, placement_discrete, placement_pga, placement_pga_rescaled, rescaled_design, receive_scalar_update,
)


class SolverInvariantError(RuntimeError):
    """A block lowered the objective beyond tolerance: a solver bug, not a data issue."""


class BenchmarkScheme(str, enum.Enum):
    PROPOSED = "proposed"
    FIXED_PA = "fixed_pa"
    DISCRETE_PAS = "discrete_pas"
    FULL_POWER = "full_power"


@dataclass
class AoConfig:
    max_outer_iters: int = 30
    tol: float = 1e-6
    multistart: int = 4
    pga_iters: int = 100
    dc_max_iter: int = 50
    strict_mse: bool = False
    follow_powers: bool = True  # extra placement pass with powers tracking the channels
    monotone_slack: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.multistart < 1:
            raise ValueError("multistart must be >= 1")


@dataclass
class InitResult:
    design: DesignPoint
    qos_feasible: bool
    mse_feasible: bool


@dataclass
class AoReport:
    status: str = "optimal"
    iterations: int = 0
    trace: list = field(default_factory=list)  # R_H after each outer iteration (entry 0 = start)
    block_trace: list = field(default_factory=list)  # (iteration, block, R_H)
    rejected_blocks: int = 0
    qos_feasible: bool = True
    mse_feasible: bool = True
    constraints_ok: bool = True
    warm_start_used: bool = False
    final_objective: float = float("nan")


# -- initialization ----------------------------------------------------------

def _equalized(ch, level, pmax):
    """AirComp powers giving every user the received amplitude sqrt(level)."""
    gain = np.abs(ch.g_aircomp) ** 2
    return np.minimum(level / np.maximum(gain, 1e-300), pmax)


def initialize(users: UserSet, sc: Scenario) -> InitResult:
    """Uniform layout, half-power aligned AirComp, minimum-power QoS NOMA, centroid w.

    Falls back to equalized, lower AirComp amplitudes when the half-power start
    breaks the QoS targets or the MSE threshold.
    """
    v = uniform_placement(sc.n_antennas, sc.waveguide_length)
    ch = channel_state(users, v, sc)
    gain_a = np.abs(ch.g_aircomp) ** 2
    pa = sc.p_aircomp
    theta = aligned_phases(ch.g_aircomp, 1.0)
    n0 = sc.noise_total

    def attempt(rho_a):
        noma = noma_min_power(ch, rho_a, sc)
        p_a = np.sqrt(rho_a) * np.exp(1j * theta)
        rs = receive_scalar_update(ch.g_aircomp, p_a, n0, sc.mse_threshold)
        return noma, rs

    candidates = [0.5 * pa]
    low = np.min(gain_a * 0.5 * pa)
    candidates.append(_equalized(ch, low, pa))
    candidates.append(_equalized(ch, min(2 * n0 / sc.mse_threshold, np.min(gain_a * pa)), pa))

    fallback = None
    for rho_a in candidates:
        noma, rs = attempt(rho_a)
        qos_ok = noma.status == "optimal"
        mse_ok = rs.status != "mse-infeasible"
        rho_n = noma.rho if qos_ok else sc.p_noma.copy()
        d = DesignPoint(rho_aircomp=rho_a, theta_aircomp=theta, rho_noma=rho_n, w=rs.w, placement=v)
        if qos_ok and mse_ok:
            return InitResult(d, True, True)
        if fallback is None or (qos_ok and not fallback.qos_feasible):
            fallback = InitResult(d, qos_ok, mse_ok)
    return fallback


# -- blocks --------------------------------------------------------------------

class _Engine:
    def __init__(self, users: UserSet, sc: Scenario, cfg: AoConfig, qos_on: bool, constrained=True,
                 power_blocks=("noma", "aircomp", "receive")):
        self.users = users
        self.power_blocks = power_blocks
        self.sc = sc
        self.cfg = cfg
        self.qos_on = qos_on
        self.constrained = constrained
        self.anchors = uniform_placement(sc.n_antennas, sc.waveguide_length)

    def ch(self, d):
        return channel_state(self.users, d.placement, self.sc)

    def value(self, d):
        return hybrid_value(d, self.ch(d), self.sc)

    def mse_cap(self, mse_now):
        if not self.constrained:
            return None
        if self.cfg.strict_mse:
            return self.sc.mse_threshold
        return max(self.sc.mse_threshold, mse_now)

    def noma(self, d, it):
        ch = self.ch(d)
        res = noma_power_allocation(ch, d.rho_aircomp, self.sc, enforce_qos=self.qos_on and self.constrained)
        if res.status != "optimal":
            return d
        return d.replace(rho_noma=res.rho)

    def aircomp(self, d, it):
        ch = self.ch(d)
        sc = self.sc
        cap_i = None
        if self.qos_on and self.constrained:
            cap_i = aircomp_interference_cap(ch, d.rho_noma, sc)
            cap_i = max(cap_i, float(np.sum(np.abs(ch.g_aircomp) ** 2 * d.rho_aircomp)))
        aligned = d.replace(theta_aircomp=aligned_phases(ch.g_aircomp, d.w))
        cap_m = self.mse_cap(aircomp_mse(aligned, ch, sc))
        if cap_m is not None and aircomp_mse(aligned, ch, sc) > cap_m:
            return aligned  # strict mode with an MSE-infeasible start: phases only
        # the common-scale move runs on both sides of DC: before it, the MSE budget
        # freed by the last receive update is still available to the scale
        d = self._scale(aligned, ch, cap_i, cap_m)
        res = aircomp_power_allocation(ch, d.rho_noma, d.w, sc, rho_init=d.rho_aircomp,
                                       interference_cap=cap_i, mse_cap=cap_m,
                                       max_iter=self.cfg.dc_max_iter)
        d = d.replace(rho_aircomp=res.rho, theta_aircomp=res.theta)
        return self._scale(d, ch, cap_i, cap_m)

    def _scale(self, d, ch, cap_i, cap_m):
        res = amplitude_scaling(ch.g_aircomp, ch.g_noma, d.p_aircomp, d.rho_noma, d.w, self.sc,
                                interference_cap=cap_i, mse_cap=cap_m)
        if res.t == 1.0:
            return d
        return d.replace(rho_aircomp=d.rho_aircomp * res.t**2, w=d.w / res.t)

    def align(self, d, it):
        ch = self.ch(d)
        return d.replace(theta_aircomp=aligned_phases(ch.g_aircomp, d.w))

    def receive(self, d, it):
        ch = self.ch(d)
        cap = self.mse_cap(aircomp_mse(d, ch, self.sc))
        eps = np.inf if cap is None else cap
        rs = receive_scalar_update(ch.g_aircomp, d.p_aircomp, self.sc.noise_total, eps, w_init=d.w)
        if rs.status == "mse-infeasible":
            return d
        return d.replace(w=rs.w)

    def _placement_constraints(self, d):
        if not self.constrained:
            return None
        ch = self.ch(d)
        r_min = np.array(self.sc.r_min_noma) if self.qos_on else None
        return PlacementConstraints(r_min=r_min, mse_cap=self.mse_cap(aircomp_mse(d, ch, self.sc)))

    def _descend(self, d, cons):
        v, _ = placement_pga(d, self.users, self.sc, max_iters=self.cfg.pga_iters, constraints=cons)
        d = d.replace(placement=v)
        if self.cfg.follow_powers and self.constrained:
            d, _ = placement_pga_rescaled(d, self.users, self.sc, max_iters=self.cfg.pga_iters,
                                          constraints=cons)
        return d

    def _reseat(self, d, v0):
        """Move to placement v0, carrying received signals over, then refresh the other blocks."""
        g_old = equivalent_channels(self.users.all, d.placement, self.sc)
        g_new = equivalent_channels(self.users.all, v0, self.sc)
        d0 = rescaled_design(d, g_old, g_new, self.users.n_aircomp, self.sc).replace(placement=v0)
        out = self._refresh(d0)
        if self.constrained and not self._admissible(out, self._placement_constraints(d)):
            # QoS often fails only because AirComp interference was carried over; retry quietly
            ga = g_new[: self.users.n_aircomp]
            level = min(2 * self.sc.noise_total / self.sc.mse_threshold,
                        float(np.min(np.abs(ga) ** 2 * self.sc.p_aircomp)))
            rho = _equalized(ChannelState(ga, g_new[self.users.n_aircomp:]), level, self.sc.p_aircomp)
            out = self._refresh(d0.replace(rho_aircomp=rho, theta_aircomp=aligned_phases(ga, d0.w)))
        return out

    def _refresh(self, d0):
        for name in self.power_blocks:
            d0 = getattr(self, name)(d0, 0)
        return d0

    def _admissible(self, d, cons):
        if cons is None:
            return True
        return PlacementObjective(d, self.users, self.sc, constraints=cons)(d.placement)[1]

    def pga(self, d, it):
        """Multistart placement block.

        The incumbent placement is refined in place; each random start first has
        its powers and receive scalar re-balanced (a bare random placement almost
        always breaks a QoS target under the old powers) and is then refined.
        Whatever wins must satisfy the incumbent's QoS/MSE constraints.
        """
        sc = self.sc
        cons = self._placement_constraints(d)
        # the same seeded starts every outer iteration (only their powers differ)
        rng = np.random.default_rng(self.cfg.seed)
        best = self._descend(d, cons)
        best_f = self.value(best)
        found = tries = 0
        # draw until multistart-1 random starts survive re-balancing (bounded effort)
        while found < self.cfg.multistart - 1 and tries < 4 * (self.cfg.multistart - 1):
            tries += 1
            v0 = np.sort(rng.uniform(0, sc.waveguide_length, sc.n_antennas))
            d0 = self._reseat(d, v0)
            if not self._admissible(d0, cons):
                continue
            found += 1
            cand = self._descend(d0, cons)
            f = self.value(cand)
            if f > best_f and self._admissible(cand, cons):
                best, best_f = cand, f
        return best

    def discrete(self, d, it):
        out, _ = placement_discrete(d, self.users, self.sc, self.anchors,
                                    constraints=self._placement_constraints(d),
                                    follow_powers=self.cfg.follow_powers and self.constrained)
        return out


_BLOCKS = {
    BenchmarkScheme.PROPOSED: ("noma", "aircomp", "receive", "pga"),
    BenchmarkScheme.FIXED_PA: ("noma", "aircomp", "receive"),
    BenchmarkScheme.DISCRETE_PAS: ("noma", "aircomp", "receive", "discrete"),
    BenchmarkScheme.FULL_POWER: ("align", "receive", "pga"),
}


def _run(engine: _Engine, design: DesignPoint, blocks, cfg: AoConfig):
    rep = AoReport()
    cur = engine.value(design)
    rep.trace.append(cur)
    best, best_f = design, cur
    for it in range(1, cfg.max_outer_iters + 1):
        start = cur
        for name in blocks:
            cand = getattr(engine, name)(design, it)
            f = engine.value(cand)
            if f < cur - cfg.monotone_slack:
                # a block must never hand back a worse point; keep the incumbent
                rep.rejected_blocks += 1
            else:
                design, cur = cand, f
            if cur < start - cfg.monotone_slack or (rep.trace and cur < rep.trace[-1] - cfg.monotone_slack):
                raise SolverInvariantError(f"objective decreased in block {name} at iteration {it}")
            rep.block_trace.append((it, name, cur))
        rep.trace.append(cur)
        rep.iterations = it
        if cur >= best_f:
            best, best_f = design, cur
        if cur - start <= cfg.tol * max(abs(start), 1.0):
            break
    else:
        rep.status = "max-iterations"
    rep.final_objective = best_f
    return best, rep


def _finish(users, sc, design, rep, qos_ok):
    ch = channel_state(users, design.placement, sc)
    cons = check_constraints(design, ch, sc)
    rep.qos_feasible = qos_ok and cons.qos_ok
    rep.mse_feasible = cons.mse_ok
    rep.constraints_ok = cons.feasible
    return design, rep


def ao_solve(users: UserSet, sc: Scenario, cfg: AoConfig | None = None, init: InitResult | None = None,
             scheme: BenchmarkScheme = BenchmarkScheme.PROPOSED):
    """Run the block cycle of ``scheme`` from ``init`` (default: :func:`initialize`)."""
    cfg = cfg or AoConfig()
    scheme = BenchmarkScheme(scheme)
    init = init or initialize(users, sc)
    engine = _Engine(users, sc, cfg, qos_on=init.qos_feasible)
    design, rep = _run(engine, init.design, _BLOCKS[scheme], cfg)
    return _finish(users, sc, design, rep, init.qos_feasible)


def _full_power_start(users, sc, init: InitResult) -> DesignPoint:
    d = init.design
    ch = channel_state(users, d.placement, sc)
    theta = aligned_phases(ch.g_aircomp, 1.0)
    p_a = np.sqrt(sc.p_aircomp) * np.exp(1j * theta)
    rs = receive_scalar_update(ch.g_aircomp, p_a, sc.noise_total, np.inf)
    return d.replace(rho_aircomp=sc.p_aircomp.copy(), theta_aircomp=theta,
                     rho_noma=sc.p_noma.copy(), w=rs.w)


def run_benchmark(scheme, users: UserSet, sc: Scenario, cfg: AoConfig | None = None,
                  init: InitResult | None = None, warm_start: DesignPoint | None = None):
    """Solve one drop with one scheme.

    ``warm_start`` (e.g. the solution of a coarser scheme on the same drop) adds
    a second AO run from that point; the better final design is returned while
    the report keeps the trace of the run from the common start.
    """
    cfg = cfg or AoConfig()
    scheme = BenchmarkScheme(scheme)
    init = init or initialize(users, sc)
    if scheme is BenchmarkScheme.FULL_POWER:
        # powers frozen at the budgets; QoS and MSE are recorded, not enforced
        engine = _Engine(users, sc, cfg, qos_on=False, constrained=False,
                         power_blocks=("align", "receive"))
        design, rep = _run(engine, _full_power_start(users, sc, init), _BLOCKS[scheme], cfg)
        return _finish(users, sc, design, rep, True)

    design, rep = ao_solve(users, sc, cfg, init, scheme)
    if warm_start is not None:
        engine = _Engine(users, sc, cfg, qos_on=init.qos_feasible)
        d2, rep2 = _run(engine, warm_start, _BLOCKS[scheme], cfg)
        if rep2.final_objective > rep.final_objective:
            d2, rep2 = _finish(users, sc, d2, rep2, init.qos_feasible)
            rep2.trace = rep.trace
            rep2.block_trace = rep.block_trace
            rep2.iterations = rep.iterations
            rep2.warm_start_used = True
            return d2, rep2
    return design, rep


def summarize(design: DesignPoint, users: UserSet, sc: Scenario):
    ch = channel_state(users, design.placement, sc)
    return hybrid_rate(design, ch, sc), check_constraints(design, ch, sc)
