"""Performance functionals: NOMA SINRs and rates, AirComp MSE, computation rate, hybrid rate.

Every function here works on second-order statistics only (unit-power,
independent symbols), so no sample paths are simulated. The private
``*_batch`` helpers broadcast over leading axes of the channel arrays; the
placement searches use them to score many candidate layouts at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .model import ChannelState, Scenario, sic_order

FEAS_RTOL = 1e-9
LOG2E = 1.0 / np.log(2.0)

__all__ = [
    "DesignPoint", "RateBreakdown", "ConstraintReport", "sic_order", "noma_sinrs", "noma_sinr",
    "noma_rates", "noma_sum_closed_form", "aircomp_mse", "aircomp_second_moment",
    "computation_rate", "hybrid_rate", "hybrid_value", "check_constraints", "aligned_phases",
]


@dataclass(frozen=True)
class DesignPoint:
    rho_aircomp: np.ndarray
    theta_aircomp: np.ndarray
    rho_noma: np.ndarray
    w: complex
    placement: np.ndarray

    @property
    def p_aircomp(self) -> np.ndarray:
        return np.sqrt(self.rho_aircomp) * np.exp(1j * self.theta_aircomp)

    def replace(self, **changes) -> "DesignPoint":
        return replace(self, **changes)


@dataclass
class RateBreakdown:
    noma_rates: np.ndarray
    noma_sum: float
    aircomp_mse: float
    computation_rate: float
    hybrid: float
    interference_aircomp: float
    interference_noma: float

    def as_dict(self) -> dict:
        return {
            "R_H": self.hybrid, "R_A": self.computation_rate, "R_N": self.noma_sum,
            "MSE": self.aircomp_mse, "I_A": self.interference_aircomp,
            "I_N": self.interference_noma,
        }


@dataclass
class ConstraintReport:
    power_aircomp_slack: np.ndarray
    power_noma_slack: np.ndarray
    qos_slack: np.ndarray
    mse_slack: float
    placement_slack: np.ndarray
    power_ok: bool = field(init=False)
    qos_ok: bool = field(init=False)
    mse_ok: bool = field(init=False)
    placement_ok: bool = field(init=False)
    scale: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        s = self.scale
        self.power_ok = bool(np.all(self.power_aircomp_slack >= -FEAS_RTOL * s.get("pa", 1.0))
                             and np.all(self.power_noma_slack >= -FEAS_RTOL * s.get("pn", 1.0)))
        self.qos_ok = bool(np.all(self.qos_slack >= -FEAS_RTOL * s.get("qos", 1.0)))
        self.mse_ok = bool(self.mse_slack >= -FEAS_RTOL * s.get("mse", 1.0))
        self.placement_ok = bool(np.all(self.placement_slack >= -FEAS_RTOL * s.get("v", 1.0)))

    @property
    def feasible(self) -> bool:
        return self.power_ok and self.qos_ok and self.mse_ok and self.placement_ok


def aligned_phases(g_aircomp, w) -> np.ndarray:
    """Phases that make every w^H g_k p_k real and non-negative."""
    return -np.angle(np.conj(w) * np.asarray(g_aircomp))


# -- batched kernels ---------------------------------------------------------

def noma_sinrs_batch(g_noma, rho_noma, interference_aircomp, noise):
    """SINRs in original user indexing; SIC order recomputed along the last axis."""
    rx = np.abs(g_noma) ** 2 * rho_noma
    order = np.argsort(np.abs(g_noma) ** 2, axis=-1, kind="stable")
    rx_sorted = np.take_along_axis(rx, order, axis=-1)
    # residual intra-NOMA interference: users decoded later (stronger)
    tail = np.cumsum(rx_sorted[..., ::-1], axis=-1)[..., ::-1] - rx_sorted
    denom = tail + np.expand_dims(interference_aircomp, -1) + noise
    sinr_sorted = rx_sorted / denom
    sinr = np.empty_like(sinr_sorted)
    np.put_along_axis(sinr, order, sinr_sorted, axis=-1)
    return sinr


def parts_batch(g_aircomp, g_noma, p_aircomp, rho_noma, w, noise, bandwidth, alpha):
    """Return (R_H, R_A, R_N, MSE, I_A, I_N) broadcasting over leading axes."""
    ia = np.sum(np.abs(g_aircomp) ** 2 * np.abs(p_aircomp) ** 2, axis=-1)
    inn = np.sum(np.abs(g_noma) ** 2 * rho_noma, axis=-1)
    r_n = bandwidth * np.log2(1.0 + inn / (ia + noise))
    y = np.conj(w) * g_aircomp * p_aircomp
    nw = noise * np.abs(w) ** 2
    mse = np.sum(np.abs(y - 1.0) ** 2, axis=-1) + nw
    e2 = np.sum(np.abs(y) ** 2, axis=-1) + nw
    r_a = bandwidth * np.log2(np.maximum(e2 / mse, 1.0))
    r_h = alpha * r_a + (1.0 - alpha) * r_n
    return r_h, r_a, r_n, mse, ia, inn


# -- public API --------------------------------------------------------------

def _interference_aircomp(design: DesignPoint, ch: ChannelState) -> float:
    return float(np.sum(np.abs(ch.g_aircomp) ** 2 * design.rho_aircomp))


def noma_sinrs(design: DesignPoint, ch: ChannelState, sc: Scenario) -> np.ndarray:
    """Per-user SINR (original indexing), decoding weakest first."""
    return noma_sinrs_batch(ch.g_noma, design.rho_noma, _interference_aircomp(design, ch), sc.noise_total)


def noma_sinr(j: int, design: DesignPoint, ch: ChannelState, sc: Scenario) -> float:
    return float(noma_sinrs(design, ch, sc)[j])


def noma_sum_closed_form(design: DesignPoint, ch: ChannelState, sc: Scenario) -> float:
    s = float(np.sum(np.abs(ch.g_noma) ** 2 * design.rho_noma))
    return sc.bandwidth * np.log2(1.0 + s / (_interference_aircomp(design, ch) + sc.noise_total))


def noma_rates(design: DesignPoint, ch: ChannelState, sc: Scenario):
    """Per-user rates and their sum (log-sum form; telescopes to the closed form)."""
    rates = sc.bandwidth * np.log2(1.0 + noma_sinrs(design, ch, sc))
    return rates, float(np.sum(rates))


def aircomp_second_moment(design: DesignPoint, ch: ChannelState, sc: Scenario) -> float:
    y = np.conj(design.w) * ch.g_aircomp * design.p_aircomp
    return float(np.sum(np.abs(y) ** 2) + sc.noise_total * abs(design.w) ** 2)


def aircomp_mse(design: DesignPoint, ch: ChannelState, sc: Scenario) -> float:
    y = np.conj(design.w) * ch.g_aircomp * design.p_aircomp
    return float(np.sum(np.abs(y - 1.0) ** 2) + sc.noise_total * abs(design.w) ** 2)


def computation_rate(design: DesignPoint, ch: ChannelState, sc: Scenario) -> float:
    """B log2(E|s_hat|^2 / MSE), clamped at zero."""
    ratio = aircomp_second_moment(design, ch, sc) / aircomp_mse(design, ch, sc)
    return float(sc.bandwidth * np.log2(max(ratio, 1.0)))


def hybrid_value(design: DesignPoint, ch: ChannelState, sc: Scenario, alpha=None) -> float:
    a = sc.alpha if alpha is None else alpha
    return float(parts_batch(ch.g_aircomp, ch.g_noma, design.p_aircomp, design.rho_noma,
                             design.w, sc.noise_total, sc.bandwidth, a)[0])


def hybrid_rate(design: DesignPoint, ch: ChannelState, sc: Scenario, alpha=None) -> RateBreakdown:
    a = sc.alpha if alpha is None else alpha
    rates, total = noma_rates(design, ch, sc)
    r_a = computation_rate(design, ch, sc)
    return RateBreakdown(
        noma_rates=rates,
        noma_sum=total,
        aircomp_mse=aircomp_mse(design, ch, sc),
        computation_rate=r_a,
        hybrid=a * r_a + (1.0 - a) * total,
        interference_aircomp=_interference_aircomp(design, ch),
        interference_noma=float(np.sum(np.abs(ch.g_noma) ** 2 * design.rho_noma)),
    )


def check_constraints(design: DesignPoint, ch: ChannelState, sc: Scenario) -> ConstraintReport:
    rates, _ = noma_rates(design, ch, sc)
    r_min = np.array(sc.r_min_noma)
    v = np.asarray(design.placement, float)
    return ConstraintReport(
        power_aircomp_slack=sc.p_aircomp - design.rho_aircomp,
        power_noma_slack=sc.p_noma - design.rho_noma,
        qos_slack=rates - r_min,
        mse_slack=sc.mse_threshold - aircomp_mse(design, ch, sc),
        placement_slack=np.minimum(v, sc.waveguide_length - v),
        scale={
            "pa": sc.p_aircomp, "pn": sc.p_noma, "qos": np.maximum(r_min, 1.0),
            "mse": sc.mse_threshold, "v": sc.waveguide_length,
        },
    )
