"""NOMA power block.

With the AirComp powers fixed, the telescoped NOMA sum rate is a strictly
increasing function of the aggregate received NOMA power S = sum_j rho_j |g_j|^2,
and the SIC QoS constraints are linear in rho. Maximizing S over the polytope
is therefore exact, and it is a small LP.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import ChannelState, Scenario
from .lp import LpProblem, solve_lp


@dataclass
class NomaPowerResult:
    rho: np.ndarray | None
    status: str
    noma_sum: float


def qos_coefficients(scenario: Scenario) -> np.ndarray:
    """gamma_j = 2^(R_min,j / B) - 1."""
    return scenario.gamma


def _qos_rows(ch: ChannelState, rho_aircomp, sc: Scenario, gamma):
    """QoS constraints in normalized variables x_j = rho_j / P_j, as rows of A x <= b."""
    gain = np.abs(ch.g_noma) ** 2
    base = float(np.sum(np.abs(ch.g_aircomp) ** 2 * rho_aircomp)) + sc.noise_total
    q = gain * sc.p_noma / base
    order = ch.sic_order
    A, b = [], []
    for pos, j in enumerate(order):
        if gamma[j] <= 0:
            continue
        row = np.zeros(len(q))
        row[j] = -q[j]
        later = order[pos + 1:]
        row[later] = gamma[j] * q[later]
        A.append(row)
        b.append(-gamma[j])
    kn = len(q)
    return q, np.array(A).reshape(-1, kn), np.array(b)


def noma_power_allocation(ch: ChannelState, rho_aircomp, sc: Scenario, enforce_qos: bool = True) -> NomaPowerResult:
    """Maximize the NOMA sum rate over rho_noma for fixed AirComp powers."""
    gamma = qos_coefficients(sc) if enforce_qos else np.zeros(sc.n_noma)
    q, A, b = _qos_rows(ch, rho_aircomp, sc, gamma)
    res = solve_lp(LpProblem(c=q / max(q.max(), 1e-300), A=A, b=b, lo=0.0, hi=1.0))
    if res.status != "optimal":
        return NomaPowerResult(None, res.status, np.nan)
    rho = res.x * sc.p_noma
    ia = float(np.sum(np.abs(ch.g_aircomp) ** 2 * rho_aircomp))
    s = float(np.sum(np.abs(ch.g_noma) ** 2 * rho))
    return NomaPowerResult(rho, "optimal", sc.bandwidth * np.log2(1 + s / (ia + sc.noise_total)))


def noma_min_power(ch: ChannelState, rho_aircomp, sc: Scenario) -> NomaPowerResult:
    """Least total NOMA power meeting every QoS target (feasibility LP)."""
    gamma = qos_coefficients(sc)
    _, A, b = _qos_rows(ch, rho_aircomp, sc, gamma)
    p = sc.p_noma
    res = solve_lp(LpProblem(c=-p / p.max(), A=A, b=b, lo=0.0, hi=1.0))
    if res.status != "optimal":
        return NomaPowerResult(None, res.status, np.nan)
    rho = res.x * p
    ia = float(np.sum(np.abs(ch.g_aircomp) ** 2 * rho_aircomp))
    s = float(np.sum(np.abs(ch.g_noma) ** 2 * rho))
    return NomaPowerResult(rho, "optimal", sc.bandwidth * np.log2(1 + s / (ia + sc.noise_total)))


def aircomp_interference_cap(ch: ChannelState, rho_noma, sc: Scenario) -> float:
    """Largest AirComp interference I_A that keeps every QoS constraint satisfied.

    Returns +inf when no user has a positive rate target.
    """
    gamma = qos_coefficients(sc)
    rx = np.abs(ch.g_noma) ** 2 * rho_noma
    order = ch.sic_order
    cap = np.inf
    for pos, j in enumerate(order):
        if gamma[j] > 0:
            tail = float(np.sum(rx[order[pos + 1:]]))
            cap = min(cap, rx[j] / gamma[j] - tail - sc.noise_total)
    return cap
