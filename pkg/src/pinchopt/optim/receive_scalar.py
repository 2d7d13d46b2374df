"""Receive-scalar block, solved in the reciprocal variable wt = 1/w.

Convention: with a_k = g_k p_k we have w^H a_k = a_k / conj(wt), hence

    MSE(wt) = (sum_k |wt - conj(a_k)|^2 + n) / |wt|^2
    E/MSE   = (sum_k |a_k|^2 + n) / (sum_k |wt - conj(a_k)|^2 + n)

so maximizing the computation rate means pulling wt toward the centroid of
the conj(a_k); the MSE cap is the non-convex constraint handled by SCA.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ReceiveScalarResult:
    w: complex
    status: str  # "centroid" | "sca" | "mse-infeasible"
    mse: float
    iterations: int = 0
    trace: list = field(default_factory=list)


def _points(g_aircomp, p_aircomp):
    return np.conj(np.asarray(g_aircomp) * np.asarray(p_aircomp))


def mse_of_wt(wt, pts, noise) -> float:
    return float((np.sum(np.abs(wt - pts) ** 2) + noise) / abs(wt) ** 2)


def min_mse_w(g_aircomp, p_aircomp, noise) -> complex:
    """Unconstrained minimum-MSE receive scalar (may be the zero scalar if all a_k vanish)."""
    a = np.asarray(g_aircomp) * np.asarray(p_aircomp)
    return complex(np.sum(a) / (np.sum(np.abs(a) ** 2) + noise))


def _sca_step(wt0, centroid, spread, k, eps, noise):
    """Closest point to the centroid inside the linearized MSE disk at wt0.

    Linearized constraint: k|z - c|^2 + spread + n <= eps (2 Re(conj(wt0) z) - |wt0|^2),
    i.e. a disk centred at c + (eps/k) wt0. Returns None if the disk is empty.
    """
    center = centroid + eps / k * wt0
    r2 = (k * abs(center) ** 2 - k * abs(centroid) ** 2 - eps * abs(wt0) ** 2 - spread - noise) / k
    if r2 < 0:
        return None
    gap = centroid - center
    dist = abs(gap)
    if dist ** 2 <= r2:
        return centroid
    return center + np.sqrt(r2) * gap / dist


def receive_scalar_update(g_aircomp, p_aircomp, noise, eps, w_init=None, tol: float = 1e-8,
                          max_iter: int = 200) -> ReceiveScalarResult:
    """Maximize E/MSE over w subject to MSE <= eps.

    The centroid is returned when it is feasible. Otherwise SCA runs from
    ``w_init`` if that point is feasible, else from the minimum-MSE scalar.
    Status "mse-infeasible" means no feasible start exists; ``w`` is then the
    minimum-MSE scalar.
    """
    pts = _points(g_aircomp, p_aircomp)
    k = len(pts)
    c = complex(np.mean(pts))
    spread = float(np.sum(np.abs(pts - c) ** 2))
    if abs(c) > 0 and mse_of_wt(c, pts, noise) <= eps:
        return ReceiveScalarResult(1 / c, "centroid", mse_of_wt(c, pts, noise))

    starts = []
    if w_init is not None and w_init != 0:
        starts.append(1 / complex(w_init))
    w_mm = min_mse_w(g_aircomp, p_aircomp, noise)
    if w_mm != 0:
        starts.append(1 / w_mm)
    start = next((s for s in starts if mse_of_wt(s, pts, noise) <= eps), None)
    if start is None:
        mse = mse_of_wt(1 / w_mm, pts, noise) if w_mm != 0 else float(k)
        return ReceiveScalarResult(w_mm, "mse-infeasible", mse)

    z = start
    trace = [abs(z - c) ** 2]
    it = 0
    for it in range(1, max_iter + 1):
        nz = _sca_step(z, c, spread, k, eps, noise)
        if nz is None:
            break
        step = abs(nz - z)
        z = nz
        trace.append(abs(z - c) ** 2)
        if step <= tol * max(abs(z), 1e-300):
            break
    return ReceiveScalarResult(1 / z, "sca", mse_of_wt(z, pts, noise), it, trace)
