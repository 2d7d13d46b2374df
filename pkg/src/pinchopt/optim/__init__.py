from .lp import LpProblem, LpResult, solve_lp
from .noma_power import (
    NomaPowerResult, aircomp_interference_cap, noma_min_power, noma_power_allocation,
    qos_coefficients,
)
from .aircomp_power import (
    AircompPowerResult, DcReport, ScalingResult, aircomp_power_allocation, amplitude_scaling,
)
from .receive_scalar import ReceiveScalarResult, min_mse_w, mse_of_wt, receive_scalar_update
from .placement import (
    PlacementConstraints, PlacementObjective, SolverReport, discrete_grid, hybrid_gradient_v,
    placement_discrete, placement_pga, placement_pga_rescaled, rescaled_design,
)

__all__ = [
    "LpProblem",
    "LpResult",
    "solve_lp",
    "NomaPowerResult",
    "aircomp_interference_cap",
    "noma_min_power",
    "noma_power_allocation",
    "qos_coefficients",
    "AircompPowerResult",
    "DcReport",
    "ScalingResult",
    "aircomp_power_allocation",
    "amplitude_scaling",
    "ReceiveScalarResult",
    "min_mse_w",
    "mse_of_wt",
    "receive_scalar_update",
    "PlacementConstraints",
    "PlacementObjective",
    "SolverReport",
    "discrete_grid",
    "hybrid_gradient_v",
    "placement_discrete",
    "placement_pga",
    "placement_pga_rescaled",
    "rescaled_design",
]
