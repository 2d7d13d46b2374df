"""Hybrid AirComp/NOMA uplink with pinching antennas: models, solvers, experiment harness."""
from .model import (
    ChannelState, Scenario, UserSet, channel_gradient, channel_jacobian, channel_state,
    dbm_to_watt, equivalent_channel, equivalent_channels, pathloss_channel, sample_users,
    uniform_placement,
)
from .metrics import (
    DesignPoint, RateBreakdown, aircomp_mse, check_constraints, computation_rate, hybrid_rate,
    noma_rates, noma_sinr,
)
from .ao import AoConfig, BenchmarkScheme, SolverInvariantError, ao_solve, initialize, run_benchmark
from .harness import ConfigError, ExperimentSpec, RunRecord, load_scenario, run_experiment

__version__ = "0.1.0"

__all__ = [
    "ChannelState", "Scenario", "UserSet", "channel_gradient", "channel_jacobian", "channel_state",
    "dbm_to_watt", "equivalent_channel", "equivalent_channels", "pathloss_channel", "sample_users",
    "uniform_placement",
    "DesignPoint", "RateBreakdown", "aircomp_mse", "check_constraints", "computation_rate",
    "hybrid_rate", "noma_rates", "noma_sinr",
    "AoConfig", "BenchmarkScheme", "SolverInvariantError", "ao_solve", "initialize", "run_benchmark",
    "ConfigError", "ExperimentSpec", "RunRecord", "load_scenario", "run_experiment",
]
