import dataclasses

import numpy as np
import pytest

from pinchopt import AoConfig, BenchmarkScheme, Scenario, ao_solve, initialize, run_benchmark
from pinchopt.ao import summarize
from pinchopt.checks import micro_grid_optimum
from pinchopt.harness import paired_users
from pinchopt.metrics import check_constraints
from pinchopt.model import channel_state


@pytest.fixture(scope="module")
def drop():
    sc = Scenario()
    return sc, paired_users(0, 3, sc)


def test_initial_layout(drop):
    sc, users = drop
    init = initialize(users, sc)
    assert np.allclose(init.design.placement, np.arange(1, 7) * 10 / 7)


def test_initialize_without_targets_uses_no_noma_power():
    sc = Scenario(r_min=0.0)
    init = initialize(paired_users(0, 0, sc), sc)
    assert init.qos_feasible and np.all(init.design.rho_noma == 0)


def test_initialize_feasible_fraction():
    # regression value: at least 95% of default drops start feasible
    sc = Scenario()
    ok = sum(initialize(paired_users(0, r, sc), sc).qos_feasible for r in range(200))
    assert ok >= 190


def test_ao_trace_monotone_and_feasible(drop):
    sc, users = drop
    d, rep = ao_solve(users, sc)
    tr = np.array(rep.trace)
    assert np.all(np.diff(tr) >= -1e-9)
    assert rep.constraints_ok
    br, cons = summarize(d, users, sc)
    assert cons.feasible and br.hybrid == pytest.approx(tr.max(), rel=1e-12)


def test_ao_fixed_point(drop):
    sc, users = drop
    d, rep = ao_solve(users, sc)
    init = initialize(users, sc)
    again, rep2 = ao_solve(users, sc, init=dataclasses.replace(init, design=d))
    assert rep2.trace[-1] - rep2.trace[0] <= 1e-4 * rep2.trace[0]
    assert rep2.iterations <= 2


def test_micro_instance_vs_grid():
    sc = Scenario(n_antennas=1).with_users(n_aircomp=1, n_noma=1)
    users = paired_users(11, 0, sc)
    d, rep = ao_solve(users, sc)
    ref = micro_grid_optimum(users, sc)
    assert rep.final_objective >= ref * (1 - 0.01)


def test_discrete_step_equal_to_length_is_fixed_layout(drop):
    sc, users = drop
    sc = dataclasses.replace(sc, discrete_step=sc.waveguide_length)
    d, rep = run_benchmark(BenchmarkScheme.DISCRETE_PAS, users, sc)
    assert np.allclose(d.placement, np.arange(1, 7) * 10 / 7)


def test_full_power_keeps_budgets(drop):
    sc, users = drop
    d, rep = run_benchmark(BenchmarkScheme.FULL_POWER, users, sc)
    assert np.allclose(d.rho_aircomp, sc.p_aircomp) and np.allclose(d.rho_noma, sc.p_noma)


def test_nested_ordering_single_drop(drop):
    sc, users = drop
    init = initialize(users, sc)
    fixed, rf = run_benchmark("fixed_pa", users, sc, init=init)
    disc, rd = run_benchmark("discrete_pas", users, sc, init=init, warm_start=fixed)
    prop, rp = run_benchmark("proposed", users, sc, init=init, warm_start=disc)
    vals = [summarize(x, users, sc)[0].hybrid for x in (fixed, disc, prop)]
    assert vals[0] <= vals[1] <= vals[2]
    for x in (fixed, disc, prop):
        assert check_constraints(x, channel_state(users, x.placement, sc), sc).feasible


def test_config_validation():
    with pytest.raises(ValueError):
        AoConfig(max_outer_iters=0)
    with pytest.raises(ValueError):
        AoConfig(multistart=0)
