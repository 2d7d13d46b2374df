import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from pinchopt import (
    Scenario, channel_gradient, channel_jacobian, dbm_to_watt, equivalent_channel,
    equivalent_channels, pathloss_channel, sample_users, uniform_placement,
)
from pinchopt.model import channel_magnitude_bound, sic_order


def _h_reference(user, pa, lam):
    mpmath.mp.dps = 40
    r = mpmath.sqrt(sum((mpmath.mpf(a) - mpmath.mpf(b)) ** 2 for a, b in zip(user, pa)))
    val = mpmath.mpf(lam) / (4 * mpmath.pi * r) * mpmath.exp(-2j * mpmath.pi * r / lam)
    return complex(val)


def test_scenario_defaults():
    sc = Scenario()
    assert sc.wavelength == 0.1 and sc.bandwidth == 1e6
    assert sc.noise_power == pytest.approx(1e-12, rel=1e-12)
    assert (sc.n_aircomp, sc.n_noma, sc.n_antennas) == (4, 3, 6)
    assert sc.power_max == pytest.approx(dbm_to_watt(20))
    assert sc.r_min_noma == (0.5e6,) * 3


@pytest.mark.parametrize("bad", [dict(alpha=1.5), dict(wavelength=0), dict(n_antennas=0),
                                 dict(mse_threshold=0), dict(region_depth=-1), dict(power_max=0)])
def test_scenario_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        Scenario(**bad)


def test_sample_users_region_and_determinism(sc):
    u1 = sample_users(np.random.default_rng(5), sc)
    u2 = sample_users(np.random.default_rng(5), sc)
    pts = u1.all
    assert pts.shape == (7, 3)
    assert np.all((pts[:, :2] >= 0) & (pts[:, :2] <= 10)) and np.all(pts[:, 2] == 0)
    assert np.array_equal(u1.aircomp, u2.aircomp) and np.array_equal(u1.noma, u2.noma)


def test_sample_users_on_axis_when_depth_zero():
    u = sample_users(np.random.default_rng(1), Scenario(region_depth=0.0))
    assert np.all(u.all[:, 1] == 0)


def test_pathloss_below_pa():
    h = pathloss_channel((2, 0, 0), (2, 0, 5), 0.1)
    assert h.real == pytest.approx(0.1 / (20 * np.pi), rel=1e-12)
    assert abs(h.imag) < 1e-15


def test_pathloss_inverse_distance():
    # distances 5 and 10 are both whole multiples of the wavelength, so only the magnitude changes
    h1 = pathloss_channel((0, 0, 0), (0, 0, 5), 0.1)
    h2 = pathloss_channel((0, 0, 0), (0, 0, 10), 0.1)
    assert abs(h2) == pytest.approx(abs(h1) / 2, rel=1e-12)


def test_pathloss_matches_high_precision():
    h = pathloss_channel((1, 1, 0), (4, 0, 5), 0.1)
    ref = _h_reference((1, 1, 0), (4, 0, 5), 0.1)
    # the phase argument is ~370 rad, so double rounding of r limits agreement to ~1e-13
    assert abs(h - ref) <= 1e-12 * abs(ref)


def test_pathloss_zero_distance():
    with pytest.raises(ValueError):
        pathloss_channel((1, 2, 3), (1, 2, 3), 0.1)


def test_single_pa_at_feed():
    sc = Scenario(n_antennas=1)
    u = np.array([3.0, 2.0, 0.0])
    assert equivalent_channel(u, np.array([0.0]), sc) == pytest.approx(
        pathloss_channel(u, (0, 0, sc.height), sc.wavelength), rel=1e-13)


def test_coherent_pair():
    # PAs at x=5 +- s are equidistant from a user at x=5; guided phases differ by 2*pi when n_ref*2s = lambda
    sc = Scenario(n_antennas=2)
    s = sc.wavelength / (2 * sc.n_ref)
    u = np.array([5.0, 1.0, 0.0])
    g = equivalent_channel(u, np.array([5 - s, 5 + s]), sc)
    h = pathloss_channel(u, (5 - s, 0, sc.height), sc.wavelength)
    assert abs(g) == pytest.approx(2 * abs(h), rel=1e-9)


def test_uniform_layout_term_by_term():
    sc = Scenario()
    v = uniform_placement(6, 10.0)
    assert np.allclose(v, np.arange(1, 7) * 10 / 7)
    user = (5.0, 5.0, 0.0)
    mpmath.mp.dps = 40
    ref = 0
    for vn in v:
        h = _h_reference(user, (vn, 0, sc.height), sc.wavelength)
        ref += complex(h * mpmath.exp(-2j * mpmath.pi * sc.n_ref * mpmath.mpf(vn) / sc.wavelength))
    assert abs(equivalent_channel(user, v, sc) - ref) <= 1e-12 * abs(ref)


def test_gradient_directly_below():
    sc = Scenario(n_antennas=1)
    user = np.array([4.0, 0.0, 0.0])
    v = np.array([4.0])
    h = pathloss_channel(user, (4.0, 0, sc.height), sc.wavelength)
    phase = np.exp(-2j * np.pi * sc.n_ref * 4.0 / sc.wavelength)
    expected = -1j * (2 * np.pi * sc.n_ref / sc.wavelength) * h * phase
    assert channel_gradient(user, v, 0, sc) == pytest.approx(expected, rel=1e-12)


def test_gradient_finite_difference(sc, rng):
    worst = 0.0
    for _ in range(100):
        user = np.array([*rng.uniform(0, 10, 2), 0.0])
        v = np.sort(rng.uniform(0, 10, sc.n_antennas))
        n = int(rng.integers(sc.n_antennas))
        e = np.zeros_like(v)
        e[n] = 1e-6
        fd = (equivalent_channel(user, v + e, sc) - equivalent_channel(user, v - e, sc)) / 2e-6
        an = channel_gradient(user, v, n, sc)
        worst = max(worst, abs(fd - an) / abs(an))
    assert worst <= 1e-5


def test_power_gradient_finite_difference(sc, rng):
    for _ in range(20):
        user = np.array([*rng.uniform(0, 10, 2), 0.0])
        v = np.sort(rng.uniform(0, 10, sc.n_antennas))
        g = equivalent_channel(user, v, sc)
        jac = channel_jacobian(user[None], v, sc)[0]
        an = 2 * np.real(np.conj(g) * jac)
        for n in range(sc.n_antennas):
            e = np.zeros_like(v)
            e[n] = 1e-6
            fd = (abs(equivalent_channel(user, v + e, sc)) ** 2
                  - abs(equivalent_channel(user, v - e, sc)) ** 2) / 2e-6
            assert fd == pytest.approx(an[n], rel=1e-4, abs=1e-6 * np.max(np.abs(an)))


def test_sic_order_examples():
    assert list(sic_order(np.sqrt([3.0, 1.0, 2.0]))) == [1, 2, 0]
    assert list(sic_order(np.ones(4))) == [0, 1, 2, 3]


@given(st.lists(st.floats(0, 1e3, allow_nan=False), min_size=1, max_size=8))
def test_sic_order_sorts(mags):
    g = np.sqrt(np.array(mags))
    order = sic_order(g)
    assert sorted(order) == list(range(len(mags)))
    assert np.all(np.diff(np.abs(g[order]) ** 2) >= 0)


@given(st.integers(0, 2**32 - 1))
def test_channel_magnitude_bound(seed):
    sc = Scenario()
    rng = np.random.default_rng(seed)
    users = sample_users(rng, sc).all
    v = rng.uniform(0, sc.waveguide_length, sc.n_antennas)
    assert np.all(np.abs(equivalent_channels(users, v, sc)) <= channel_magnitude_bound(sc) * (1 + 1e-12))
