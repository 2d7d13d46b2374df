"""Geometry and channel synthesis for a single-waveguide pinching-antenna uplink.

Users sit on the ground plane z=0, the waveguide runs along the x-axis at
height ``d`` and is fed at x=0. Each pinching antenna (PA) is described only by
its x-coordinate ``v_n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(watt):
    return 10.0 * np.log10(np.asarray(watt, dtype=float)) + 30.0


@dataclass(frozen=True)
class Scenario:
    """All physical and system constants, linear units throughout.

    ``power_aircomp`` / ``power_noma`` hold one budget per user in watts; when
    the user counts change (sweeps) use :meth:`with_users`, which rebroadcasts
    ``power_max`` and ``r_min`` to the new sizes.
    """

    wavelength: float = 0.1
    bandwidth: float = 1e6
    noise_power: float = 1e-12
    n_ref: float = 1.4
    waveguide_length: float = 10.0
    region_depth: float = 10.0
    height: float = 5.0
    n_antennas: int = 6
    n_aircomp: int = 4
    n_noma: int = 3
    alpha: float = 0.5
    power_max: float = 0.1
    power_aircomp: tuple = ()
    power_noma: tuple = ()
    r_min: float = 0.5e6
    r_min_noma: tuple = ()
    mse_threshold: float = 1e-2
    realizations: int = 200
    seed: int = 0
    discrete_step: float = 0.025

    def __post_init__(self):
        if not self.power_aircomp:
            object.__setattr__(self, "power_aircomp", (self.power_max,) * self.n_aircomp)
        if not self.power_noma:
            object.__setattr__(self, "power_noma", (self.power_max,) * self.n_noma)
        if not self.r_min_noma:
            object.__setattr__(self, "r_min_noma", (self.r_min,) * self.n_noma)
        object.__setattr__(self, "power_aircomp", tuple(float(p) for p in self.power_aircomp))
        object.__setattr__(self, "power_noma", tuple(float(p) for p in self.power_noma))
        object.__setattr__(self, "r_min_noma", tuple(float(r) for r in self.r_min_noma))
        self.validate()

    def validate(self):
        checks = [
            (self.wavelength > 0, "wavelength must be positive"),
            (self.bandwidth > 0, "bandwidth must be positive"),
            (self.noise_power > 0, "noise_power must be positive"),
            (self.n_ref > 0, "n_ref must be positive"),
            (self.height > 0, "height must be positive"),
            (self.waveguide_length > 0, "waveguide_length must be positive"),
            (self.region_depth >= 0, "region_depth must be non-negative"),
            (self.n_antennas >= 1, "n_antennas must be >= 1"),
            (self.n_aircomp >= 1, "n_aircomp must be >= 1"),
            (self.n_noma >= 1, "n_noma must be >= 1"),
            (0.0 <= self.alpha <= 1.0, "alpha must lie in [0, 1]"),
            (self.mse_threshold > 0, "mse_threshold must be positive"),
            (self.realizations >= 1, "realizations must be >= 1"),
            (0 < self.discrete_step <= self.waveguide_length,
             "discrete_step must lie in (0, waveguide_length]"),
            (len(self.power_aircomp) == self.n_aircomp, "power_aircomp size != n_aircomp"),
            (len(self.power_noma) == self.n_noma, "power_noma size != n_noma"),
            (len(self.r_min_noma) == self.n_noma, "r_min_noma size != n_noma"),
            (all(p > 0 for p in self.power_aircomp + self.power_noma),
             "power budgets must be positive"),
            (all(r >= 0 for r in self.r_min_noma), "r_min must be non-negative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    @property
    def noise_total(self) -> float:
        """Noise power at the feed point, N * sigma^2."""
        return self.n_antennas * self.noise_power

    @property
    def p_aircomp(self) -> np.ndarray:
        return np.array(self.power_aircomp)

    @property
    def p_noma(self) -> np.ndarray:
        return np.array(self.power_noma)

    @property
    def gamma(self) -> np.ndarray:
        """SINR targets equivalent to the per-user minimum NOMA rates."""
        return 2.0 ** (np.array(self.r_min_noma) / self.bandwidth) - 1.0

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def guided_wavenumber(self) -> float:
        return 2 * np.pi * self.n_ref / self.wavelength

    def with_users(self, n_aircomp=None, n_noma=None, **changes) -> "Scenario":
        """Copy with new user counts; per-user lists are rebuilt from the scalars."""
        return replace(
            self,
            n_aircomp=self.n_aircomp if n_aircomp is None else n_aircomp,
            n_noma=self.n_noma if n_noma is None else n_noma,
            power_aircomp=(), power_noma=(), r_min_noma=(),
            **changes,
        )


@dataclass(frozen=True)
class UserSet:
    aircomp: np.ndarray  # (K_A, 3)
    noma: np.ndarray  # (K_N, 3)

    @property
    def all(self) -> np.ndarray:
        return np.vstack([self.aircomp, self.noma])

    @property
    def n_aircomp(self) -> int:
        return len(self.aircomp)

    @property
    def n_noma(self) -> int:
        return len(self.noma)


@dataclass(frozen=True)
class ChannelState:
    g_aircomp: np.ndarray
    g_noma: np.ndarray
    sic_order: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.sic_order is None:
            object.__setattr__(self, "sic_order", sic_order(self.g_noma))


def sic_order(g_noma) -> np.ndarray:
    """Decoding order: weakest |g|^2 first, ties by original index."""
    return np.argsort(np.abs(np.asarray(g_noma)) ** 2, kind="stable")


def uniform_placement(n_antennas: int, length: float) -> np.ndarray:
    n = np.arange(1, n_antennas + 1)
    return n * length / (n_antennas + 1)


def sample_users(rng: np.random.Generator, scenario: Scenario, n_aircomp=None, n_noma=None) -> UserSet:
    """Drop users uniformly over [0, L_x] x [0, L_y] on the ground plane."""
    ka = scenario.n_aircomp if n_aircomp is None else n_aircomp
    kn = scenario.n_noma if n_noma is None else n_noma
    xy = rng.uniform(size=(ka + kn, 2)) * [scenario.waveguide_length, scenario.region_depth]
    pos = np.column_stack([xy, np.zeros(ka + kn)])
    return UserSet(aircomp=pos[:ka], noma=pos[ka:])


def pathloss_channel(user_pos, pa_pos, wavelength: float) -> complex:
    """Free-space LoS coefficient between one user and one PA."""
    r = float(np.linalg.norm(np.asarray(user_pos, float) - np.asarray(pa_pos, float)))
    if r == 0.0:
        raise ValueError("user and pinching antenna coincide (zero distance)")
    return wavelength / (4 * np.pi * r) * np.exp(-2j * np.pi * r / wavelength)


def _distances(users: np.ndarray, v: np.ndarray, height: float):
    users = np.atleast_2d(users)
    dx = v[None, :] - users[:, 0:1]
    r = np.sqrt(dx**2 + users[:, 1:2] ** 2 + height**2)
    return dx, r


def pa_channels(users, v, scenario: Scenario) -> np.ndarray:
    """Matrix of h_{u,n}, shape (users, N)."""
    _, r = _distances(np.asarray(users, float), np.asarray(v, float), scenario.height)
    if np.any(r == 0):
        raise ValueError("user and pinching antenna coincide (zero distance)")
    lam = scenario.wavelength
    return lam / (4 * np.pi * r) * np.exp(-1j * scenario.wavenumber * r)


def guided_phase(v, scenario: Scenario) -> np.ndarray:
    # feed at x=0 on the waveguide axis, so the in-waveguide distance is v_n
    return np.exp(-1j * scenario.guided_wavenumber * np.asarray(v, float))


def equivalent_channels(users, v, scenario: Scenario) -> np.ndarray:
    """g_u for every row of ``users``."""
    return pa_channels(users, v, scenario) @ guided_phase(v, scenario)


def equivalent_channel(user_pos, placement, scenario: Scenario) -> complex:
    return complex(equivalent_channels(np.atleast_2d(user_pos), placement, scenario)[0])


def channel_jacobian(users, v, scenario: Scenario) -> np.ndarray:
    """dg_u/dv_n for all users and PAs, shape (users, N).

    Only PA n contributes to the derivative with respect to v_n, so the full
    Jacobian is just the per-term derivative.
    """
    users = np.asarray(users, float)
    v = np.asarray(v, float)
    dx, r = _distances(users, v, scenario.height)
    h = pa_channels(users, v, scenario)
    dh = h * (-dx / r**2 - 1j * scenario.wavenumber * dx / r)
    return (dh - 1j * scenario.guided_wavenumber * h) * guided_phase(v, scenario)[None, :]


def channel_gradient(user_pos, placement, n: int, scenario: Scenario) -> complex:
    return complex(channel_jacobian(np.atleast_2d(user_pos), placement, scenario)[0, n])


def channel_state(users: UserSet, v, scenario: Scenario) -> ChannelState:
    g = equivalent_channels(users.all, v, scenario)
    return ChannelState(g_aircomp=g[: users.n_aircomp], g_noma=g[users.n_aircomp:])


def channel_magnitude_bound(scenario: Scenario) -> float:
    return scenario.n_antennas * scenario.wavelength / (4 * np.pi * scenario.height)
