"""Scenario config files, Monte-Carlo experiments and CSV output.

Config format: one ``key = value`` per line, ``#`` starts a comment. Values
may carry a unit suffix (``-90 dBm``, ``1 MHz``, ``0.5 Mbps``, ``10 m``);
bare numbers are SI. Keys mirror :class:`~pinchopt.model.Scenario` fields,
with a few short aliases (``K_A``, ``N``, ``P_max``, ...).
"""
from __future__ import annotations

import csv
import dataclasses
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ao import AoConfig, BenchmarkScheme, SolverInvariantError, initialize, run_benchmark
from .metrics import DesignPoint, hybrid_rate
from .model import SPEED_OF_LIGHT, Scenario, UserSet, channel_state, dbm_to_watt, sample_users


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


# key -> (Scenario field, unit family)
_FIELDS = {
    "wavelength": ("wavelength", "length"),
    "carrier_frequency": ("wavelength", "frequency"),
    "bandwidth": ("bandwidth", "frequency"),
    "noise_power": ("noise_power", "power"),
    "n_ref": ("n_ref", None),
    "waveguide_length": ("waveguide_length", "length"),
    "region_depth": ("region_depth", "length"),
    "height": ("height", "length"),
    "n_antennas": ("n_antennas", "int"),
    "n_aircomp": ("n_aircomp", "int"),
    "n_noma": ("n_noma", "int"),
    "alpha": ("alpha", None),
    "power_max": ("power_max", "power"),
    "r_min": ("r_min", "rate"),
    "mse_threshold": ("mse_threshold", None),
    "realizations": ("realizations", "int"),
    "seed": ("seed", "int"),
    "discrete_step": ("discrete_step", "length"),
}
_ALIASES = {
    "lambda": "wavelength", "f_c": "carrier_frequency", "b": "bandwidth", "sigma2": "noise_power",
    "l_x": "waveguide_length", "l_y": "region_depth", "d": "height", "n": "n_antennas",
    "k_a": "n_aircomp", "k_n": "n_noma", "p_max": "power_max", "r_min_j": "r_min",
    "epsilon0": "mse_threshold", "realization_count": "realizations", "rng_seed": "seed",
}
_UNITS = {
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3},
    "frequency": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "rate": {"bps": 1.0, "kbps": 1e3, "mbps": 1e6},
    "power": {"w": 1.0, "mw": 1e-3},
}


def _parse_value(raw: str, family, where: str):
    parts = raw.split()
    if len(parts) not in (1, 2):
        raise ConfigError(f"{where}: cannot parse value {raw!r}")
    try:
        number = float(parts[0])
    except ValueError:
        raise ConfigError(f"{where}: {parts[0]!r} is not a number") from None
    if not math.isfinite(number):
        raise ConfigError(f"{where}: value must be finite")
    unit = parts[1].lower() if len(parts) == 2 else None
    if family == "int":
        if unit is not None or number != int(number):
            raise ConfigError(f"{where}: expected an integer, got {raw!r}")
        return int(number)
    if unit is None:
        return number
    if family == "power" and unit == "dbm":
        return float(dbm_to_watt(number))
    table = _UNITS.get(family)
    if table is None or unit not in table:
        raise ConfigError(f"{where}: unit {parts[1]!r} not accepted here")
    return number * table[unit]


def parse_scenario(text: str, source: str = "<config>") -> Scenario:
    """Build a Scenario from config text; absent keys keep their defaults."""
    values: dict = {}
    seen: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        where = f"{source}:{lineno}"
        if "=" not in body:
            raise ConfigError(f"{where}: expected 'key = value', got {body!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        name = _ALIASES.get(key.lower(), key.lower())
        if name not in _FIELDS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if not raw:
            raise ConfigError(f"{where}: missing value for {key!r}")
        target, family = _FIELDS[name]
        if target in seen:
            raise ConfigError(f"{where}: {key!r} already set on line {seen[target]}")
        val = _parse_value(raw, family, f"{where} ({key})")
        if name == "carrier_frequency":
            if val <= 0:
                raise ConfigError(f"{where} ({key}): frequency must be positive")
            val = SPEED_OF_LIGHT / val
        values[target] = val
        seen[target] = lineno
    try:
        return Scenario(**values)
    except ValueError as exc:
        msg = str(exc)
        # point at the line that set the offending field, when there is one
        line = next((ln for t, ln in seen.items() if msg.startswith(t)), None)
        where = f"{source}:{line}" if line else source
        raise ConfigError(f"{where}: {msg}") from None


def load_scenario(path) -> Scenario:
    """Read a config file; ``None``, ``""`` or ``"default"`` give the default scenario."""
    if path is None or str(path) in ("", "default"):
        return Scenario()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{p}: {exc.strerror or exc}") from None
    return parse_scenario(text, str(p))


# -- experiments -----------------------------------------------------------

SWEEPS = ("iterations", "ka", "n", "alpha")
ALL_SCHEMES = tuple(s.value for s in BenchmarkScheme)
# fixed -> discrete -> proposed share warm starts, which makes the per-drop
# ordering of the three nested schemes hold by construction
_CHAIN = {BenchmarkScheme.DISCRETE_PAS: BenchmarkScheme.FIXED_PA,
          BenchmarkScheme.PROPOSED: BenchmarkScheme.DISCRETE_PAS}
_ORDER = (BenchmarkScheme.FIXED_PA, BenchmarkScheme.DISCRETE_PAS, BenchmarkScheme.PROPOSED,
          BenchmarkScheme.FULL_POWER)


@dataclass
class ExperimentSpec:
    scenario: Scenario = field(default_factory=Scenario)
    sweep: str = "iterations"
    values: tuple = ()
    schemes: tuple = ALL_SCHEMES
    realizations: int = 20
    seed: int = 0
    out: Path | None = None
    ao: AoConfig = field(default_factory=AoConfig)

    def __post_init__(self):
        if self.sweep not in SWEEPS:
            raise ConfigError(f"sweep must be one of {SWEEPS}, got {self.sweep!r}")
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        bad = [s for s in self.schemes if s not in ALL_SCHEMES]
        if bad or not self.schemes:
            raise ConfigError(f"unknown scheme(s) {bad}; choose from {ALL_SCHEMES}")
        if self.sweep == "iterations":
            self.values = (None,)
        elif not self.values:
            raise ConfigError(f"sweep {self.sweep!r} needs a value list")
        for v in self.values:
            self.scenario_for(v)  # range checks

    def scenario_for(self, value) -> Scenario:
        sc = self.scenario
        try:
            if self.sweep == "ka":
                if value != int(value) or value < 1:
                    raise ValueError("K_A values must be integers >= 1")
                return sc.with_users(n_aircomp=int(value))
            if self.sweep == "n":
                if value != int(value) or value < 1:
                    raise ValueError("N values must be integers >= 1")
                return dataclasses.replace(sc, n_antennas=int(value))
            if self.sweep == "alpha":
                return dataclasses.replace(sc, alpha=float(value))
        except ValueError as exc:
            raise ConfigError(f"sweep {self.sweep} value {value!r}: {exc}") from None
        return sc


@dataclass
class RunRecord:
    sweep: str
    value: object
    realization: int
    scheme: str
    status: str
    r_h: float = float("nan")
    r_a: float = float("nan")
    r_n: float = float("nan")
    mse: float = float("nan")
    iterations: int = 0
    qos_feasible: bool = False
    mse_feasible: bool = False
    constraints_ok: bool = False
    warm_start_used: bool = False
    wall_time: float = 0.0
    trace: list = field(default_factory=list)
    design: DesignPoint | None = field(default=None, repr=False, compare=False)

    @property
    def ok(self) -> bool:
        return not self.status.startswith("error")

    @property
    def invariant_violation(self) -> bool:
        return self.status.startswith("error: invariant")


def paired_users(seed: int, realization: int, sc: Scenario) -> UserSet:
    """User drop for one realization, shared by every scheme and sweep point.

    AirComp and NOMA users come from separate Philox streams keyed by
    (seed, realization), so changing K_A keeps the NOMA users and extends the
    AirComp list rather than reshuffling it.
    """
    def stream(kind):
        ss = np.random.SeedSequence(seed, spawn_key=(realization, kind))
        return np.random.Generator(np.random.Philox(ss))

    air = sample_users(stream(0), sc, n_aircomp=sc.n_aircomp, n_noma=0).aircomp
    noma = sample_users(stream(1), sc, n_aircomp=0, n_noma=sc.n_noma).noma
    return UserSet(aircomp=air, noma=noma)


def _record(spec_sweep, value, r, scheme, design: DesignPoint, rep, users, sc, wall):
    br = hybrid_rate(design, channel_state(users, design.placement, sc), sc)
    return RunRecord(spec_sweep, value, r, scheme, rep.status, br.hybrid, br.computation_rate,
                     br.noma_sum, br.aircomp_mse, rep.iterations, rep.qos_feasible,
                     rep.mse_feasible, rep.constraints_ok, rep.warm_start_used, wall,
                     list(rep.trace), design)


def _run_cell(args):
    spec, vi, r = args
    value = spec.values[vi]
    sc = spec.scenario_for(value)
    users = paired_users(spec.seed, r, sc)
    cfg = dataclasses.replace(spec.ao, seed=int(np.random.SeedSequence(spec.seed, spawn_key=(r, 2))
                                               .generate_state(1)[0]))
    wanted = [s for s in _ORDER if s.value in spec.schemes]
    out, designs = [], {}
    try:
        init = initialize(users, sc)
    except Exception as exc:  # noqa: BLE001 - recorded, never dropped
        return [RunRecord(spec.sweep, value, r, s.value, f"error: {exc}") for s in wanted]
    for scheme in _ORDER:
        # chained predecessors run even if not requested, so the ordering holds
        needed = scheme in wanted or any(_needs(w, scheme) for w in wanted)
        if not needed:
            continue
        t0 = time.perf_counter()
        try:
            warm = designs.get(_CHAIN.get(scheme))
            d, rep = run_benchmark(scheme, users, sc, cfg, init, warm_start=warm)
        except SolverInvariantError as exc:
            rec = RunRecord(spec.sweep, value, r, scheme.value, f"error: invariant: {exc}")
        except Exception as exc:  # noqa: BLE001
            rec = RunRecord(spec.sweep, value, r, scheme.value, f"error: {type(exc).__name__}: {exc}")
        else:
            designs[scheme] = d
            rec = _record(spec.sweep, value, r, scheme.value, d, rep, users, sc,
                          time.perf_counter() - t0)
        if scheme in wanted:
            out.append(rec)
    return out


def solve_drop(spec: ExperimentSpec, realization: int, value_index: int = 0) -> list[RunRecord]:
    """Every requested scheme on one user drop (records carry the designs)."""
    return _run_cell((spec, value_index, realization))


def _needs(wanted: BenchmarkScheme, scheme: BenchmarkScheme) -> bool:
    prev = _CHAIN.get(wanted)
    while prev is not None:
        if prev is scheme:
            return True
        prev = _CHAIN.get(prev)
    return False


def worker_count() -> int:
    env = os.environ.get("PINCHOPT_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise ConfigError(f"PINCHOPT_THREADS must be an integer, got {env!r}") from None
    return cap


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> list[RunRecord]:
    """Run every (sweep value, realization, scheme) cell and optionally write CSVs.

    Records come back sorted by (value index, realization, scheme order) no
    matter how the cells were scheduled.
    """
    tasks = [(spec, vi, r) for vi in range(len(spec.values)) for r in range(spec.realizations)]
    workers = min(worker_count() if workers is None else workers, len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_cell, tasks))
    else:
        chunks = [_run_cell(t) for t in tasks]
    records = [rec for chunk in chunks for rec in chunk]
    if spec.out is not None:
        write_outputs(spec, records, Path(spec.out))
    return records


# -- CSV -------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


RUN_COLUMNS = ("sweep", "value", "realization", "scheme", "status", "R_H", "R_A", "R_N", "MSE",
               "iterations", "qos_feasible", "mse_feasible", "constraints_ok", "warm_start_used")
AGG_METRICS = ("R_H", "R_A", "R_N", "MSE")


def _run_row(rec: RunRecord):
    return [rec.sweep, _fmt(rec.value), rec.realization, rec.scheme, rec.status, _fmt(rec.r_h),
            _fmt(rec.r_a), _fmt(rec.r_n), _fmt(rec.mse), rec.iterations, _fmt(rec.qos_feasible),
            _fmt(rec.mse_feasible), _fmt(rec.constraints_ok), _fmt(rec.warm_start_used)]


def aggregate(records: list[RunRecord]) -> list[dict]:
    """Mean and sample std per (value, scheme) over the successful runs."""
    cells: dict = {}
    for rec in records:
        cells.setdefault((_fmt(rec.value), rec.scheme), []).append(rec)
    rows = []
    for (value, scheme), recs in cells.items():
        good = [r for r in recs if r.ok]
        row = {"sweep": recs[0].sweep, "value": value, "scheme": scheme, "runs": len(recs),
               "ok_runs": len(good),
               "feasible_fraction": (sum(r.constraints_ok for r in good) / len(good)) if good else float("nan")}
        for name, attr in zip(AGG_METRICS, ("r_h", "r_a", "r_n", "mse")):
            vals = np.array([getattr(r, attr) for r in good], float)
            row[f"{name}_mean"] = float(np.mean(vals)) if len(vals) else float("nan")
            row[f"{name}_std"] = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0 if len(vals) else float("nan")
        rows.append(row)
    return rows


def mean_traces(records: list[RunRecord]) -> dict:
    """Per-scheme mean trace; finished runs are held at their final value."""
    out = {}
    for scheme in dict.fromkeys(r.scheme for r in records):
        traces = [r.trace for r in records if r.scheme == scheme and r.ok and r.trace]
        if not traces:
            continue
        length = max(len(t) for t in traces)
        padded = np.array([t + [t[-1]] * (length - len(t)) for t in traces], float)
        out[scheme] = padded.mean(axis=0)
    return out


def render_csvs(records: list[RunRecord]) -> dict:
    """CSV texts keyed by file name; wall time is left out so output is reproducible."""
    files = {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_COLUMNS)
    for rec in records:
        w.writerow(_run_row(rec))
    files["runs.csv"] = buf.getvalue()

    rows = aggregate(records)
    cols = ["sweep", "value", "scheme", "runs", "ok_runs", "feasible_fraction"]
    cols += [f"{m}_{s}" for m in AGG_METRICS for s in ("mean", "std")]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(row[c]) if not isinstance(row[c], str) else row[c] for c in cols])
    files["aggregate.csv"] = buf.getvalue()

    if records and records[0].sweep == "iterations":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "scheme", "R_H"])
        for scheme, tr in mean_traces(records).items():
            for i, val in enumerate(tr):
                w.writerow([i, scheme, _fmt(float(val))])
        files["trace.csv"] = buf.getvalue()
    return files


def write_outputs(spec: ExperimentSpec, records: list[RunRecord], out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in render_csvs(records).items():
        path = out / name
        path.write_text(text)
        written.append(path)
    return written
