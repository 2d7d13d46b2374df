"""Command line entry point: ``pinchopt {solve,converge,sweep,selftest}``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .ao import BenchmarkScheme
from .harness import (
    ConfigError, ExperimentSpec, load_scenario, paired_users, render_csvs, run_experiment,
    solve_drop, write_outputs,
)
from .metrics import check_constraints
from .model import channel_state

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2

SWEEP_DEFAULTS = {
    "ka": (2, 3, 4, 5, 6, 7, 8),
    "n": (2, 3, 4, 5, 6, 7, 8, 9, 10),
    "alpha": tuple(round(0.1 * i, 1) for i in range(11)),
}
SCHEMES = tuple(s.value for s in BenchmarkScheme)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _schemes(text: str):
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in names if s not in SCHEMES]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown scheme(s) {bad}; choose from {', '.join(SCHEMES)}")
    return names


def _values(text: str):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="key = value scenario file, or 'default'")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=None, help="directory for the CSV files")

    runs = argparse.ArgumentParser(add_help=False)
    runs.add_argument("--schemes", type=_schemes, default=SCHEMES,
                      help=f"comma-separated subset of {', '.join(SCHEMES)}")
    runs.add_argument("--realizations", type=int, default=20,
                      help="user drops to average over (200 for the full protocol)")

    p = _Parser(prog="pinchopt", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("solve", parents=[common], help="optimize one user drop and print the breakdown")
    s.add_argument("--schemes", type=_schemes, default=SCHEMES)
    s.add_argument("--realization", type=int, default=0, help="drop index within the seed")
    sub.add_parser("converge", parents=[common, runs], help="mean AO trace per scheme")
    sw = sub.add_parser("sweep", parents=[common, runs], help="mean rates over a parameter sweep")
    sw.add_argument("--var", required=True, choices=sorted(SWEEP_DEFAULTS))
    sw.add_argument("--values", type=_values, default=None)
    st = sub.add_parser("selftest", help="oracle and property suites")
    st.add_argument("--only", default=None, help="comma-separated suite names")
    return p


def _run(spec, name, out):
    records = run_experiment(spec)
    if spec.out is not None:
        for path in write_outputs(spec, records, Path(spec.out)):
            print(f"wrote {path}", file=sys.stderr)
    out.write(render_csvs(records)[name])
    return records


def _status(records) -> int:
    bad = [r for r in records if not r.ok]
    for r in bad:
        print(f"run {r.sweep}={r.value} drop {r.realization} {r.scheme}: {r.status}", file=sys.stderr)
    return EXIT_INVARIANT if bad else EXIT_OK


def _solve(args, sc, out) -> int:
    spec = ExperimentSpec(sc, "iterations", (), args.schemes, realizations=1, seed=args.seed)
    records = solve_drop(spec, args.realization)
    users = paired_users(args.seed, args.realization, sc)
    for rec in records:
        out.write(f"[{rec.scheme}] status={rec.status} iterations={rec.iterations}\n")
        if not rec.ok:
            continue
        out.write(f"  R_H={rec.r_h:.6g} bps  R_A={rec.r_a:.6g} bps  R_N={rec.r_n:.6g} bps  "
                  f"MSE={rec.mse:.6g}\n")
        cons = check_constraints(rec.design, channel_state(users, rec.design.placement, sc), sc)
        fmt = lambda a: " ".join(f"{x:.4g}" for x in np.atleast_1d(a))  # noqa: E731
        out.write(f"  slack power_aircomp [W]: {fmt(cons.power_aircomp_slack)}\n")
        out.write(f"  slack power_noma [W]:    {fmt(cons.power_noma_slack)}\n")
        out.write(f"  slack qos [bps]:         {fmt(cons.qos_slack)}\n")
        out.write(f"  slack mse:               {fmt(cons.mse_slack)}\n")
        out.write(f"  slack placement [m]:     {fmt(cons.placement_slack)}\n")
        out.write(f"  placement [m]:           {fmt(rec.design.placement)}\n")
    return _status(records)


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            from .checks import SUITES, run_selftest
            names = args.only.split(",") if args.only else None
            if names and any(n not in SUITES for n in names):
                raise ConfigError(f"unknown suite in {args.only!r}; choose from {', '.join(SUITES)}")
            results = run_selftest(names, out=lambda s: print(s, file=out))
            return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT
        sc = load_scenario(args.config)
        if args.command == "solve":
            return _solve(args, sc, out)
        if args.command == "converge":
            spec = ExperimentSpec(sc, "iterations", (), args.schemes, args.realizations, args.seed,
                                  args.out)
            records = _run(spec, "trace.csv", out)
        else:
            values = args.values or SWEEP_DEFAULTS[args.var]
            spec = ExperimentSpec(sc, args.var, values, args.schemes, args.realizations, args.seed,
                                  args.out)
            records = _run(spec, "aggregate.csv", out)
        return _status(records)
    except ConfigError as exc:
        print(f"pinchopt: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
