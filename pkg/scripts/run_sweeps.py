"""Parameter sweeps over K_A, N and alpha; one output directory per sweep.

    python scripts/run_sweeps.py --vars ka,n,alpha --realizations 20
"""
import argparse
from pathlib import Path

from pinchopt.cli import SWEEP_DEFAULTS
from pinchopt.harness import ExperimentSpec, aggregate, load_scenario, run_experiment

p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
p.add_argument("--config", default=None)
p.add_argument("--vars", default="ka,n,alpha")
p.add_argument("--seed", type=int, default=0)
p.add_argument("--realizations", type=int, default=20)
p.add_argument("--out", type=Path, default=Path("results"))
args = p.parse_args()

sc = load_scenario(args.config)
for var in args.vars.split(","):
    spec = ExperimentSpec(sc, var, SWEEP_DEFAULTS[var], realizations=args.realizations, seed=args.seed,
                          out=args.out / f"sweep_{var}")
    rows = aggregate(run_experiment(spec))
    schemes = list(dict.fromkeys(r["scheme"] for r in rows))
    print(f"\n{var:>6} " + " ".join(f"{s:>13}" for s in schemes) + "   (mean R_H, Mbps)")
    for value in dict.fromkeys(r["value"] for r in rows):
        cells = {r["scheme"]: r["R_H_mean"] for r in rows if r["value"] == value}
        print(f"{value:>6} " + " ".join(f"{cells[s] / 1e6:13.4f}" for s in schemes))
