"""Mean AO trace per scheme on the default scenario.

    python scripts/run_convergence.py --realizations 20 --out results/converge
"""
import argparse
from pathlib import Path

from pinchopt.harness import ExperimentSpec, load_scenario, mean_traces, run_experiment

p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
p.add_argument("--config", default=None)
p.add_argument("--seed", type=int, default=0)
p.add_argument("--realizations", type=int, default=20)
p.add_argument("--out", type=Path, default=Path("results/converge"))
args = p.parse_args()

spec = ExperimentSpec(load_scenario(args.config), "iterations", (), realizations=args.realizations,
                      seed=args.seed, out=args.out)
records = run_experiment(spec)
traces = mean_traces(records)
width = max(len(t) for t in traces.values())
print("iter " + " ".join(f"{s:>13}" for s in traces))
for i in range(width):
    print(f"{i:4d} " + " ".join(f"{t[min(i, len(t) - 1)] / 1e6:13.4f}" for t in traces.values()))
print(f"(Mbps; CSVs in {args.out})")
