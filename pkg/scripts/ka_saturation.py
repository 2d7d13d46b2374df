"""Why the hybrid rate barely moves with the number of AirComp users.

With aligned, equalized AirComp amplitudes the computation rate is close to
B log2(1 + I_A / n), so at alpha = 1/2

    R_H ~ (B/2) log2(1 + (S + I_A) / n).

The QoS target of the first-decoded NOMA user bounds S + I_A by
rx_weak (1 + 1/gamma), independently of K_A. This script prints, per K_A, the
mean R_H of fixed_pa and proposed next to the rate implied by that bound for
the fixed layout.

    python scripts/ka_saturation.py --realizations 20
"""
import argparse

import numpy as np

from pinchopt.harness import ExperimentSpec, load_scenario, paired_users, run_experiment
from pinchopt.metrics import hybrid_rate
from pinchopt.model import channel_state

p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
p.add_argument("--config", default=None)
p.add_argument("--values", default="1,2,4,6,8")
p.add_argument("--realizations", type=int, default=20)
args = p.parse_args()

sc = load_scenario(args.config)
values = tuple(int(v) for v in args.values.split(","))
spec = ExperimentSpec(sc, "ka", values, ("fixed_pa", "proposed"), realizations=args.realizations)
records = run_experiment(spec)
print(f"{'K_A':>4} {'fixed_pa':>10} {'bound':>10} {'proposed':>10} {'R_A':>10} {'R_N':>10}   (Mbps)")
for ka in values:
    scv = spec.scenario_for(ka)
    fixed = [r for r in records if r.value == ka and r.scheme == "fixed_pa"]
    prop = [r for r in records if r.value == ka and r.scheme == "proposed"]
    bound = []
    for r in fixed:
        users = paired_users(spec.seed, r.realization, scv)
        ch = channel_state(users, r.design.placement, scv)
        br = hybrid_rate(r.design, ch, scv)
        weak = ch.sic_order[0]
        rx_weak = abs(ch.g_noma[weak]) ** 2 * r.design.rho_noma[weak]
        total = rx_weak * (1 + 1 / scv.gamma[weak])
        bound.append(0.5 * scv.bandwidth * np.log2(1 + total / scv.noise_total))
    m = lambda xs: np.mean(xs) / 1e6  # noqa: E731
    print(f"{ka:4d} {m([r.r_h for r in fixed]):10.4f} {m(bound):10.4f} {m([r.r_h for r in prop]):10.4f} "
          f"{m([r.r_a for r in prop]):10.4f} {m([r.r_n for r in prop]):10.4f}")
