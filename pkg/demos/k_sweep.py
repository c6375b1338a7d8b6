"""Mean, median and trimmed-mean D(Sigma) across outlier sizes K.

Small replication counts keep this to a couple of minutes; the acceptance
suite runs 200 per cell.

    python3 demos/k_sweep.py [reps]
"""

import sys

from ksdrobust import ExperimentConfig, run_experiment, summarize

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 10
cfg = ExperimentConfig(p=30, n=100, eps=0.2, gamma=0.0, K=(5, 10, 15, 20, 25, 30),
                       reps=reps, spread="all")
rows = summarize(run_experiment(cfg), thresholds=(8.0,))

print(f"{'K':>4} {'variant':>7} {'mean':>7} {'median':>7} {'trim10':>7} {'<8':>5}")
for r in rows:
    print(f"{r['K']:4g} {r['variant']:>7} {r['mean_d_sigma']:7.2f} {r['median_d_sigma']:7.2f}"
          f" {r['trim10_d_sigma']:7.2f} {r['below_8']:5.2f}")
