"""Wall time of the two KSD + Rocke chains on clean samples.

The extra cost of the new variant is the larger direction pool, so the
ratio new/old follows the pool sizes once n is large.

    python3 demos/timing.py [reps]
"""

import sys

from ksdrobust import bench_timing
from ksdrobust.ksd import KsdConfig

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 1
sizes = [(20, 100), (20, 400), (50, 250)]
for row in bench_timing(sizes, reps=reps):
    p, n = row["p"], row["n"]
    pools = [2 + KsdConfig(v).n_sd(p) + (2 * min(5 * p, n // 2) if v == "new" else 0)
             for v in ("new", "old")]
    print(f"p={p:3d} n={n:5d}  new {row['new']:.2f}s  old {row['old']:.2f}s  "
          f"ratio {row['ratio']:.2f}  pool ratio {pools[0] / pools[1]:.2f}")
