"""Multi-arm, multi-population design with a shared control.

Two experimental regimens are each compared to a common control in three
nested populations, giving six hypotheses.  Tests share events through
both the common control arm and the nested populations, so the complete
correlation structure spans a 12 x 12 matrix (6 hypotheses x 2
analyses), and the complete-intersection bounds involve 12-dimensional
integrals.

Equal weights of 1/6 with fixed cumulative spending levels (0.001 then
0.025) are used.  The payoff of modeling the correlation: the final
complete-intersection member level rises from 0.025/6 = 0.0042 to about
0.0062 — a factor of roughly 1.5.
"""

import time

from seqmtp import full_table, load_design

spec = load_design("designs/multiarm.json")
full = (1 << spec.m) - 1

start = time.perf_counter()
table = full_table(spec, subsets=[full])  # complete intersection only
elapsed = time.perf_counter() - start

for k in (1, 2):
    e = table.at(full, k)
    print(f"analysis {k}: cumulative alpha {e.alpha_target:.4f}")
    print(f"  Bonferroni member level: {e.comparator[1]:.4f}")
    print(f"  parametric member level: {e.p_bounds[1]:.4f}"
          f"  (inflation {e.inflation:.3f})")

print(f"\nsolved in {elapsed:.1f} s")
