"""Alpha spending and single-hypothesis group-sequential bounds.

A spending function f(t, alpha) fixes how much one-sided Type I error
may be used by spending time t.  Given the information fractions of the
analyses, the per-analysis efficacy bounds are solved so that the
cumulative crossing probability under the null equals the cumulative
spend, accounting for the temporal correlation sqrt(t_j / t_k) between
analyses.
"""

from seqmtp import SpendingFunction, gs_single_bounds, spend

ALPHA = 0.025

# Hwang-Shih-DeCani spending with gamma = -4 is conservative early:
# at half the information only 0.0030 of the 0.025 is available.
hsd = SpendingFunction("hsd", -4.0)
for t in (0.25, 0.5, 0.75, 1.0):
    print(f"HSD(-4) cumulative spend at t={t:4.2f}: {spend(hsd, t, ALPHA):.4f}")

# Bounds for one hypothesis analyzed at information fractions 0.5 and 1:
res = gs_single_bounds((0.5, 1.0), (0.5, 1.0), hsd, ALPHA)
print()
print("two-analysis HSD(-4) bounds:")
for k, (p, z, spent) in enumerate(zip(res.p_bounds, res.z_bounds,
                                      res.cumulative_spend), start=1):
    print(f"  analysis {k}: p <= {p:.4f}  (z >= {z:.2f}),"
          f" cumulative spend {spent:.4f}")

# Lan-DeMets O'Brien-Fleming-like spending is even tighter early on.
ldof = SpendingFunction("ldof")
res = gs_single_bounds((155 / 305, 1.0), (155 / 305, 1.0), ldof, ALPHA)
print()
print("LDOF bounds at information fraction 155/305:")
print(f"  interim p <= {res.p_bounds[0]:.4f}, final p <= {res.p_bounds[1]:.4f}")

# Spending time may deliberately differ from the information fraction,
# e.g. spending on a fixed schedule while information runs late:
res = gs_single_bounds((0.4, 1.0), (0.5, 1.0), hsd, ALPHA)
print()
print("information at 0.4 but spending at 0.5:")
print(f"  interim p <= {res.p_bounds[0]:.4f} (same spend, new correlation)")
