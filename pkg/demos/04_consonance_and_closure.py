"""Closed testing, consonance, and the sequentially rejective shortcut.

Closed testing rejects an elementary hypothesis once every intersection
containing it is rejected.  When the boundary table is consonant (no
bound shrinks after removing a hypothesis), the same decisions follow
from a cheaper sequentially rejective walk.  Consonance depends on the
weighting scheme: the original graph weights of this design break it,
the Bonferroni-Holm weights keep it.
"""

from seqmtp import (check_consonance, full_table, load_design, run_shortcut,
                    run_trial, shortcut_available)

original = full_table(load_design("designs/example1.json"))
holm = full_table(load_design("designs/example1_bh.json"))

print("original graph weights consonant?", shortcut_available(original))
for v in check_consonance(original):
    sup = "&".join(f"H{i}" for i in v.superset)
    sub = "&".join(f"H{i}" for i in v.subset)
    print(f"  H{v.hypothesis} at analysis {v.analysis}: "
          f"{sup} allows {v.superset_bound:.4f} "
          f"but {sub} only {v.subset_bound:.4f}")

# The violation can be realized: p_1 = 0.00105 at the interim rejects
# the complete intersection (bound 0.0011) yet fails inside {H1, H3}
# (bound 0.0010), so closed testing rejects no elementary hypothesis.
state = run_trial(original, [{1: 0.00105, 2: 0.5, 3: 0.5}])
print()
print("p = (0.00105, 0.5, 0.5) under the original weights:")
print("  rejected intersections:", sorted(state.rejected_subsets))
print("  elementary rejections:", sorted(state.elementary) or "none")

print()
print("Bonferroni-Holm weights consonant?", shortcut_available(holm))

# With consonance the shortcut walk reproduces the closure exactly,
# including retesting earlier analyses after each removal.
p = [{1: 0.0100, 2: 0.0013, 3: 0.5},   # interim
     {1: 0.0010, 2: 0.9, 3: 0.9}]      # final
closure = run_trial(holm, p)
shortcut = run_shortcut(holm, p)
print()
print("closure rejections: ", sorted(closure.elementary),
      "at analyses", closure.rejected_at)
print("shortcut rejections:", sorted(shortcut.elementary),
      "at analyses", shortcut.rejected_at)
