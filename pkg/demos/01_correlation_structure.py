"""Complete correlation structure of the test statistics.

Three null hypotheses compare survival in Population 1, Population 2, and
the overall Population 3, where Populations 1 and 2 overlap each other
and are nested in Population 3.  With one interim plus one final
analysis there are six logrank statistics, and any two of them are
correlated through the events they share:

    Corr(Z_ik, Z_i'k') = n_shared / sqrt(n_ik * n_i'k')

where n_shared counts the events common to both tests (shared subjects,
evaluated at the earlier of the two analyses).
"""

import numpy as np

from seqmtp import EventCountMatrix, corr_from_overlap

# Cumulative events per hypothesis at (interim, final):
#   Population 1: 100 / 200, Population 2: 110 / 220, overall: 225 / 450.
# Events shared between populations 1 and 2 (their intersection cell):
#   80 / 160.  A nested population shares all of its events with the
# overall population, so (1,3) and (2,3) overlaps equal the marginals.
events = EventCountMatrix(
    marginal=((100, 200), (110, 220), (225, 450)),
    overlap={(1, 2): (80, 160), (1, 3): (100, 200), (2, 3): (110, 220)})

corr = corr_from_overlap(events)

labels = corr.labels()
print("statistics:", " ".join(labels))
with np.printoptions(precision=2, suppress=True):
    print(corr.matrix)

# A few entries, spelled out:
print()
print("Corr(Z_11, Z_21) = 80/sqrt(100*110) =", round(corr.entry(1, 1, 2, 1), 4))
print("Corr(Z_11, Z_31) = sqrt(100/225)    =", round(corr.entry(1, 1, 3, 1), 4))
print("Corr(Z_11, Z_12) = sqrt(100/200)    =", round(corr.entry(1, 1, 1, 2), 4))
print("Corr(Z_11, Z_32) = 100/sqrt(100*450) =", round(corr.entry(1, 1, 3, 2), 4))
