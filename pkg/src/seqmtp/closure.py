"""Closed testing over a boundary table, with the sequential shortcut.

An intersection hypothesis is rejected at analysis k if it was rejected
earlier or some member's observed p-value falls at or below its nominal
bound for that intersection.  An elementary hypothesis is rejected once
every intersection containing it is rejected.  When the table is
consonant the same rejections emerge from a sequentially rejective
graph-style walk, which the simulator uses for speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .boundaries import BoundaryTable, check_consonance
from .design import all_subsets, mask_of, subset_members

__all__ = ["RejectionState", "run_analysis", "run_trial",
           "shortcut_available", "run_shortcut"]


@dataclass
class RejectionState:
    """Rejections accumulated across analyses of one trial."""

    m: int
    rejected_subsets: set[int] = field(default_factory=set)
    elementary: set[int] = field(default_factory=set)
    # analysis at which each elementary hypothesis was first rejected
    rejected_at: dict[int, int] = field(default_factory=dict)

    def copy(self) -> "RejectionState":
        return RejectionState(self.m, set(self.rejected_subsets),
                              set(self.elementary), dict(self.rejected_at))


def run_analysis(table: BoundaryTable, k: int, p_values: dict[int, float],
                 state: RejectionState | None = None) -> RejectionState:
    """Apply the closure at analysis k given observed per-hypothesis p-values.

    ``state`` carries rejections from earlier analyses; bounds already
    incorporate the group-sequential structure, so a subset once rejected
    stays rejected.
    """
    if state is None:
        state = RejectionState(table.m)
    else:
        state = state.copy()

    for mask in table.subsets():
        if mask in state.rejected_subsets:
            continue
        entry = table.at(mask, k)
        for i in entry.members:
            b = entry.p_bounds[i]
            if b > 0.0 and i in p_values and p_values[i] <= b:
                state.rejected_subsets.add(mask)
                break

    full_family = set(table.subsets())
    for i in range(1, table.m + 1):
        if i in state.elementary:
            continue
        containing = [mask for mask in full_family if mask & (1 << (i - 1))]
        if containing and all(mask in state.rejected_subsets for mask in containing):
            state.elementary.add(i)
            state.rejected_at[i] = k
    return state


def run_trial(table: BoundaryTable, p_by_analysis) -> RejectionState:
    """Run the closure over successive analyses.

    ``p_by_analysis[k-1]`` maps hypothesis index to the observed p-value
    at analysis k.
    """
    state = None
    for k, pvals in enumerate(p_by_analysis, start=1):
        state = run_analysis(table, k, pvals, state)
    return state


def shortcut_available(table: BoundaryTable) -> bool:
    """True when the table is consonant, licensing the sequential shortcut."""
    return not check_consonance(table)


def run_shortcut(table: BoundaryTable, p_by_analysis) -> RejectionState:
    """Sequentially rejective walk equivalent to the closure when consonant.

    Starting from the full family, repeatedly reject any member whose
    p-value meets its bound in the current active intersection, remove it,
    and continue with the smaller intersection's bounds.
    """
    state = RejectionState(table.m)
    active = set(range(1, table.m + 1))
    history: list[dict[int, float]] = []
    for k, pvals in enumerate(p_by_analysis, start=1):
        history.append(pvals)
        progress = True
        while progress and active:
            progress = False
            mask = mask_of(sorted(active))
            # after each removal, earlier analyses are retested against the
            # relaxed bounds of the shrunken intersection
            for j, pj in enumerate(history, start=1):
                entry = table.at(mask, j)
                for i in sorted(active):
                    b = entry.p_bounds[i]
                    if b > 0.0 and i in pj and pj[i] <= b:
                        state.elementary.add(i)
                        state.rejected_at[i] = k
                        active.discard(i)
                        progress = True
                        break
                if progress:
                    break
        # mark every intersection containing a rejected member
        for mask in table.subsets():
            if any(mask & (1 << (i - 1)) for i in state.elementary):
                state.rejected_subsets.add(mask)
    return state
