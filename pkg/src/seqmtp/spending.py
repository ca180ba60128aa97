"""Alpha-spending function families and spending-time policies.

A spending function f(t, alpha) gives the cumulative one-sided Type I
error allowed by spending time t in (0, 1], with f(1, alpha) = alpha.
Fixed-increment plans (pre-specified cumulative levels per analysis) are
modeled as a degenerate family whose value depends on the analysis index
rather than on t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .design import SpendingTimePolicy

__all__ = ["SpendingFunction", "spend", "spending_time", "check_well_ordered"]

FAMILIES = ("hsd", "ldof", "ldpocock", "power", "fixed")


@dataclass(frozen=True)
class SpendingFunction:
    """A spending function family with its parameter.

    family:
      "hsd"      exponential-family spending, parameter gamma
                 (gamma = 0 degenerates to linear spending alpha * t)
      "ldof"     Lan-DeMets O'Brien-Fleming-like
      "ldpocock" Lan-DeMets Pocock-like
      "power"    alpha * t ** rho, parameter rho
      "fixed"    verbatim cumulative levels per analysis (fractions of
                 alpha are rescaled so the final level equals alpha)
    """

    family: str
    parameter: float | None = None
    fixed_levels: tuple[float, ...] = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown spending family '{self.family}'")
        if self.family == "fixed" and not self.fixed_levels:
            raise ValueError("fixed-increment spending needs explicit levels")

    def at_analysis(self, k: int, alpha: float) -> float:
        """Cumulative spend for a fixed-increment plan at analysis k."""
        if self.family != "fixed":
            raise ValueError("at_analysis only applies to fixed-increment plans")
        levels = self.fixed_levels
        # levels are stated at the design FWER; rescale for sub-family use
        return levels[k - 1] * (alpha / levels[-1])


def spend(f: SpendingFunction, t: float, alpha: float) -> float:
    """Cumulative alpha spent by spending time t."""
    if not 0.0 < t <= 1.0:
        raise ValueError(f"spending time {t} outside (0, 1]")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha {alpha} outside (0, 1)")
    if f.family == "hsd":
        g = f.parameter
        if g is None:
            raise ValueError("hsd spending needs a parameter")
        if g == 0.0:
            return alpha * t
        return alpha * (1.0 - math.exp(-g * t)) / (1.0 - math.exp(-g))
    if f.family == "ldof":
        z = ndtri(1.0 - alpha / 2.0)
        return 2.0 * (1.0 - ndtr(z / math.sqrt(t)))
    if f.family == "ldpocock":
        return alpha * math.log(1.0 + (math.e - 1.0) * t)
    if f.family == "power":
        rho = f.parameter if f.parameter is not None else 1.0
        return alpha * t ** rho
    raise ValueError("fixed-increment plans spend by analysis index, not t")


def spending_time(policy: SpendingTimePolicy, members, k: int,
                  observed_counts, planned_final_counts,
                  schedule=(), planned_counts=None, n_analyses=None):
    """Spending time(s) for analysis k under the given policy.

    observed_counts[i-1][k-1] are cumulative counts; planned_final_counts
    are the per-hypothesis design targets.  Returns a float for the
    set-level policies and a dict {i: t} for the per-hypothesis policy.
    """
    members = tuple(members)
    for i in members:
        if planned_final_counts[i - 1] <= 0:
            raise ValueError(f"planned final count for H{i} must be positive")

    def frac(i: int) -> float:
        return min(1.0, observed_counts[i - 1][k - 1] / planned_final_counts[i - 1])

    if policy is SpendingTimePolicy.FIXED_SCHEDULE:
        return schedule[k - 1]
    if policy is SpendingTimePolicy.MIN_INFORMATION_FRACTION:
        return min(frac(i) for i in members)
    if policy is SpendingTimePolicy.PER_HYPOTHESIS_INFORMATION_FRACTION:
        return {i: frac(i) for i in members}
    if policy is SpendingTimePolicy.MIN_PLANNED_ACTUAL:
        K = n_analyses if n_analyses is not None else len(observed_counts[0])
        if k == K:
            return 1.0
        actual = min(frac(i) for i in members)
        if planned_counts is None:
            return actual
        planned = min(
            min(1.0, planned_counts[i - 1][k - 1] / planned_final_counts[i - 1])
            for i in members)
        return min(planned, actual)
    raise ValueError(f"unknown spending-time policy {policy}")


def check_well_ordered(f: SpendingFunction, info_fractions,
                       level_grid) -> tuple[bool, tuple | None]:
    """Check that bounds tighten as the allocated level shrinks.

    Computes single-hypothesis Z bounds across the level grid and requires
    c_k nonincreasing in the level at every analysis.  Returns (ok, first
    violation) where the violation is (k, level_low, level_high).
    """
    from .gsbounds import gs_single_bounds

    levels = list(level_grid)
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("level grid must be strictly increasing")
    t = tuple(info_fractions)
    results = [gs_single_bounds(t, t, f, lv) for lv in levels]
    for k in range(len(t)):
        for (lo, rlo), (hi, rhi) in zip(zip(levels, results), zip(levels[1:], results[1:])):
            if rlo.z_bounds[k] < rhi.z_bounds[k] - 1e-9:
                return False, (k + 1, lo, hi)
    return True, None
