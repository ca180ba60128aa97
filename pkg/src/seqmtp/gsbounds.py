"""Single-hypothesis group-sequential efficacy bounds from spending.

Given information fractions, spending times, a spending function, and an
overall level, solves the nominal per-analysis bounds so that the
cumulative crossing probability under the null equals the cumulative
spend at every analysis.  Temporal correlation between analyses j < k is
sqrt(t_j / t_k).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from .mvn import bvn_cdf, orthant_prob
from .spending import SpendingFunction, spend

__all__ = ["SingleBoundResult", "gs_single_bounds"]

MAX_ANALYSES = 10
UNTESTABLE_SPEND = 1e-12  # incremental spend below this yields a p=0 sentinel
_Z_CAP = 9.0


@dataclass(frozen=True)
class SingleBoundResult:
    p_bounds: tuple[float, ...]
    z_bounds: tuple[float, ...]
    cumulative_spend: tuple[float, ...]
    untestable: tuple[bool, ...]


def _noncross_prob(z_bounds: list[float], corr: np.ndarray) -> float:
    """P(no crossing through the supplied analyses), skipping sentinels."""
    finite = [(j, c) for j, c in enumerate(z_bounds) if np.isfinite(c)]
    if not finite:
        return 1.0
    idx = [j for j, _ in finite]
    upper = np.array([c for _, c in finite])
    if len(idx) == 1:
        return float(ndtr(upper[0]))
    sub = corr[np.ix_(idx, idx)]
    if len(idx) == 2:
        return bvn_cdf(upper[0], upper[1], sub[0, 1])
    return orthant_prob(upper, sub, abs_tol=1e-8)


def gs_single_bounds(info_fractions, spending_times, f: SpendingFunction,
                     level: float) -> SingleBoundResult:
    """Group-sequential bounds for one hypothesis at the given level.

    ``info_fractions`` drive the temporal correlation; ``spending_times``
    drive the cumulative spend (they differ when the spending-time policy
    departs from observed information).  A fixed-increment family spends
    by analysis index and ignores the spending times.
    """
    t = tuple(float(x) for x in info_fractions)
    s = tuple(float(x) for x in spending_times)
    K = len(t)
    if K > MAX_ANALYSES:
        raise ValueError(f"at most {MAX_ANALYSES} analyses supported, got {K}")
    if len(s) != K:
        raise ValueError("spending times must match information fractions")
    if any(b <= a for a, b in zip(t, t[1:])) or t[0] <= 0:
        raise ValueError("information fractions must be strictly increasing and > 0")
    if any(b < a for a, b in zip(s, s[1:])) or s[0] <= 0 or s[-1] > 1:
        raise ValueError("spending times must be nondecreasing in (0, 1]")

    if f.family == "fixed":
        spent = [f.at_analysis(k, level) for k in range(1, K + 1)]
    else:
        spent = [spend(f, s[k - 1], level) for k in range(1, K + 1)]

    rt = np.sqrt(np.asarray(t))
    corr = np.minimum.outer(rt, rt) / np.maximum.outer(rt, rt)

    z_bounds: list[float] = []
    untestable: list[bool] = []
    prev = 0.0
    for k in range(1, K + 1):
        target = spent[k - 1]
        if target - prev < UNTESTABLE_SPEND:
            z_bounds.append(np.inf)
            untestable.append(True)
            continue
        goal = 1.0 - target

        def resid(c: float) -> float:
            return _noncross_prob(z_bounds + [c], corr[:k, :k]) - goal

        lo = ndtri(goal)  # crossing prob is at least the marginal tail
        hi = max(lo + 0.5, _Z_CAP)
        if resid(hi) < 0:
            raise RuntimeError(f"failed to bracket bound at analysis {k}")
        c = brentq(resid, lo, hi, xtol=1e-10)
        z_bounds.append(float(c))
        untestable.append(False)
        prev = target

    p_bounds = tuple(0.0 if not np.isfinite(c) else float(1.0 - ndtr(c))
                     for c in z_bounds)
    return SingleBoundResult(p_bounds, tuple(z_bounds), tuple(spent),
                             tuple(untestable))
