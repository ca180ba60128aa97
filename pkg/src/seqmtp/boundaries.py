"""Nominal efficacy boundaries for every intersection hypothesis.

For each nonempty subset J of hypotheses and each analysis k this module
solves the per-member nominal p-value bounds so that the joint crossing
probability under the complete correlation structure exactly equals the
cumulative alpha spent for H_J, with earlier bounds fixed.

Two solving strategies cover the three spending approaches:

* fixed cumulative levels or a common spending function: search the total
  nominal level a* with member bounds w_i(J) * a*;
* per-hypothesis spending: inflate the members' own group-sequential
  Bonferroni bounds by a common factor.

The table also carries the weighted-Bonferroni comparator bounds, from
which the realized inflation is back-calculated.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from .correlation import CorrelationMatrix, corr_from_overlap
from .design import (DesignSpec, SpendMethod, SpendingTimePolicy, all_subsets,
                     subset_members, subset_weights)
from .gsbounds import UNTESTABLE_SPEND, gs_single_bounds
from .mvn import orthant_prob
from .spending import SpendingFunction, spend, spending_time

__all__ = ["SubsetAnalysisBounds", "BoundaryTable", "solve_alpha_star",
           "solve_inflation", "full_table", "check_consonance",
           "ConsonanceViolation", "verify_exactness"]


def _mvn_tol(dim: int) -> float:
    return 1e-7 if dim <= 6 else 1e-6


@dataclass(frozen=True)
class SubsetAnalysisBounds:
    """Bounds for one intersection hypothesis at one analysis."""

    members: tuple[int, ...]
    p_bounds: dict[int, float]          # nominal per-member p bound
    comparator: dict[int, float]        # weighted-Bonferroni p bound
    alpha_target: float                 # cumulative spend through this analysis
    alpha_star: float | None = None     # total nominal level (a*-search method)
    inflation: float = 1.0              # realized relaxation over Bonferroni

    def z_bound(self, i: int) -> float:
        p = self.p_bounds[i]
        return np.inf if p <= 0.0 else float(ndtri(1.0 - p))


@dataclass
class BoundaryTable:
    m: int
    n_analyses: int
    entries: dict[tuple[int, int], SubsetAnalysisBounds] = field(default_factory=dict)

    def at(self, subset: int, k: int) -> SubsetAnalysisBounds:
        return self.entries[(subset, k)]

    def subsets(self):
        present = {mask for mask, _ in self.entries}
        return [mask for mask in all_subsets(self.m) if mask in present]

    def content_hash(self) -> str:
        """Stable digest of the table for golden-file comparisons."""
        h = hashlib.sha256()
        for mask in self.subsets():
            for k in range(1, self.n_analyses + 1):
                e = self.entries[(mask, k)]
                for i in e.members:
                    h.update(f"{mask}:{k}:{i}:{e.p_bounds[i]:.12e}".encode())
        return h.hexdigest()[:16]


def _joint_upper_and_corr(members, k, z_by_analysis, z_current, corr, m):
    """Assemble limits and correlation for the cumulative crossing event.

    Prior analyses contribute their fixed finite bounds; the current
    analysis contributes ``z_current``.  Members with an infinite bound at
    some analysis are untestable there and drop out of the event.
    """
    pairs, upper = [], []
    for j in range(1, k):
        for i in members:
            z = z_by_analysis[j].get(i, np.inf)
            if np.isfinite(z):
                pairs.append((i, j))
                upper.append(z)
    for i in members:
        z = z_current.get(i, np.inf)
        if np.isfinite(z):
            pairs.append((i, k))
            upper.append(z)
    sub = corr.submatrix(pairs)
    return np.asarray(upper), sub


def _noncross(members, k, z_by_analysis, z_current, corr, m, tol) -> float:
    upper, sub = _joint_upper_and_corr(members, k, z_by_analysis, z_current,
                                       corr, m)
    if upper.size == 0:
        return 1.0
    return orthant_prob(upper, sub, abs_tol=tol)


def solve_alpha_star(members, weights, corr: CorrelationMatrix, k: int,
                     z_by_analysis, alpha_target: float,
                     alpha_prev: float,
                     mvn_tol: float | None = None) -> tuple[dict[int, float], float]:
    """Find a* with member bounds w_i * a* matching the cumulative target.

    ``z_by_analysis`` maps earlier analyses to their fixed member Z
    bounds.  Returns (per-member p bounds, a*).  Members with zero weight
    get a p = 0 sentinel and are excluded from the rejection region.
    """
    members = tuple(members)
    w = {i: float(weights[i]) for i in members}
    active = [i for i in members if w[i] > 0.0]
    increment = alpha_target - alpha_prev
    if not active or increment < UNTESTABLE_SPEND:
        return {i: 0.0 for i in members}, 0.0

    dim = sum(1 for j in range(1, k) for i in members
              if np.isfinite(z_by_analysis[j].get(i, np.inf))) + len(active)
    tol = mvn_tol if mvn_tol is not None else _mvn_tol(dim)
    wmax = max(w[i] for i in active)

    def resid(astar: float) -> float:
        z_cur = {i: (float(ndtri(1.0 - w[i] * astar)) if w[i] > 0 else np.inf)
                 for i in members}
        p = _noncross(members, k, z_by_analysis, z_cur, corr, corr.m, tol)
        return (1.0 - p) - alpha_target

    lo = max(increment, UNTESTABLE_SPEND)
    hi = min(0.5, (1.0 - 1e-9) / wmax)
    if resid(lo) > 0:
        lo = max(lo * 0.5, 1e-14)
    if resid(hi) < 0:
        raise RuntimeError(
            f"alpha* not bracketed in [{lo}, {hi}] for members {members} at k={k}")
    astar = brentq(resid, lo, hi, xtol=1e-12, rtol=1e-10)
    return {i: (w[i] * astar if w[i] > 0 else 0.0) for i in members}, float(astar)


def solve_inflation(members, bonferroni_bounds, corr: CorrelationMatrix, k: int,
                    z_by_analysis, alpha_target: float,
                    alpha_prev: float,
                    mvn_tol: float | None = None) -> tuple[dict[int, float], float]:
    """Find the common inflation factor over per-member Bonferroni bounds.

    ``bonferroni_bounds`` are each member's own group-sequential nominal
    p bound at its weighted share of alpha.  Returns (per-member p
    bounds, inflation).
    """
    members = tuple(members)
    ap = {i: float(bonferroni_bounds[i]) for i in members}
    active = [i for i in members if ap[i] > 0.0]
    if not active or alpha_target - alpha_prev < UNTESTABLE_SPEND:
        return {i: 0.0 for i in members}, 1.0

    dim = sum(1 for j in range(1, k) for i in members
              if np.isfinite(z_by_analysis[j].get(i, np.inf))) + len(active)
    tol = mvn_tol if mvn_tol is not None else _mvn_tol(dim)
    apmax = max(ap[i] for i in active)
    xi_cap = (1.0 - 1e-9) / apmax

    def resid(xi: float) -> float:
        z_cur = {i: (float(ndtri(1.0 - xi * ap[i])) if ap[i] > 0 else np.inf)
                 for i in members}
        p = _noncross(members, k, z_by_analysis, z_cur, corr, corr.m, tol)
        return (1.0 - p) - alpha_target

    lo, hi = 1.0, min(10.0, xi_cap)
    if resid(lo) > 0:
        # single members (or perfect correlation) need no inflation
        if resid(1.0) < 1e-9 or len(active) == 1:
            return dict(ap), 1.0
        lo = 0.5
    while resid(hi) < 0 and hi < xi_cap:
        hi = min(hi * 2.0, xi_cap)
    if resid(hi) < 0:
        raise RuntimeError(f"inflation factor not bracketed for {members} at k={k}")
    xi = brentq(resid, lo, hi, xtol=1e-12, rtol=1e-10)
    return {i: xi * ap[i] for i in members}, float(xi)


def _member_info_fractions(spec: DesignSpec, observed, i: int):
    """Information fractions for one hypothesis from observed counts."""
    row = observed[i - 1]
    final = row[-1]
    return tuple(c / final for c in row)


def _spending_times_for(spec: DesignSpec, members, observed):
    """Set-level spending time per analysis for the common-spending method."""
    sp = spec.spending
    return tuple(
        spending_time(sp.time_policy, members, k, observed,
                      sp.planned_final_counts, schedule=sp.schedule,
                      planned_counts=spec.events.marginal,
                      n_analyses=spec.n_analyses)
        for k in range(1, spec.n_analyses + 1))


def _family_for(spec: DesignSpec, i: int) -> SpendingFunction:
    sp = spec.spending
    if sp.method is SpendMethod.PER_HYPOTHESIS and sp.per_hypothesis_family:
        fam, par = sp.per_hypothesis_family[i - 1]
        return SpendingFunction(fam, par)
    return SpendingFunction(sp.family, sp.parameter)


def full_table(spec: DesignSpec, corr: CorrelationMatrix | None = None,
               observed_counts=None, subsets=None,
               mvn_tol: float | None = None) -> BoundaryTable:
    """Boundary table over the whole closed family.

    ``observed_counts`` (per-hypothesis cumulative counts) default to the
    planned event matrix so pure design-stage runs are possible; at
    analysis time actual counts override them.  When the design declares a
    correlation partition, each block is solved at its weight share of the
    subset's cumulative spend and the block results are concatenated.
    ``subsets`` restricts the computation to the given bitmasks (useful
    for large families where only some intersections matter).
    """
    sp = spec.spending
    if observed_counts is None:
        observed_counts = spec.events.marginal
    if corr is None:
        corr = corr_from_overlap(spec.events)
    K = spec.n_analyses
    table = BoundaryTable(spec.m, K)

    blocks = spec.correlation_partition or (tuple(range(1, spec.m + 1)),)
    wanted = list(all_subsets(spec.m)) if subsets is None else list(subsets)

    for mask in wanted:
        members = subset_members(mask)
        weights = subset_weights(spec.weighting, mask)
        w = {i: float(weights[i]) for i in members}
        wsum = sum(w.values())

        # per-member comparator bounds (weighted Bonferroni, own spending)
        comparator: dict[int, list[float]] = {}
        for i in members:
            if w[i] <= 0.0:
                comparator[i] = [0.0] * K
                continue
            if sp.method is SpendMethod.FIXED_LEVELS:
                levels = sp.levels
                incs = [levels[0]] + [b - a for a, b in zip(levels, levels[1:])]
                comparator[i] = [w[i] * inc for inc in incs]
            elif sp.method is SpendMethod.PER_HYPOTHESIS:
                t_i = _member_info_fractions(spec, observed_counts, i)
                s_raw = tuple(
                    spending_time(sp.time_policy, (i,), k, observed_counts,
                                  sp.planned_final_counts, schedule=sp.schedule,
                                  planned_counts=spec.events.marginal,
                                  n_analyses=K)
                    for k in range(1, K + 1))
                s_i = tuple(v[i] if isinstance(v, dict) else v for v in s_raw)
                res = gs_single_bounds(t_i, s_i, _family_for(spec, i),
                                       w[i] * spec.alpha)
                comparator[i] = list(res.p_bounds)
            else:
                t_i = _member_info_fractions(spec, observed_counts, i)
                s = _spending_times_for(spec, members, observed_counts)
                res = gs_single_bounds(t_i, s, _family_for(spec, i),
                                       w[i] * spec.alpha)
                comparator[i] = list(res.p_bounds)

        # cumulative spend targets per analysis
        targets: list[float] = []
        for k in range(1, K + 1):
            if sp.method is SpendMethod.FIXED_LEVELS:
                targets.append(sp.levels[k - 1])
            elif sp.method is SpendMethod.COMMON:
                t_k = spending_time(sp.time_policy, members, k, observed_counts,
                                    sp.planned_final_counts, schedule=sp.schedule,
                                    planned_counts=spec.events.marginal,
                                    n_analyses=K)
                f = SpendingFunction(sp.family, sp.parameter)
                targets.append(spend(f, t_k, spec.alpha))
            else:
                total = 0.0
                for i in members:
                    if w[i] <= 0.0:
                        continue
                    t_i = _member_info_fractions(spec, observed_counts, i)
                    s_i = spending_time(
                        sp.time_policy, (i,), k, observed_counts,
                        sp.planned_final_counts, schedule=sp.schedule,
                        planned_counts=spec.events.marginal, n_analyses=K)
                    s_ik = s_i if isinstance(s_i, float) else s_i[i]
                    total += spend(_family_for(spec, i), s_ik, w[i] * spec.alpha)
                targets.append(total)

        z_history: dict[int, dict[int, float]] = {}
        for k in range(1, K + 1):
            p_bounds: dict[int, float] = {}
            astar_total = 0.0
            has_astar = sp.method is not SpendMethod.PER_HYPOTHESIS
            for block in blocks:
                bj = [i for i in members if i in block]
                if not bj:
                    continue
                bw = sum(w[i] for i in bj)
                share = bw / wsum if wsum > 0 else 0.0
                if sp.method is SpendMethod.PER_HYPOTHESIS:
                    # per-hypothesis spending is additive over members
                    tgt = _per_hyp_target(spec, bj, w, k, observed_counts)
                    tgt_prev = (_per_hyp_target(spec, bj, w, k - 1, observed_counts)
                                if k > 1 else 0.0)
                    bounds, xi = solve_inflation(
                        bj, {i: comparator[i][k - 1] for i in bj}, corr, k,
                        z_history, tgt, tgt_prev, mvn_tol=mvn_tol)
                else:
                    tgt = targets[k - 1] * share
                    tgt_prev = targets[k - 2] * share if k > 1 else 0.0
                    bounds, astar = solve_alpha_star(
                        bj, w, corr, k, z_history, tgt, tgt_prev,
                        mvn_tol=mvn_tol)
                    astar_total += astar * (bw if bw > 0 else 0.0)
                p_bounds.update(bounds)

            comp_k = {i: comparator[i][k - 1] for i in members}
            comp_sum = sum(comp_k.values())
            bound_sum = sum(p_bounds.values())
            inflation = bound_sum / comp_sum if comp_sum > 0 else 1.0
            entry = SubsetAnalysisBounds(
                members=members, p_bounds=p_bounds, comparator=comp_k,
                alpha_target=targets[k - 1],
                alpha_star=(bound_sum / wsum if has_astar and wsum > 0 else None),
                inflation=inflation)
            table.entries[(mask, k)] = entry
            z_history[k] = {i: entry.z_bound(i) for i in members}
    return table


def _per_hyp_target(spec: DesignSpec, members, w, k: int, observed_counts) -> float:
    """Cumulative spend target summed over members' own spending functions."""
    if k == 0:
        return 0.0
    sp = spec.spending
    total = 0.0
    for i in members:
        if w[i] <= 0.0:
            continue
        s_i = spending_time(sp.time_policy, (i,), k, observed_counts,
                            sp.planned_final_counts, schedule=sp.schedule,
                            planned_counts=spec.events.marginal,
                            n_analyses=spec.n_analyses)
        s_ik = s_i if isinstance(s_i, float) else s_i[i]
        total += spend(_family_for(spec, i), s_ik, w[i] * spec.alpha)
    return total


@dataclass(frozen=True)
class ConsonanceViolation:
    superset: tuple[int, ...]
    subset: tuple[int, ...]
    hypothesis: int
    analysis: int
    superset_bound: float
    subset_bound: float


def check_consonance(table: BoundaryTable, tol: float = 1e-9) -> list[ConsonanceViolation]:
    """Scan for subset pairs where the larger set has the laxer bound.

    Consonance requires every member's bound under H_J to be at most its
    bound under any contained H_J'; an empty list licenses the
    sequentially-rejective shortcut.
    """
    violations = []
    masks = table.subsets()
    for big in masks:
        for small in masks:
            if small == big or (small & big) != small:
                continue
            for k in range(1, table.n_analyses + 1):
                eb = table.at(big, k)
                es = table.at(small, k)
                for i in es.members:
                    if eb.p_bounds[i] > es.p_bounds[i] + tol:
                        violations.append(ConsonanceViolation(
                            eb.members, es.members, i, k,
                            eb.p_bounds[i], es.p_bounds[i]))
    return violations


def verify_exactness(table: BoundaryTable, corr: CorrelationMatrix,
                     subset: int, k: int, abs_tol: float = 1e-7) -> tuple[float, float]:
    """Re-integrate a table entry; returns (achieved error rate, target)."""
    entry = table.at(subset, k)
    z_hist = {j: {i: table.at(subset, j).z_bound(i) for i in entry.members}
              for j in range(1, k)}
    z_cur = {i: entry.z_bound(i) for i in entry.members}
    p = _noncross(entry.members, k, z_hist, z_cur, corr, corr.m, abs_tol)
    return 1.0 - p, entry.alpha_target
