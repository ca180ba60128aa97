"""Operating-characteristics simulator for overlapping-population designs.

Generates time-to-event trials with two overlapping biomarker populations
nested in the overall population, analyzes them at event-triggered cuts
with logrank tests, and runs closed testing with both the correlation-
exploiting parametric bounds and the weighted-Bonferroni bounds, so the
two procedures can be compared replication by replication.

Rebuilding a boundary table for every replication's realized event counts
would dominate the runtime, so tables are cached on counts quantized to a
configurable step; the trigger counts of the overall population are fixed
by design and the remaining six counts move the correlations only slowly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log, sqrt

import numpy as np
from scipy.special import ndtr

from .boundaries import BoundaryTable, SubsetAnalysisBounds, full_table
from .closure import run_trial
from .design import DesignSpec, EventCountMatrix
from .correlation import corr_from_overlap

__all__ = ["Scenario", "MethodRates", "SimResult", "simulate",
           "logrank_z", "bonferroni_view"]

# biomarker cells, in the fixed order (1+2-, 1-2+, 1+2+, 1-2-)
_CELLS_POP1 = (0, 2)
_CELLS_POP2 = (1, 2)


@dataclass(frozen=True)
class Scenario:
    """Data-generating configuration for one simulation case.

    Hazard ratios and prevalences are per biomarker cell in the order
    (1+2-, 1-2+, 1+2+, 1-2-).  Control survival is exponential with
    ``control_hazard``; enrollment is uniform over ``enroll_duration``
    months; randomization is 1:1.
    """

    hazard_ratios: tuple[float, float, float, float]
    prevalences: tuple[float, float, float, float]
    control_hazard: float = log(2) / 12.0
    enroll_duration: float = 12.0
    n_subjects: int = 650
    interim_events: int = 225
    final_events: int = 450
    n_replications: int = 10000
    seed: int = 20260826

    def validate(self) -> list[str]:
        problems = []
        if any(p < 0 for p in self.prevalences):
            problems.append("prevalences must be nonnegative")
        if abs(sum(self.prevalences) - 1.0) > 1e-9:
            problems.append("prevalences must sum to 1")
        if not self.interim_events < self.final_events:
            problems.append("interim trigger must be below the final target")
        if any(h <= 0 for h in self.hazard_ratios):
            problems.append("hazard ratios must be positive")
        if self.control_hazard <= 0:
            problems.append("control hazard must be positive")
        return problems


@dataclass
class MethodRates:
    """Rejection rates for one testing method with Monte-Carlo SEs."""

    rej: dict[int, float]
    rej_any: float
    se: dict[int, float]
    se_any: float


@dataclass
class SimResult:
    bonferroni: MethodRates
    parametric: MethodRates
    n_replications: int
    n_redrawn: int = 0
    n_tables: int = 0


def logrank_z(time, event, treated, strata=None) -> float:
    """One-sided logrank Z, positive favoring the experimental arm.

    ``time`` are follow-up times, ``event`` marks observed events,
    ``treated`` marks the experimental arm.  With ``strata`` the O-E and
    variance contributions are accumulated within stratum and pooled.
    """
    time = np.asarray(time, dtype=float)
    event = np.asarray(event, dtype=bool)
    treated = np.asarray(treated, dtype=bool)
    if strata is None:
        oe, var = _logrank_oe_var(time, event, treated)
    else:
        strata = np.asarray(strata)
        oe = var = 0.0
        for s in np.unique(strata):
            sel = strata == s
            o, v = _logrank_oe_var(time[sel], event[sel], treated[sel])
            oe += o
            var += v
    if var <= 0.0:
        return 0.0
    # oe is (observed - expected) treated events; negative means benefit
    return float(-oe / sqrt(var))


def _logrank_oe_var(time, event, treated) -> tuple[float, float]:
    order = np.argsort(time, kind="stable")
    event = event[order]
    treated = treated[order]
    n = time.size
    if n == 0 or not event.any():
        return 0.0, 0.0
    # continuous times: ties have negligible probability, handled as units
    at_risk = n - np.arange(n)
    at_risk_trt = np.cumsum(treated[::-1])[::-1]
    y = at_risk[event].astype(float)
    y1 = at_risk_trt[event].astype(float)
    oe = float(np.sum(treated[event]) - np.sum(y1 / y))
    var = float(np.sum((y1 / y) * (1.0 - y1 / y)))
    return oe, var


def _quantize(counts, step, lo, hi):
    """Round to the step grid, clipped into the feasible range."""
    q = int(round(counts / step)) * step
    return int(min(max(q, lo), hi))


def _count_key(c1, c2, step):
    n11, n21, o1 = c1
    n12, n22, o2 = c2
    n11 = _quantize(n11, step, step, 10 ** 6)
    n21 = _quantize(n21, step, step, 10 ** 6)
    o1 = _quantize(o1, step, 0, min(n11, n21))
    n12 = _quantize(n12, step, n11, 10 ** 6)
    n22 = _quantize(n22, step, n21, 10 ** 6)
    o2 = _quantize(o2, step, o1, min(n12, n22))
    return n11, n21, o1, n12, n22, o2


def bonferroni_view(table: BoundaryTable) -> BoundaryTable:
    """Table whose bounds are the weighted-Bonferroni comparator columns."""
    out = BoundaryTable(table.m, table.n_analyses)
    for key, e in table.entries.items():
        out.entries[key] = SubsetAnalysisBounds(
            members=e.members, p_bounds=dict(e.comparator),
            comparator=dict(e.comparator), alpha_target=e.alpha_target,
            alpha_star=None, inflation=1.0)
    return out


class _TableCache:
    """Boundary tables keyed on quantized realized event counts."""

    def __init__(self, spec: DesignSpec, interim: int, final: int,
                 step: int, mvn_tol: float):
        self.spec = spec
        self.interim = interim
        self.final = final
        self.step = step
        self.mvn_tol = mvn_tol
        self.tables: dict[tuple, tuple[BoundaryTable, BoundaryTable]] = {}

    def get(self, c1, c2):
        key = _count_key(c1, c2, self.step)
        hit = self.tables.get(key)
        if hit is not None:
            return hit
        n11, n21, o1, n12, n22, o2 = key
        events = EventCountMatrix(
            marginal=((n11, n12), (n21, n22),
                      (self.interim, self.final)),
            overlap={(1, 2): (o1, o2), (1, 3): (n11, n12),
                     (2, 3): (n21, n22)})
        spec = DesignSpec(
            m=self.spec.m, n_analyses=self.spec.n_analyses,
            alpha=self.spec.alpha, weighting=self.spec.weighting,
            events=events, spending=self.spec.spending,
            correlation_partition=self.spec.correlation_partition)
        table = full_table(spec, corr=corr_from_overlap(events),
                           mvn_tol=self.mvn_tol)
        pair = (table, bonferroni_view(table))
        self.tables[key] = pair
        return pair


def _one_replication(scn: Scenario, rng, stratified: bool):
    """Generate one trial; returns (p-values per analysis, counts per cut)."""
    n = scn.n_subjects
    cell = rng.choice(4, size=n, p=scn.prevalences)
    treated = rng.integers(0, 2, size=n).astype(bool)
    hr = np.asarray(scn.hazard_ratios)[cell]
    rate = scn.control_hazard * np.where(treated, hr, 1.0)
    enroll = rng.uniform(0.0, scn.enroll_duration, n)
    tte = rng.exponential(1.0 / rate)
    calendar = enroll + tte

    order = np.sort(calendar)
    cut_times = (order[scn.interim_events - 1], order[scn.final_events - 1])

    in_pop = (np.isin(cell, _CELLS_POP1), np.isin(cell, _CELLS_POP2),
              np.ones(n, dtype=bool))
    p_by_analysis, counts = [], []
    for cut in cut_times:
        enrolled = enroll < cut
        obs = np.minimum(tte, cut - enroll)
        ev = calendar <= cut
        pvals = {}
        for h, pop in enumerate(in_pop, start=1):
            sel = pop & enrolled
            z = logrank_z(obs[sel], ev[sel], treated[sel],
                          strata=cell[sel] if stratified else None)
            pvals[h] = float(1.0 - ndtr(z))
        p_by_analysis.append(pvals)
        counts.append((int(np.sum(ev & in_pop[0])),
                       int(np.sum(ev & in_pop[1])),
                       int(np.sum(ev & (cell == 2)))))
    return p_by_analysis, counts


def _run_range(scenario: Scenario, design: DesignSpec, lo: int, hi: int,
               stratified: bool, quantize_step: int, mvn_tol: float,
               progress=None, cache: "_TableCache | None" = None):
    """Run replications [lo, hi); substream seeding makes batching neutral."""
    if cache is None:
        cache = _TableCache(design, scenario.interim_events,
                            scenario.final_events, quantize_step, mvn_tol)
    rej_p = np.zeros((hi - lo, 3), dtype=bool)
    rej_b = np.zeros((hi - lo, 3), dtype=bool)
    for r in range(lo, hi):
        rng = np.random.default_rng(np.random.SeedSequence(
            entropy=scenario.seed, spawn_key=(r,)))
        p_by_analysis, counts = _one_replication(scenario, rng, stratified)
        table, bonf = cache.get(counts[0], counts[1])
        sp = run_trial(table, p_by_analysis)
        sb = run_trial(bonf, p_by_analysis)
        for i in sp.elementary:
            rej_p[r - lo, i - 1] = True
        for i in sb.elementary:
            rej_b[r - lo, i - 1] = True
        if progress is not None and (r + 1 - lo) % 1000 == 0:
            progress(r + 1 - lo, hi - lo, len(cache.tables))
    return rej_p, rej_b, len(cache.tables)


def simulate(scenario: Scenario, design: DesignSpec, stratified: bool = False,
             quantize_step: int = 16, mvn_tol: float = 5e-5,
             threads: int = 1, progress=None, cache=None) -> SimResult:
    """Monte-Carlo rejection rates for both testing methods.

    ``design`` must be the three-population layout (populations 1 and 2
    overlapping, nested in population 3); its spending plan drives both
    the parametric and the Bonferroni bounds, and its event counts are
    replaced per replication by the realized ones.  Replications are
    seeded from independent substreams so results do not depend on
    execution order, batching, or ``threads``.
    """
    problems = scenario.validate()
    if problems:
        raise ValueError("; ".join(problems))
    if design.m != 3:
        raise ValueError("simulator supports the three-population layout only")
    if scenario.n_subjects < scenario.final_events:
        raise ValueError("cohort cannot reach the final event target")

    reps = scenario.n_replications
    if threads <= 1:
        rej_p, rej_b, n_tables = _run_range(
            scenario, design, 0, reps, stratified, quantize_step, mvn_tol,
            progress, cache=cache)
    else:
        from concurrent.futures import ProcessPoolExecutor
        edges = np.linspace(0, reps, threads + 1).astype(int)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                _run_range, [scenario] * threads, [design] * threads,
                edges[:-1], edges[1:], [stratified] * threads,
                [quantize_step] * threads, [mvn_tol] * threads))
        rej_p = np.concatenate([p[0] for p in parts])
        rej_b = np.concatenate([p[1] for p in parts])
        n_tables = max(p[2] for p in parts)

    def rates(mat) -> MethodRates:
        p = mat.mean(axis=0)
        any_r = mat.any(axis=1).mean()
        se = np.sqrt(p * (1 - p) / reps)
        return MethodRates(
            rej={i + 1: float(p[i]) for i in range(3)},
            rej_any=float(any_r),
            se={i + 1: float(se[i]) for i in range(3)},
            se_any=float(sqrt(any_r * (1 - any_r) / reps)))

    return SimResult(bonferroni=rates(rej_b), parametric=rates(rej_p),
                     n_replications=reps, n_tables=n_tables)
