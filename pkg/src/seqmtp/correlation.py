"""Complete correlation structure of all m*K test statistics.

The correlation between the statistics for hypothesis i at analysis k and
hypothesis i' at analysis k' is the event count shared by the two tests
divided by the geometric mean of their marginal counts.  This covers
overlapping populations, shared control arms, and the combined multi-arm
multi-population case, all of which reduce to the same pairwise-overlap
event bookkeeping.

Index layout is fixed: statistic (i, k) maps to row (k - 1) * m + (i - 1),
i.e. analysis-major blocks of m hypotheses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import EventCountMatrix

__all__ = [
    "CorrelationMatrix", "ArmPopulationCounts", "corr_from_overlap",
    "corr_shared_control", "corr_multiarm_multipop",
    "events_from_arm_population", "events_from_prevalence", "stat_index",
]

_PSD_HARD = -1e-8   # beyond this the input is treated as inconsistent
_PSD_SOFT = -1e-10  # eigenvalues above this are clamped silently


def stat_index(i: int, k: int, m: int) -> int:
    """Row index of statistic (hypothesis i, analysis k)."""
    return (k - 1) * m + (i - 1)


@dataclass(frozen=True)
class CorrelationMatrix:
    """(m*K) x (m*K) correlation of all test statistics."""

    matrix: np.ndarray
    m: int
    n_analyses: int

    def entry(self, i: int, k: int, ip: int, kp: int) -> float:
        return float(self.matrix[stat_index(i, k, self.m),
                                 stat_index(ip, kp, self.m)])

    def submatrix(self, pairs) -> np.ndarray:
        """Correlation among the listed (hypothesis, analysis) pairs."""
        idx = [stat_index(i, k, self.m) for i, k in pairs]
        return self.matrix[np.ix_(idx, idx)]

    def labels(self) -> list[str]:
        return [f"H{i}:A{k}"
                for k in range(1, self.n_analyses + 1)
                for i in range(1, self.m + 1)]


def _check_psd(mat: np.ndarray) -> np.ndarray:
    evmin = float(np.linalg.eigvalsh(mat).min())
    if evmin < _PSD_HARD:
        raise ValueError(
            f"correlation matrix far from positive semidefinite "
            f"(min eigenvalue {evmin:.3e}); event counts are inconsistent")
    if evmin < _PSD_SOFT:
        # rounding-level repair: clamp and renormalize the diagonal
        w, v = np.linalg.eigh(mat)
        w = np.clip(w, 0.0, None)
        mat = (v * w) @ v.T
        d = np.sqrt(np.diag(mat))
        mat = mat / np.outer(d, d)
        np.fill_diagonal(mat, 1.0)
    return mat


def corr_from_overlap(events: EventCountMatrix) -> CorrelationMatrix:
    """Correlation of all statistics from marginal and overlap counts."""
    m, K = events.m, events.n_analyses
    for i in range(1, m + 1):
        for k in range(1, K + 1):
            if events.count(i, k) <= 0:
                raise ValueError(f"zero event count for H{i} at analysis {k}")
    dim = m * K
    mat = np.eye(dim)
    pairs = [(i, k) for k in range(1, K + 1) for i in range(1, m + 1)]
    for a in range(dim):
        i, k = pairs[a]
        for b in range(a + 1, dim):
            ip, kp = pairs[b]
            rho = events.joint_count(i, k, ip, kp) / np.sqrt(
                events.count(i, k) * events.count(ip, kp))
            mat[a, b] = mat[b, a] = rho
    return CorrelationMatrix(_check_psd(mat), m, K)


@dataclass(frozen=True)
class ArmPopulationCounts:
    """Event counts per arm and population, cumulative across analyses.

    ``counts[arm][population][k-1]``; arm 0 is the shared control.
    ``population_overlap[(j, j')][arm][k-1]`` counts events of the arm in
    the intersection of populations j and j' (unordered pairs, j < j').
    A single-population layout needs no overlap entries.
    """

    counts: tuple[tuple[tuple[float, ...], ...], ...]
    population_overlap: dict[tuple[int, int], tuple[tuple[float, ...], ...]] = None

    def __post_init__(self):
        if self.population_overlap is None:
            object.__setattr__(self, "population_overlap", {})

    @property
    def n_arms(self) -> int:
        return len(self.counts)

    @property
    def n_populations(self) -> int:
        return len(self.counts[0])

    @property
    def n_analyses(self) -> int:
        return len(self.counts[0][0])

    def arm_pop(self, arm: int, pop: int, k: int) -> float:
        return self.counts[arm][pop - 1][k - 1]

    def arm_overlap(self, arm: int, j: int, jp: int, k: int) -> float:
        if j == jp:
            return self.arm_pop(arm, j, k)
        key = (min(j, jp), max(j, jp))
        if key not in self.population_overlap:
            raise KeyError(f"missing population overlap counts for pair {key}")
        return self.population_overlap[key][arm][k - 1]

    @staticmethod
    def nested(counts, order=None) -> "ArmPopulationCounts":
        """Build counts for populations nested along ``order`` (inner first).

        Overlap of two nested populations is the inner population, so the
        overlap table is filled from the marginal counts.
        """
        counts = tuple(tuple(tuple(float(x) for x in pop) for pop in arm)
                       for arm in counts)
        npop = len(counts[0])
        order = list(order) if order is not None else list(range(1, npop + 1))
        rank = {p: r for r, p in enumerate(order)}
        overlap = {}
        for j in range(1, npop + 1):
            for jp in range(j + 1, npop + 1):
                inner = j if rank[j] < rank[jp] else jp
                overlap[(j, jp)] = tuple(arm[inner - 1] for arm in counts)
        return ArmPopulationCounts(counts, overlap)


def _events_from_arms(arm_counts: ArmPopulationCounts,
                      hypotheses: list[tuple[int, int]]) -> EventCountMatrix:
    """Reduce arm/population counts to hypothesis-level marginals/overlaps.

    Each hypothesis is (experimental arm, population) versus the shared
    control.  Same-arm pairs share (control + arm) events in the
    population intersection; different-arm pairs share only the control
    events there.
    """
    K = arm_counts.n_analyses
    marginal = []
    for arm, pop in hypotheses:
        marginal.append(tuple(
            arm_counts.arm_pop(0, pop, k) + arm_counts.arm_pop(arm, pop, k)
            for k in range(1, K + 1)))
    overlap = {}
    for a in range(len(hypotheses)):
        arm_a, pop_a = hypotheses[a]
        for b in range(a + 1, len(hypotheses)):
            arm_b, pop_b = hypotheses[b]
            shared = []
            for k in range(1, K + 1):
                n = arm_counts.arm_overlap(0, pop_a, pop_b, k)
                if arm_a == arm_b:
                    n += arm_counts.arm_overlap(arm_a, pop_a, pop_b, k)
                shared.append(n)
            overlap[(a + 1, b + 1)] = tuple(shared)
    return EventCountMatrix(tuple(marginal), overlap)


def corr_shared_control(arm_counts: ArmPopulationCounts) -> CorrelationMatrix:
    """Correlation for multiple experimental arms versus a shared control.

    Single population; hypothesis i compares arm i to control, so the
    shared events between different hypotheses are the control events.
    """
    if arm_counts.n_arms < 3:
        raise ValueError("need a control arm and at least two experimental arms")
    if arm_counts.n_populations != 1:
        raise ValueError("corr_shared_control expects a single population")
    hypotheses = [(arm, 1) for arm in range(1, arm_counts.n_arms)]
    return corr_from_overlap(_events_from_arms(arm_counts, hypotheses))


def corr_multiarm_multipop(arm_counts: ArmPopulationCounts,
                           hypotheses) -> CorrelationMatrix:
    """Correlation for hypotheses spanning arms and populations.

    ``hypotheses`` lists (experimental arm, population) pairs, one per
    hypothesis in index order.  Reduces to :func:`corr_from_overlap` with
    one arm and to :func:`corr_shared_control` with one population.
    """
    hypotheses = [(int(a), int(p)) for a, p in hypotheses]
    return corr_from_overlap(_events_from_arms(arm_counts, hypotheses))


def events_from_arm_population(doc: dict, m: int, K: int) -> EventCountMatrix:
    """Design-file form of arm/population counts.

    Expected keys: ``counts`` (arms x populations x analyses, arm 0 the
    control), ``hypotheses`` (list of [arm, population]), and either
    ``nested_order`` (populations from innermost outward) or
    ``population_overlap`` entries ({"pair": [j, j'], "counts": arms x K}).
    """
    unknown = set(doc) - {"counts", "hypotheses", "nested_order",
                          "population_overlap"}
    if unknown:
        raise ValueError(f"unknown arm_population keys: {sorted(unknown)}")
    hyps = [(int(a), int(p)) for a, p in doc["hypotheses"]]
    if len(hyps) != m:
        raise ValueError(f"{len(hyps)} hypothesis mappings for m={m}")
    if "nested_order" in doc:
        arm_counts = ArmPopulationCounts.nested(
            doc["counts"], doc["nested_order"])
    else:
        overlap = {}
        for entry in doc.get("population_overlap", []):
            j, jp = (int(x) for x in entry["pair"])
            overlap[(min(j, jp), max(j, jp))] = tuple(
                tuple(float(x) for x in arm) for arm in entry["counts"])
        arm_counts = ArmPopulationCounts(
            tuple(tuple(tuple(float(x) for x in pop) for pop in arm)
                  for arm in doc["counts"]), overlap)
    events = _events_from_arms(arm_counts, hyps)
    if events.n_analyses != K:
        raise ValueError(f"arm counts cover {events.n_analyses} analyses, expected {K}")
    return events


def events_from_prevalence(cell_prevalences, totals) -> EventCountMatrix:
    """Expected event counts for the two-biomarker overlapping layout.

    ``cell_prevalences`` are (p_1+2-, p_1-2+, p_1+2+, p_1-2-) summing to 1;
    ``totals`` are overall-population events per analysis.  Under equal
    censoring, expected events in a subpopulation are proportional to its
    prevalence, which is the construction behind design-stage simulation
    correlations.
    """
    p10, p01, p11, p00 = (float(x) for x in cell_prevalences)
    if abs(p10 + p01 + p11 + p00 - 1.0) > 1e-9:
        raise ValueError("cell prevalences must sum to 1")
    totals = tuple(float(x) for x in totals)
    f1, f2 = p10 + p11, p01 + p11
    marginal = (
        tuple(f1 * n for n in totals),
        tuple(f2 * n for n in totals),
        totals,
    )
    overlap = {
        (1, 2): tuple(p11 * n for n in totals),
        (1, 3): tuple(f1 * n for n in totals),
        (2, 3): tuple(f2 * n for n in totals),
    }
    return EventCountMatrix(marginal, overlap)
