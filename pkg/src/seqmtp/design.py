"""Declarative trial design description and validation.

A design bundles the hypotheses, the multiplicity weighting strategy, the
planned event counts (including pairwise overlaps), and the alpha-spending
plan.  Everything downstream (correlation construction, boundary solving,
closed testing, simulation) consumes a validated :class:`DesignSpec`.

Hypotheses are indexed 1..m.  Subsets of hypotheses are encoded as
bitmasks with bit (i-1) set for hypothesis i; iteration order over the
closed family is descending cardinality, then numeric, so output files are
deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "WeightScheme", "WeightingStrategy", "EventCountMatrix", "SpendMethod",
    "SpendingTimePolicy", "SpendingPlan", "DesignSpec", "Violation",
    "validate", "subset_weights", "all_subsets", "subset_members",
    "mask_of", "load_design", "parse_design",
]

MAX_HYPOTHESES = 16


def _as_fraction(x) -> Fraction:
    """Exact rational for decimal-literal inputs (0.3 -> 3/10)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(str(float(x)))


class WeightScheme(str, Enum):
    GRAPH = "graph"
    BONFERRONI_HOLM = "bonferroni-holm"


@dataclass(frozen=True)
class WeightingStrategy:
    """Initial hypothesis weights plus a transition matrix.

    Under the graph scheme, subset weights come from sequentially removing
    hypotheses outside the subset and propagating their weight along the
    transition matrix.  Under the Bonferroni-Holm scheme, subset weights
    are the initial weights renormalized over the subset and the
    transition matrix is ignored.
    """

    initial_weights: tuple[Fraction, ...]
    transition: tuple[tuple[Fraction, ...], ...] = ()
    scheme: WeightScheme = WeightScheme.GRAPH

    @staticmethod
    def graph(weights: Sequence, transition: Sequence[Sequence]) -> "WeightingStrategy":
        return WeightingStrategy(
            tuple(_as_fraction(w) for w in weights),
            tuple(tuple(_as_fraction(g) for g in row) for row in transition),
            WeightScheme.GRAPH)

    @staticmethod
    def bonferroni_holm(weights: Sequence) -> "WeightingStrategy":
        return WeightingStrategy(
            tuple(_as_fraction(w) for w in weights), (),
            WeightScheme.BONFERRONI_HOLM)

    @property
    def m(self) -> int:
        return len(self.initial_weights)


@dataclass(frozen=True)
class EventCountMatrix:
    """Cumulative event counts per hypothesis and pairwise overlaps.

    ``marginal[i-1][k-1]`` is the event count backing hypothesis i at
    analysis k; ``overlap[(i, j)][k-1]`` (i < j) counts events included in
    both test statistics at analysis k.  Counts may be non-integral so
    expected counts (prevalence times total) can drive design-stage
    correlations.
    """

    marginal: tuple[tuple[float, ...], ...]
    overlap: dict[tuple[int, int], tuple[float, ...]] = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.marginal)

    @property
    def n_analyses(self) -> int:
        return len(self.marginal[0]) if self.marginal else 0

    def count(self, i: int, k: int) -> float:
        return self.marginal[i - 1][k - 1]

    def joint_count(self, i: int, k: int, ip: int, kp: int) -> float:
        """Events included in both Z_{ik} and Z_{i'k'}."""
        kk = min(k, kp)
        if i == ip:
            return self.marginal[i - 1][kk - 1]
        key = (min(i, ip), max(i, ip))
        if key not in self.overlap:
            raise KeyError(f"no overlap counts for hypothesis pair {key}")
        return self.overlap[key][kk - 1]


class SpendMethod(str, Enum):
    FIXED_LEVELS = "fixed"          # pre-specified cumulative levels per analysis
    COMMON = "common"               # one spending function for the whole family
    PER_HYPOTHESIS = "per-hypothesis"  # each hypothesis spends its own share


class SpendingTimePolicy(str, Enum):
    MIN_INFORMATION_FRACTION = "min-information-fraction"
    PER_HYPOTHESIS_INFORMATION_FRACTION = "per-hypothesis-information-fraction"
    FIXED_SCHEDULE = "fixed-schedule"
    MIN_PLANNED_ACTUAL = "min-planned-actual"


@dataclass(frozen=True)
class SpendingPlan:
    method: SpendMethod
    family: str | None = None            # "hsd" | "ldof" | "ldpocock" | "power" | "fixed"
    parameter: float | None = None
    levels: tuple[float, ...] = ()       # FIXED_LEVELS cumulative alpha per analysis
    per_hypothesis_family: tuple[tuple[str, float | None], ...] = ()
    time_policy: SpendingTimePolicy = SpendingTimePolicy.MIN_INFORMATION_FRACTION
    schedule: tuple[float, ...] = ()     # FIXED_SCHEDULE spending times
    planned_final_counts: tuple[float, ...] = ()


@dataclass(frozen=True)
class DesignSpec:
    m: int
    n_analyses: int
    alpha: float
    weighting: WeightingStrategy
    events: EventCountMatrix
    spending: SpendingPlan
    hypothesis_names: tuple[str, ...] = ()
    correlation_partition: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        if not self.hypothesis_names:
            object.__setattr__(
                self, "hypothesis_names",
                tuple(f"H{i}" for i in range(1, self.m + 1)))


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self):
        return f"[{self.code}] {self.message}"


# ---------------------------------------------------------------------------
# subset bitmask helpers

def mask_of(members: Sequence[int]) -> int:
    mask = 0
    for i in members:
        mask |= 1 << (i - 1)
    return mask


def subset_members(mask: int) -> tuple[int, ...]:
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


def all_subsets(m: int) -> Iterator[int]:
    """Nonempty subsets of 1..m, descending cardinality then numeric."""
    if m > MAX_HYPOTHESES:
        raise ValueError(
            f"closed family enumeration limited to m <= {MAX_HYPOTHESES}, got {m}")
    masks = sorted(range(1, 1 << m), key=lambda s: (-bin(s).count("1"), s))
    return iter(masks)


# ---------------------------------------------------------------------------
# validation

def validate(spec: DesignSpec) -> list[Violation]:
    """Collect every invariant violation; empty list means acceptable.

    Violations are data, not exceptions: downstream operations expect a
    spec for which this returns an empty list.
    """
    bad: list[Violation] = []
    m, K = spec.m, spec.n_analyses
    if m < 1:
        bad.append(Violation("m-range", "need at least one hypothesis"))
    if m > MAX_HYPOTHESES:
        bad.append(Violation(
            "m-range", f"closed testing capped at m <= {MAX_HYPOTHESES}"))
    if K < 1:
        bad.append(Violation("analyses-range", "need at least one analysis"))
    if not (0.0 < spec.alpha < 0.5):
        bad.append(Violation("alpha-range", f"alpha {spec.alpha} not in (0, 0.5)"))

    w = spec.weighting
    if w.m != m:
        bad.append(Violation("weights-shape", f"{w.m} weights for m={m}"))
    else:
        if any(wi <= 0 for wi in w.initial_weights):
            bad.append(Violation("weights-positive", "initial weights must be > 0"))
        if sum(w.initial_weights) > 1:
            bad.append(Violation("weights-sum", "initial weights sum above 1"))
        if w.scheme is WeightScheme.GRAPH:
            g = w.transition
            if len(g) != m or any(len(row) != m for row in g):
                bad.append(Violation("transition-shape", "transition matrix must be m x m"))
            else:
                for i, row in enumerate(g):
                    if any(x < 0 or x > 1 for x in row):
                        bad.append(Violation(
                            "transition-range", f"row {i + 1} entries outside [0, 1]"))
                    if row[i] != 0:
                        bad.append(Violation(
                            "transition-diagonal", f"g[{i + 1}][{i + 1}] must be 0"))
                    if sum(row) > 1:
                        bad.append(Violation(
                            "transition-rowsum", f"row {i + 1} sums above 1"))

    ev = spec.events
    if ev.m != m or ev.n_analyses != K:
        bad.append(Violation(
            "events-shape",
            f"event matrix is {ev.m} x {ev.n_analyses}, expected {m} x {K}"))
    else:
        for i in range(1, m + 1):
            row = ev.marginal[i - 1]
            if any(x < 0 for x in row):
                bad.append(Violation("events-negative", f"negative count for H{i}"))
            if any(b <= a for a, b in zip(row, row[1:])):
                bad.append(Violation(
                    "non-monotone event counts",
                    f"counts for H{i} not strictly increasing across analyses"))
        for (i, j), counts in ev.overlap.items():
            if not (1 <= i < j <= m):
                bad.append(Violation("overlap-pair", f"bad overlap pair ({i}, {j})"))
                continue
            if len(counts) != K:
                bad.append(Violation(
                    "overlap-shape", f"overlap ({i}, {j}) needs {K} counts"))
                continue
            if any(b < a for a, b in zip(counts, counts[1:])):
                bad.append(Violation(
                    "overlap-monotone", f"overlap ({i}, {j}) decreasing"))
            for k in range(1, K + 1):
                cap = min(ev.count(i, k), ev.count(j, k))
                if counts[k - 1] > cap + 1e-9:
                    bad.append(Violation(
                        "overlap exceeds marginal",
                        f"overlap ({i}, {j}) at analysis {k} is "
                        f"{counts[k - 1]}, above min marginal {cap}"))

    sp = spec.spending
    if sp.method is SpendMethod.FIXED_LEVELS:
        lv = sp.levels
        if len(lv) != K:
            bad.append(Violation("spend-levels", f"need {K} cumulative levels"))
        else:
            if any(b <= a for a, b in zip(lv, lv[1:])) or lv[0] <= 0:
                bad.append(Violation(
                    "spend-levels", "cumulative levels must be strictly increasing"))
            if abs(lv[-1] - spec.alpha) > 1e-12:
                bad.append(Violation(
                    "spend-levels", f"final level {lv[-1]} must equal alpha"))
    else:
        if sp.family is None and not sp.per_hypothesis_family:
            bad.append(Violation("spend-family", "spending function family required"))
        if (sp.method is SpendMethod.PER_HYPOTHESIS and sp.per_hypothesis_family
                and len(sp.per_hypothesis_family) != m):
            bad.append(Violation(
                "spend-family", "per-hypothesis families must have m entries"))
    if sp.time_policy is SpendingTimePolicy.FIXED_SCHEDULE:
        sc = sp.schedule
        if len(sc) != K or any(not 0 < t <= 1 for t in sc) or \
                any(b <= a for a, b in zip(sc, sc[1:])) or (sc and sc[-1] != 1):
            bad.append(Violation(
                "spend-schedule",
                "fixed schedule needs K increasing times in (0, 1] ending at 1"))
    if sp.planned_final_counts:
        if len(sp.planned_final_counts) != m:
            bad.append(Violation("planned-counts", "need m planned final counts"))
        elif any(x <= 0 for x in sp.planned_final_counts):
            bad.append(Violation("planned-counts", "planned final counts must be > 0"))

    part = spec.correlation_partition
    if part:
        seen: set[int] = set()
        for block in part:
            for i in block:
                if i in seen:
                    bad.append(Violation("partition-disjoint", f"H{i} in two blocks"))
                seen.add(i)
        if seen != set(range(1, m + 1)):
            bad.append(Violation("partition-cover", "partition must cover 1..m"))
    return bad


# ---------------------------------------------------------------------------
# subset weights

def _graph_weights(weights: list[Fraction], trans: list[list[Fraction]],
                   drop_order: Sequence[int]) -> dict[int, Fraction]:
    """Remove hypotheses in drop_order, propagating weight along the graph."""
    live = {i: weights[i - 1] for i in range(1, len(weights) + 1)}
    g = {(i, j): trans[i - 1][j - 1]
         for i in range(1, len(weights) + 1)
         for j in range(1, len(weights) + 1)}
    for drop in drop_order:
        others = [i for i in live if i != drop]
        for i in others:
            live[i] = live[i] + live[drop] * g[(drop, i)]
        new_g = {}
        for i in others:
            for j in others:
                if i == j:
                    new_g[(i, j)] = Fraction(0)
                    continue
                denom = 1 - g[(i, drop)] * g[(drop, i)]
                if denom > 0:
                    new_g[(i, j)] = (g[(i, j)] + g[(i, drop)] * g[(drop, j)]) / denom
                else:
                    new_g[(i, j)] = Fraction(0)
        del live[drop]
        g = new_g
    return live


def subset_weights(weighting: WeightingStrategy, subset) -> dict[int, Fraction]:
    """Weights w_i(J) for the intersection hypothesis indexed by ``subset``.

    ``subset`` may be a bitmask or an iterable of 1-based indices.  The
    graph scheme result is independent of removal order; the canonical
    ascending order is used here.
    """
    if isinstance(subset, int):
        members = subset_members(subset)
    else:
        members = tuple(sorted(set(subset)))
    if not members:
        raise ValueError("subset must be nonempty")
    if members[-1] > weighting.m:
        raise ValueError(f"hypothesis {members[-1]} outside 1..{weighting.m}")
    if weighting.scheme is WeightScheme.BONFERRONI_HOLM:
        total = sum(weighting.initial_weights[i - 1] for i in members)
        return {i: weighting.initial_weights[i - 1] / total for i in members}
    dropped = [i for i in range(1, weighting.m + 1) if i not in members]
    return _graph_weights(list(weighting.initial_weights),
                          [list(r) for r in weighting.transition], dropped)


# ---------------------------------------------------------------------------
# design file parsing

_TOP_KEYS = {"alpha", "hypotheses", "analyses", "weights", "transition",
             "scheme", "events", "spending", "partition"}
_EVENT_KEYS = {"marginal", "overlap", "arm_population"}
_SPEND_KEYS = {"method", "family", "parameter", "levels", "per_hypothesis",
               "time_policy", "schedule", "planned_final_counts"}


class DesignError(ValueError):
    """Raised when a design document violates the file schema."""


def parse_design(doc: dict) -> DesignSpec:
    """Build a DesignSpec from a JSON-compatible tree; unknown keys rejected."""
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise DesignError(f"unknown top-level keys: {sorted(unknown)}")
    for key in ("alpha", "hypotheses", "analyses", "weights", "events", "spending"):
        if key not in doc:
            raise DesignError(f"missing required key '{key}'")

    names = tuple(str(h) for h in doc["hypotheses"])
    m = len(names)
    K = int(doc["analyses"])
    scheme = WeightScheme(doc.get("scheme", "graph"))
    if scheme is WeightScheme.GRAPH:
        if "transition" not in doc:
            raise DesignError("graph scheme requires a 'transition' matrix")
        weighting = WeightingStrategy.graph(doc["weights"], doc["transition"])
    else:
        weighting = WeightingStrategy.bonferroni_holm(doc["weights"])

    evdoc = doc["events"]
    unknown = set(evdoc) - _EVENT_KEYS
    if unknown:
        raise DesignError(f"unknown events keys: {sorted(unknown)}")
    if "arm_population" in evdoc:
        from .correlation import events_from_arm_population
        events = events_from_arm_population(evdoc["arm_population"], m, K)
    else:
        marginal = tuple(tuple(float(x) for x in row) for row in evdoc["marginal"])
        overlap = {}
        for entry in evdoc.get("overlap", []):
            i, j = entry["pair"]
            i, j = int(i), int(j)
            overlap[(min(i, j), max(i, j))] = tuple(float(x) for x in entry["counts"])
        events = EventCountMatrix(marginal, overlap)

    spdoc = doc["spending"]
    unknown = set(spdoc) - _SPEND_KEYS
    if unknown:
        raise DesignError(f"unknown spending keys: {sorted(unknown)}")
    method = SpendMethod(spdoc["method"])
    per_h = tuple(
        (str(f["family"]), f.get("parameter"))
        for f in spdoc.get("per_hypothesis", []))
    planned = tuple(float(x) for x in spdoc.get(
        "planned_final_counts", [row[-1] for row in events.marginal]))
    spending = SpendingPlan(
        method=method,
        family=spdoc.get("family"),
        parameter=spdoc.get("parameter"),
        levels=tuple(float(x) for x in spdoc.get("levels", [])),
        per_hypothesis_family=per_h,
        time_policy=SpendingTimePolicy(spdoc.get(
            "time_policy", "min-information-fraction")),
        schedule=tuple(float(x) for x in spdoc.get("schedule", [])),
        planned_final_counts=planned)

    partition = tuple(tuple(int(i) for i in block)
                      for block in doc.get("partition", []))
    return DesignSpec(m=m, n_analyses=K, alpha=float(doc["alpha"]),
                      weighting=weighting, events=events, spending=spending,
                      hypothesis_names=names, correlation_partition=partition)


def load_design(path) -> DesignSpec:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DesignError(f"design file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DesignError("design document must be a JSON object")
    return parse_design(doc)
