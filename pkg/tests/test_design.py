"""Design model: weights, subsets, validation, file parsing."""

from fractions import Fraction as F
from itertools import permutations

import pytest

from seqmtp.design import (DesignError, EventCountMatrix, SpendMethod,
                           SpendingPlan, SpendingTimePolicy, WeightScheme,
                           WeightingStrategy, all_subsets, mask_of,
                           parse_design, subset_members, subset_weights,
                           validate)
from tests.conftest import DESIGNS


def _ex1_graph():
    return WeightingStrategy.graph(
        [F(3, 10), F(3, 10), F(2, 5)],
        [[0, 0, 1], [0, 0, 1], [F(1, 2), F(1, 2), 0]])


# ---------------------------------------------------------------------------
# subset enumeration

def test_all_subsets_order_and_count():
    masks = list(all_subsets(3))
    assert len(masks) == 7
    assert masks[0] == 0b111                       # complete intersection first
    sizes = [bin(m).count("1") for m in masks]
    assert sizes == sorted(sizes, reverse=True)    # descending cardinality


def test_mask_roundtrip():
    for members in [(1,), (2, 3), (1, 2, 3), (1, 4)]:
        assert subset_members(mask_of(members)) == members


# ---------------------------------------------------------------------------
# graph weights (Example 1, Table 5) and BH weights (Table A2)

def test_graph_subset_weights_match_paper():
    wt = _ex1_graph()
    assert subset_weights(wt, (1, 2, 3)) == {1: F(3, 10), 2: F(3, 10), 3: F(2, 5)}
    assert subset_weights(wt, (1, 2)) == {1: F(1, 2), 2: F(1, 2)}
    assert subset_weights(wt, (1, 3)) == {1: F(3, 10), 3: F(7, 10)}
    assert subset_weights(wt, (2, 3)) == {2: F(3, 10), 3: F(7, 10)}
    assert subset_weights(wt, (3,)) == {3: F(1)}


def test_bh_subset_weights_match_paper():
    wt = WeightingStrategy.bonferroni_holm([F(3, 10), F(3, 10), F(2, 5)])
    assert subset_weights(wt, (1, 3)) == {1: F(3, 7), 3: F(4, 7)}
    assert subset_weights(wt, (1, 2)) == {1: F(1, 2), 2: F(1, 2)}
    assert subset_weights(wt, (2,)) == {2: F(1)}


def test_graph_weights_removal_order_invariant():
    # drop different orderings of the complement; weights must agree
    wt = WeightingStrategy.graph(
        [F(1, 4)] * 4,
        [[0, F(1, 3), F(1, 3), F(1, 3)],
         [F(1, 3), 0, F(1, 3), F(1, 3)],
         [F(1, 3), F(1, 3), 0, F(1, 3)],
         [F(1, 3), F(1, 3), F(1, 3), 0]])
    from seqmtp.design import _graph_weights
    base = None
    for order in permutations((2, 4)):
        got = _graph_weights([F(1, 4)] * 4,
                             [list(r) for r in wt.transition], list(order))
        if base is None:
            base = got
        assert got == base
    assert sum(base.values()) == 1


def test_weights_sum_preserved_across_subsets():
    wt = _ex1_graph()
    for mask in all_subsets(3):
        assert sum(subset_weights(wt, mask).values()) == 1


# ---------------------------------------------------------------------------
# validation

def _valid_spec():
    from seqmtp.design import DesignSpec
    events = EventCountMatrix(
        marginal=((100, 200), (110, 220), (225, 450)),
        overlap={(1, 2): (80, 160)})
    plan = SpendingPlan(method=SpendMethod.COMMON, family="hsd",
                        parameter=-4.0, planned_final_counts=(200, 220, 450))
    return DesignSpec(m=3, n_analyses=2, alpha=0.025, weighting=_ex1_graph(),
                      events=events, spending=plan)


def test_valid_design_passes():
    assert validate(_valid_spec()) == []


def test_non_monotone_events_flagged():
    spec = _valid_spec()
    bad = EventCountMatrix(marginal=((200, 100), (110, 220), (225, 450)))
    spec = type(spec)(**{**spec.__dict__, "events": bad})
    codes = [v.code for v in validate(spec)]
    assert "non-monotone event counts" in codes


def test_overlap_exceeding_marginal_flagged():
    spec = _valid_spec()
    bad = EventCountMatrix(
        marginal=((100, 200), (110, 220), (225, 450)),
        overlap={(1, 2): (150, 160)})
    spec = type(spec)(**{**spec.__dict__, "events": bad})
    codes = [v.code for v in validate(spec)]
    assert "overlap exceeds marginal" in codes


def test_fixed_levels_must_end_at_alpha():
    spec = _valid_spec()
    plan = SpendingPlan(method=SpendMethod.FIXED_LEVELS, levels=(0.001, 0.02))
    spec = type(spec)(**{**spec.__dict__, "spending": plan})
    assert any(v.code == "spend-levels" for v in validate(spec))


def test_partition_must_cover():
    spec = _valid_spec()
    spec = type(spec)(**{**spec.__dict__, "correlation_partition": ((1, 2),)})
    assert any(v.code == "partition-cover" for v in validate(spec))


# ---------------------------------------------------------------------------
# file parsing

def test_parse_golden_designs():
    import json
    for name in ("example1", "example1_bh", "example2", "multiarm"):
        with open(DESIGNS / f"{name}.json") as fh:
            spec = parse_design(json.load(fh))
        assert validate(spec) == []


def test_unknown_top_level_key_rejected():
    doc = {"alpha": 0.025, "hypotheses": ["H1"], "analyses": 1,
           "weights": ["1"], "events": {"marginal": [[10]]},
           "spending": {"method": "common", "family": "hsd", "parameter": -4},
           "bogus": 1}
    with pytest.raises(DesignError, match="bogus"):
        parse_design(doc)


def test_missing_required_key_rejected():
    with pytest.raises(DesignError, match="alpha"):
        parse_design({"hypotheses": ["H1"], "analyses": 1, "weights": ["1"],
                      "events": {"marginal": [[10]]},
                      "spending": {"method": "common", "family": "hsd"}})


def test_fraction_weights_parse_exactly():
    import json
    with open(DESIGNS / "example1.json") as fh:
        spec = parse_design(json.load(fh))
    assert spec.weighting.initial_weights == (F(3, 10), F(3, 10), F(2, 5))
    assert spec.weighting.scheme is WeightScheme.GRAPH


def test_spending_time_policies_parse():
    import json
    with open(DESIGNS / "example2.json") as fh:
        spec = parse_design(json.load(fh))
    assert spec.spending.method is SpendMethod.PER_HYPOTHESIS
    assert (spec.spending.time_policy
            is SpendingTimePolicy.PER_HYPOTHESIS_INFORMATION_FRACTION)
