"""Correlation structure of all test statistics."""

import time

import numpy as np
import pytest

from seqmtp.correlation import (ArmPopulationCounts, corr_from_overlap,
                                corr_multiarm_multipop, corr_shared_control,
                                events_from_prevalence, stat_index)
from seqmtp.design import EventCountMatrix

# lower triangle of the overlapping-populations example (6x6, 2 dp)
EX1_LOWER = [
    [0.76],
    [0.67, 0.70],
    [0.71, 0.54, 0.47],
    [0.54, 0.71, 0.49, 0.76],
    [0.47, 0.49, 0.71, 0.67, 0.70],
]

# lower triangle of the shared-control three-arm example (6x6, 2 dp)
EX2_LOWER = [
    [0.54],
    [0.53, 0.52],
    [0.71, 0.38, 0.38],
    [0.38, 0.71, 0.37, 0.54],
    [0.37, 0.37, 0.70, 0.53, 0.52],
]

# simulation-design correlation matrices by biomarker-cell prevalence
# (p_1+2-, p_1-2+, p_1+2+, p_1-2-) with 225 / 450 overall events
PREV_CASES = {
    (0.2, 0.2, 0.5, 0.1): [
        [0.714],
        [0.837, 0.837],
        [0.707, 0.505, 0.592],
        [0.505, 0.707, 0.592, 0.714],
        [0.592, 0.592, 0.707, 0.837, 0.837],
    ],
    (0.2, 0.2, 0.4, 0.2): [
        [0.667],
        [0.775, 0.775],
        [0.707, 0.471, 0.548],
        [0.471, 0.707, 0.548, 0.667],
        [0.548, 0.548, 0.707, 0.775, 0.775],
    ],
    (0.3, 0.3, 0.1, 0.3): [
        [0.250],
        [0.632, 0.632],
        [0.707, 0.177, 0.447],
        [0.177, 0.707, 0.447, 0.250],
        [0.447, 0.447, 0.707, 0.632, 0.632],
    ],
}

EX1_EVENTS = EventCountMatrix(
    ((100, 200), (110, 220), (225, 450)),
    {(1, 2): (80, 160), (1, 3): (100, 200), (2, 3): (110, 220)})


def _assert_lower(corr, lower, tol):
    mat = corr.matrix
    for r, row in enumerate(lower, start=1):
        for c, want in enumerate(row):
            assert mat[r, c] == pytest.approx(want, abs=tol), (r + 1, c + 1)


def test_overlapping_populations_matrix():
    start = time.perf_counter()
    corr = corr_from_overlap(EX1_EVENTS)
    _assert_lower(corr, EX1_LOWER, 0.005)
    assert time.perf_counter() - start < 1.0


def test_shared_control_matrix():
    # events per arm: control 85/170, arm1 70/135, arm2 75/150, arm3 80/165
    arms = ArmPopulationCounts((
        ((85, 170),), ((70, 135),), ((75, 150),), ((80, 165),)))
    corr = corr_shared_control(arms)
    _assert_lower(corr, EX2_LOWER, 0.005)
    # exact closed form spot-checks
    assert corr.entry(1, 1, 2, 1) == pytest.approx(85 / np.sqrt(155 * 160))
    assert corr.entry(1, 1, 2, 2) == pytest.approx(85 / np.sqrt(155 * 320))
    assert corr.entry(1, 1, 1, 2) == pytest.approx(155 / np.sqrt(155 * 305))


def test_prevalence_matrices():
    start = time.perf_counter()
    for prev, lower in PREV_CASES.items():
        events = events_from_prevalence(prev, (225, 450))
        corr = corr_from_overlap(events)
        _assert_lower(corr, lower, 0.0005)
    assert time.perf_counter() - start < 1.0


def test_prevalence_closed_forms():
    p10, p01, p11, p00 = 0.2, 0.2, 0.5, 0.1
    events = events_from_prevalence((p10, p01, p11, p00), (225, 450))
    f1, f2 = p10 + p11, p01 + p11
    assert events.count(1, 1) == pytest.approx(f1 * 225)
    assert events.count(3, 2) == pytest.approx(450)
    corr = corr_from_overlap(events)
    assert corr.entry(1, 1, 2, 1) == pytest.approx(p11 / np.sqrt(f1 * f2))
    assert corr.entry(1, 1, 3, 1) == pytest.approx(np.sqrt(f1))
    assert corr.entry(1, 1, 1, 2) == pytest.approx(np.sqrt(0.5))


def test_symmetry_and_unit_diagonal():
    corr = corr_from_overlap(EX1_EVENTS)
    assert np.allclose(corr.matrix, corr.matrix.T)
    assert np.allclose(np.diag(corr.matrix), 1.0)
    assert np.linalg.eigvalsh(corr.matrix).min() > -1e-10


def test_stat_index_layout():
    # analysis-major blocks of m hypotheses
    assert stat_index(1, 1, 3) == 0
    assert stat_index(3, 1, 3) == 2
    assert stat_index(1, 2, 3) == 3
    corr = corr_from_overlap(EX1_EVENTS)
    assert corr.labels()[:4] == ["H1:A1", "H2:A1", "H3:A1", "H1:A2"]


def test_submatrix_selection():
    corr = corr_from_overlap(EX1_EVENTS)
    sub = corr.submatrix([(1, 1), (3, 2)])
    assert sub.shape == (2, 2)
    assert sub[0, 1] == pytest.approx(100 / np.sqrt(100 * 450))


def test_multiarm_reduces_to_shared_control():
    arms = ArmPopulationCounts((
        ((85, 170),), ((70, 135),), ((75, 150),), ((80, 165),)))
    a = corr_shared_control(arms)
    b = corr_multiarm_multipop(arms, [(1, 1), (2, 1), (3, 1)])
    assert np.allclose(a.matrix, b.matrix)


def test_nested_populations_overlap_is_inner():
    arms = ArmPopulationCounts.nested(
        (((50, 100), (80, 160)), ((40, 80), (70, 140))), order=[1, 2])
    assert arms.arm_overlap(0, 1, 2, 1) == 50
    assert arms.arm_overlap(1, 1, 2, 2) == 80


def test_inconsistent_counts_rejected():
    # overlap exceeding a marginal drives an eigenvalue far negative
    bad = EventCountMatrix(((100, 200), (50, 100)), {(1, 2): (90, 180)})
    with pytest.raises(ValueError):
        corr_from_overlap(bad)


def test_zero_count_rejected():
    events = EventCountMatrix(((0, 10), (5, 10)), {(1, 2): (0, 5)})
    with pytest.raises(ValueError):
        corr_from_overlap(events)


def test_prevalence_validation():
    with pytest.raises(ValueError):
        events_from_prevalence((0.3, 0.3, 0.3, 0.3), (225, 450))
