"""Trial simulator: logrank oracle, reproducibility, and sanity rates."""

import numpy as np
import pytest

from seqmtp import load_design
from seqmtp.simulate import (Scenario, _count_key, _one_replication,
                             bonferroni_view, logrank_z, simulate)

from conftest import DESIGNS


@pytest.fixture(scope="module")
def sim_design():
    return load_design(DESIGNS / "sim_design.json")


def _logrank_oracle(time, event, treated):
    """Literal risk-set sums at each event time (O(n^2) reference)."""
    time = np.asarray(time, float)
    event = np.asarray(event, bool)
    treated = np.asarray(treated, bool)
    oe = var = 0.0
    for t in np.sort(time[event]):
        at = time >= t
        n = at.sum()
        n1 = (at & treated).sum()
        d = ((time == t) & event).sum()
        d1 = ((time == t) & event & treated).sum()
        oe += d1 - d * n1 / n
        var += d * (n1 / n) * (1 - n1 / n) * (n - d) / max(n - 1, 1)
    return oe, var


def test_logrank_matches_oracle():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = 60
        time = rng.exponential(10.0, n)
        event = rng.random(n) < 0.7
        treated = rng.random(n) < 0.5
        oe, var = _logrank_oracle(time, event, treated)
        want = -oe / np.sqrt(var)
        assert logrank_z(time, event, treated) == pytest.approx(want, rel=1e-9)


def test_logrank_direction():
    # strongly shorter control survival => positive Z favoring treatment
    rng = np.random.default_rng(1)
    n = 400
    treated = np.arange(n) % 2 == 0
    time = np.where(treated, rng.exponential(30.0, n), rng.exponential(5.0, n))
    event = np.ones(n, bool)
    assert logrank_z(time, event, treated) > 5.0


def test_logrank_stratified_pools_strata():
    rng = np.random.default_rng(3)
    n = 200
    treated = rng.random(n) < 0.5
    strata = rng.integers(0, 2, n)
    time = rng.exponential(10.0, n)
    event = rng.random(n) < 0.8
    oe = var = 0.0
    for s in (0, 1):
        o, v = _logrank_oracle(time[strata == s], event[strata == s],
                               treated[strata == s])
        oe += o
        var += v
    want = -oe / np.sqrt(var)
    got = logrank_z(time, event, treated, strata=strata)
    assert got == pytest.approx(want, rel=1e-9)


def test_replication_is_deterministic():
    scn = Scenario(hazard_ratios=(0.7, 0.7, 0.7, 1.0),
                   prevalences=(0.2, 0.2, 0.5, 0.1))
    rng1 = np.random.default_rng(np.random.SeedSequence(scn.seed, spawn_key=(5,)))
    rng2 = np.random.default_rng(np.random.SeedSequence(scn.seed, spawn_key=(5,)))
    p1, c1 = _one_replication(scn, rng1, False)
    p2, c2 = _one_replication(scn, rng2, False)
    assert p1 == p2 and c1 == c2


def test_replication_event_counts_consistent():
    scn = Scenario(hazard_ratios=(1.0, 1.0, 1.0, 1.0),
                   prevalences=(0.2, 0.2, 0.5, 0.1))
    rng = np.random.default_rng(0)
    _, counts = _one_replication(scn, rng, False)
    (n11, n21, o1), (n12, n22, o2) = counts
    # overlap cell is contained in both populations; totals fixed by cuts
    assert o1 <= min(n11, n21) and o2 <= min(n12, n22)
    assert n11 <= 225 and n21 <= 225 and n12 <= 450 and n22 <= 450
    assert n12 >= n11 and n22 >= n21 and o2 >= o1


def test_count_key_quantization():
    key = _count_key((113, 110, 79), (225, 221, 158), step=16)
    n11, n21, o1, n12, n22, o2 = key
    assert all(v % 16 == 0 for v in key)
    assert o1 <= min(n11, n21) and o2 <= min(n12, n22)
    assert n12 >= n11 and n22 >= n21 and o2 >= o1
    # stability: nearby counts share a key
    assert _count_key((117, 106, 82), (229, 217, 161), 16) == key


def test_bonferroni_view_swaps_bounds(table_ex1):
    bonf = bonferroni_view(table_ex1)
    for key, e in table_ex1.entries.items():
        assert bonf.entries[key].p_bounds == e.comparator
        assert bonf.entries[key].inflation == 1.0


def test_simulate_reproducible_and_thread_invariant(sim_design):
    scn = Scenario(hazard_ratios=(1.0, 1.0, 1.0, 1.0),
                   prevalences=(0.2, 0.2, 0.5, 0.1), n_replications=200)
    a = simulate(scn, sim_design)
    b = simulate(scn, sim_design)
    assert a.bonferroni == b.bonferroni and a.parametric == b.parametric
    c = simulate(scn, sim_design, threads=2)
    assert c.parametric.rej == a.parametric.rej
    assert c.bonferroni.rej == a.bonferroni.rej


def test_null_rates_bounded(sim_design):
    # small-sample smoke check: null rejection of any hypothesis should be
    # rare and the parametric method at least as powerful as Bonferroni
    scn = Scenario(hazard_ratios=(1.0, 1.0, 1.0, 1.0),
                   prevalences=(0.2, 0.2, 0.5, 0.1), n_replications=400)
    res = simulate(scn, sim_design)
    assert res.parametric.rej_any <= 0.025 + 3 * max(res.parametric.se_any, 0.01)
    assert res.parametric.rej_any >= res.bonferroni.rej_any


def test_strong_alternative_power(sim_design):
    scn = Scenario(hazard_ratios=(0.5, 0.5, 0.5, 0.5),
                   prevalences=(0.2, 0.2, 0.5, 0.1), n_replications=100)
    res = simulate(scn, sim_design)
    assert res.parametric.rej_any > 0.95


def test_scenario_validation():
    bad = Scenario(hazard_ratios=(1.0, 1.0, 1.0, -1.0),
                   prevalences=(0.3, 0.3, 0.3, 0.3))
    problems = bad.validate()
    assert any("sum to 1" in p for p in problems)
    assert any("positive" in p for p in problems)
    with pytest.raises(ValueError):
        simulate(bad, load_design(DESIGNS / "sim_design.json"))
