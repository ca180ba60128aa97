"""Single-hypothesis group-sequential bounds."""

import math

import numpy as np
import pytest
from scipy.special import ndtr

from seqmtp.gsbounds import gs_single_bounds
from seqmtp.mvn import bvn_cdf
from seqmtp.spending import SpendingFunction


def test_hsd_half_time_two_analyses():
    # HSD(-4), t = (0.5, 1.0), alpha = 0.025: nominal p-bounds
    # (0.0030, 0.0238) and Z bounds (2.75, 1.98) at table precision.
    res = gs_single_bounds((0.5, 1.0), (0.5, 1.0),
                           SpendingFunction("hsd", -4.0), 0.025)
    assert res.p_bounds[0] == pytest.approx(0.0030, abs=1e-4)
    assert res.p_bounds[1] == pytest.approx(0.0238, abs=1e-4)
    assert res.z_bounds[0] == pytest.approx(2.75, abs=5e-3)
    assert res.z_bounds[1] == pytest.approx(1.98, abs=5e-3)


def test_ldof_full_alpha_per_hypothesis():
    # Full-alpha LDOF bounds at each hypothesis's own information fraction:
    # interims 0.0017 / 0.0015 / 0.0014 and final 0.0245.
    for frac, want in ((155 / 305, 0.0017), (160 / 320, 0.0015),
                       (165 / 335, 0.0014)):
        res = gs_single_bounds((frac, 1.0), (frac, 1.0),
                               SpendingFunction("ldof"), 0.025)
        assert res.p_bounds[0] == pytest.approx(want, abs=1e-4)
        assert res.p_bounds[1] == pytest.approx(0.0245, abs=1e-4)


def test_exactness_of_cumulative_crossing():
    # independently verify: P(Z1 < c1, Z2 < c2) = 1 - cumulative spend
    f = SpendingFunction("hsd", -4.0)
    res = gs_single_bounds((0.5, 1.0), (0.5, 1.0), f, 0.025)
    c1, c2 = res.z_bounds
    rho = math.sqrt(0.5)
    noncross = bvn_cdf(c1, c2, rho)
    assert noncross == pytest.approx(1.0 - 0.025, abs=1e-10)
    assert 1.0 - ndtr(c1) == pytest.approx(res.cumulative_spend[0], abs=1e-10)


def test_untestable_sentinel():
    # zero incremental spend at the interim => infinite bound, p-bound 0
    f = SpendingFunction("fixed", fixed_levels=(0.0, 0.025))
    res = gs_single_bounds((0.5, 1.0), (0.5, 1.0), f, 0.025)
    assert res.untestable == (True, False)
    assert res.p_bounds[0] == 0.0
    assert math.isinf(res.z_bounds[0])
    # the final still spends everything
    assert 1.0 - ndtr(res.z_bounds[1]) == pytest.approx(0.025, abs=1e-9)


def test_spending_time_decoupled_from_information():
    # spending at t=0.5 with information at 0.4 changes the correlation
    # but not the cumulative spend targets
    f = SpendingFunction("hsd", -4.0)
    res = gs_single_bounds((0.4, 1.0), (0.5, 1.0), f, 0.025)
    assert res.cumulative_spend[0] == pytest.approx(
        gs_single_bounds((0.5, 1.0), (0.5, 1.0), f, 0.025).cumulative_spend[0])
    c1, c2 = res.z_bounds
    assert bvn_cdf(c1, c2, math.sqrt(0.4)) == pytest.approx(0.975, abs=1e-9)


def test_single_analysis_reduces_to_quantile():
    res = gs_single_bounds((1.0,), (1.0,), SpendingFunction("hsd", -4.0), 0.025)
    assert res.p_bounds[0] == pytest.approx(0.025, abs=1e-12)


def test_validation_errors():
    f = SpendingFunction("hsd", -4.0)
    with pytest.raises(ValueError):
        gs_single_bounds((0.6, 0.5), (0.5, 1.0), f, 0.025)
    with pytest.raises(ValueError):
        gs_single_bounds((0.5, 1.0), (0.5, 0.4), f, 0.025)
    with pytest.raises(ValueError):
        gs_single_bounds((0.5, 1.0), (0.5,), f, 0.025)
