import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import replicates
from outcome_audit.errors import EmptyGroup, InputError, InsufficientPositives, UnavailableSE, ZeroSE
from outcome_audit.estimation import (
    DeltaEstimates,
    GroupedSample,
    RateSummary,
    chi2_2df_quantile,
    confidence_region,
    delta_with_errors,
    directional_p_values,
    estimate_rates,
    one_tailed_p,
    robust_p_value,
)
from outcome_audit.polarity import Conclusion, DecisionPolarity


def _group_rows(group, n, npos, outcomes):
    rows = [(group, 1, y) for y in outcomes[:npos]]
    rows += [(group, 0, None)] * (n - npos)
    return rows


def test_decision_rate_and_se():
    s = GroupedSample.from_rows(_group_rows(0, 100, 50, [1.0, 0.0] * 25))
    r = estimate_rates(s, 0)
    assert r.decision_rate == 0.5
    assert r.se_decision_rate == pytest.approx(0.05, abs=1e-15)
    assert r.outcome_rate == 0.5


def test_constant_outcomes_give_zero_variance():
    s = GroupedSample.from_rows(_group_rows(1, 10, 4, [0.7] * 4))
    r = estimate_rates(s, 1)
    assert r.outcome_rate == 0.7
    assert r.outcome_variance == 0.0
    assert r.se_outcome_rate == 0.0


def test_outcome_variance_uses_positive_count():
    ys = [0.0, 1.0, 1.0, 0.0, 1.0]
    s = GroupedSample.from_rows(_group_rows(0, 20, 5, ys))
    r = estimate_rates(s, 0)
    ref = np.var(ys, ddof=1)
    assert r.outcome_variance == pytest.approx(ref, abs=1e-15)
    assert r.se_outcome_rate == pytest.approx(math.sqrt(ref / 5), abs=1e-15)
    g = estimate_rates(s, 0, variance_denominator="group")
    assert g.outcome_variance == pytest.approx(ref * 4 / 19, abs=1e-15)


def test_no_positive_decisions():
    s = GroupedSample.from_rows(_group_rows(0, 5, 0, []) + [(1, 1, 1.0)])
    with pytest.raises(InsufficientPositives):
        estimate_rates(s, 0)


def test_single_positive_has_no_outcome_se():
    s = GroupedSample.from_rows(_group_rows(0, 5, 1, [1.0]))
    r = estimate_rates(s, 0)
    assert r.outcome_rate == 1.0
    assert r.se_outcome_rate is None and not r.has_se
    with pytest.raises(UnavailableSE):
        delta_with_errors(r, r)


def test_empty_group():
    s = GroupedSample.from_rows([(0, 1, 1.0)])
    with pytest.raises(EmptyGroup):
        estimate_rates(s, 1)


def test_missing_outcome_for_positive():
    s = GroupedSample.from_rows([(0, 1, None), (0, 1, 1.0)])
    with pytest.raises(InputError):
        estimate_rates(s, 0)


def test_bad_codes_rejected():
    with pytest.raises(InputError):
        GroupedSample([0, 2], [0, 1], [np.nan, 1.0])
    with pytest.raises(InputError):
        GroupedSample([0, 1], [0, 3], [np.nan, 1.0])
    with pytest.raises(InputError):
        GroupedSample([0, 1], [0, 1], [1.0])


def test_from_counts_matches_rows():
    ys = [0.3, 0.9, 0.1, 0.6]
    s = GroupedSample.from_rows(_group_rows(1, 9, 4, ys))
    a = estimate_rates(s, 1)
    b = RateSummary.from_counts(1, 9, 4, sum(ys), sum(y * y for y in ys))
    assert a.decision_rate == b.decision_rate
    assert a.outcome_rate == pytest.approx(b.outcome_rate, abs=1e-15)
    assert a.outcome_variance == pytest.approx(b.outcome_variance, abs=1e-14)


@given(
    st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1), st.floats(0, 1)), min_size=2, max_size=200),
)
def test_summary_invariants(rows):
    rows = [(g, d, y if d else None) for g, d, y in rows]
    s = GroupedSample.from_rows(rows)
    for g in (0, 1):
        try:
            r = estimate_rates(s, g)
        except (EmptyGroup, InsufficientPositives):
            continue
        assert 0.0 <= r.decision_rate <= 1.0
        assert r.n_positive <= r.n
        assert r.se_decision_rate >= 0.0
        if r.has_se:
            assert r.outcome_variance >= 0.0 and r.se_outcome_rate >= 0.0


# -- differences ------------------------------------------------------------


def _summary(group, n, npos, var=0.25):
    dr = npos / n
    return RateSummary(group, n, npos, dr, 0.5, var, math.sqrt(dr * (1 - dr) / n), math.sqrt(var / npos))


def test_delta_quadrature():
    d = delta_with_errors(_summary(0, 100, 50), _summary(1, 100, 40))
    assert d.delta_dr == pytest.approx(-0.1, abs=1e-15)
    assert d.se_delta_dr == pytest.approx(math.sqrt(0.0025 + 0.0024), abs=1e-15)
    assert d.se_delta_dr == pytest.approx(0.07, abs=1e-15)


def test_identical_summaries():
    s = _summary(0, 100, 30)
    d = delta_with_errors(s, s)
    assert d.delta_dr == 0.0 and d.delta_or == 0.0
    assert d.se_delta_dr > 0 and d.se_delta_or > 0


@given(st.integers(2, 500), st.integers(2, 500), st.data())
def test_delta_antisymmetry(n0, n1, data):
    s0 = _summary(0, n0, data.draw(st.integers(2, n0)))
    s1 = _summary(1, n1, data.draw(st.integers(2, n1)))
    f, b = delta_with_errors(s0, s1), delta_with_errors(s1, s0)
    assert (b.delta_dr, b.delta_or) == (-f.delta_dr, -f.delta_or)
    assert (b.se_delta_dr, b.se_delta_or) == (f.se_delta_dr, f.se_delta_or)
    assert f.se_delta_dr**2 == pytest.approx(s0.se_decision_rate**2 + s1.se_decision_rate**2, rel=1e-12)


# -- region ----------------------------------------------------------------


def test_chi2_quantiles():
    assert chi2_2df_quantile(0.05) == pytest.approx(5.991464547107979, abs=1e-12)
    assert chi2_2df_quantile(0.5) == pytest.approx(1.3862943611198906, abs=1e-12)
    with pytest.raises(ValueError):
        chi2_2df_quantile(1.0)


def test_chi2_matches_scipy():
    from scipy import stats

    for a in (0.001, 0.01, 0.1, 0.9):
        assert chi2_2df_quantile(a) == pytest.approx(stats.chi2(2).isf(a), rel=1e-12)


def test_center_belongs_to_region():
    d = DeltaEstimates(-0.1, 0.05, 0.02, 0.03)
    r = confidence_region(d, 0.05)
    assert r.radius_squared > 0
    assert r.contains((-0.1, 0.05))
    assert r.statistic((-0.1 + 0.02, 0.05 + 0.03)) == pytest.approx(2.0)
    assert not r.contains((0.0, 0.05))


def test_degenerate_axis_admits_only_its_centre():
    r = confidence_region(DeltaEstimates(0.1, 0.2, 0.05, 0.0), 0.05)
    assert r.contains((0.15, 0.2))
    assert not r.contains((0.1, 0.2 + 1e-12))


def test_region_needs_some_spread():
    with pytest.raises(ZeroSE):
        confidence_region(DeltaEstimates(0.1, 0.2, 0.0, 0.0), 0.05)
    with pytest.raises(UnavailableSE):
        confidence_region(DeltaEstimates(0.1, 0.2), 0.05)


# -- p-values --------------------------------------------------------------


def test_one_tailed_at_zero():
    assert one_tailed_p(0.0, 1.0, 1) == 0.5
    with pytest.raises(ZeroSE):
        one_tailed_p(0.1, 0.0, 1)


def test_robust_p_strong_evidence():
    d = DeltaEstimates(-0.5, 0.5, 0.1, 0.1)
    p = robust_p_value(d, against=1)
    assert p < 1e-6
    assert p == pytest.approx(2.866515718791939e-07, rel=1e-9)


def test_robust_p_is_max_of_tails():
    d = DeltaEstimates(-0.5, 0.0, 0.1, 0.1)
    assert robust_p_value(d, against=1) == 0.5
    assert directional_p_values(d, Conclusion.HIGHER_THRESHOLD_G1)[1] == 0.5


def test_robust_p_zero_tested_component():
    assert robust_p_value(DeltaEstimates(0.0, 0.3, 0.1, 0.1)) >= 0.5


def test_robust_p_polarity_maps_alleged_group():
    d = DeltaEstimates(-0.3, 0.3, 0.1, 0.1)
    desirable = robust_p_value(d, DecisionPolarity.DESIRABLE, against=1)
    undesirable = robust_p_value(d, DecisionPolarity.UNDESIRABLE, against=0)
    assert desirable == undesirable
    assert robust_p_value(d) == desirable


def test_robust_p_zero_se():
    with pytest.raises(ZeroSE):
        robust_p_value(DeltaEstimates(-0.3, 0.3, 0.1, 0.0))


# -- Monte Carlo ---------------------------------------------------------


def test_se_matches_replicate_spread():
    run = replicates.run(2000, 2000, seed=11)
    spread = run.deltas.std(axis=0, ddof=1)
    reported = run.ses.mean(axis=0)
    assert np.all(np.abs(spread / reported - 1) < 0.05)


def test_coverage_small_run():
    run = replicates.run(1000, 2000, seed=12)
    # binomial sd at 1000 replicates is about 0.7pp
    assert 0.93 <= run.covered.mean() <= 0.97
