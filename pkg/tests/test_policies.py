import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from outcome_audit.distributions import Order
from outcome_audit.errors import InvalidPolicy
from outcome_audit.policies import (
    BetaCdf,
    Logistic,
    StepFunction,
    Threshold,
    apply,
    dyadic_approximation,
    generated_distribution,
    policies_mlrp_ordered,
    policy_from_dict,
)

GRID = np.linspace(-0.5, 1.5, 1001)


def test_threshold_includes_equality():
    assert apply(Threshold(0.5), 0.5) == 1.0
    assert apply(Threshold(0.5), np.nextafter(0.5, 0)) == 0.0


def test_zero_threshold_decides_everyone():
    assert np.all(apply(Threshold(0.0), np.linspace(0, 1, 11)) == 1.0)


@pytest.mark.parametrize("lam", [0.01, 1.0, 37.0, 1e6])
def test_logistic_centre_is_half(lam):
    assert apply(Logistic(0.3, lam), 0.3) == 0.5


def test_logistic_never_reaches_one():
    assert apply(Logistic(0.0, 1.0), 1e4) < 1.0
    assert apply(Logistic(0.0, 1.0), -1e4) == 0.0


def test_logistic_steep_limit_recovers_threshold():
    p = Logistic(0.4, 1e6)
    u = np.concatenate([np.linspace(-1, 0.39, 200), np.linspace(0.41, 2, 200)])
    assert np.max(np.abs(apply(p, u) - apply(Threshold(0.4), u))) < 1e-3


def test_beta_cdf_parameters_and_clamping():
    p = BetaCdf(0.4, 0.02)
    scale = 0.4 * 0.6 / 0.02 - 1
    assert p.alpha == pytest.approx(0.4 * scale)
    assert p.beta == pytest.approx(0.6 * scale)
    assert apply(p, -1.0) == 0.0
    assert apply(p, 2.0) == 1.0
    assert apply(p, 0.3) == pytest.approx(stats.beta(p.alpha, p.beta).cdf(0.3), abs=1e-14)


def test_step_function_right_continuous():
    p = StepFunction([0.2, 0.6], [0.0, 0.5, 1.0])
    assert apply(p, 0.2) == 0.5
    assert apply(p, np.nextafter(0.2, 0)) == 0.0
    assert apply(p, 0.6) == 1.0


@pytest.mark.parametrize(
    "factory",
    [
        lambda: Threshold(math.inf),
        lambda: Logistic(0.0, 0.0),
        lambda: Logistic(0.0, -1.0),
        lambda: BetaCdf(0.0, 0.01),
        lambda: BetaCdf(0.5, 0.25),
        lambda: BetaCdf(0.5, 0.0),
        lambda: StepFunction([0.5, 0.2], [0, 0.5, 1]),
        lambda: StepFunction([0.5], [0.7, 0.2]),
        lambda: StepFunction([0.5], [0.0, 1.2]),
        lambda: StepFunction([0.5], [0.0]),
    ],
)
def test_invalid_policies(factory):
    with pytest.raises(InvalidPolicy):
        factory()


POLICIES = [
    Threshold(0.35),
    Logistic(0.5, 8.0),
    BetaCdf(0.4, 0.01),
    StepFunction([0.1, 0.5, 0.9], [0.1, 0.3, 0.6, 0.8]),
]


@pytest.mark.parametrize("policy", POLICIES)
def test_dict_round_trip(policy):
    assert policy_from_dict(policy.to_dict()) == policy


def test_unknown_kind():
    with pytest.raises(InvalidPolicy):
        policy_from_dict({"kind": "sigmoid", "params": {}})


@pytest.mark.parametrize("policy", POLICIES)
def test_generated_distribution_cdf_equals_curve(policy):
    h = generated_distribution(policy)
    assert np.max(np.abs(np.asarray(h.cdf(GRID)) - apply(policy, GRID))) <= 1e-9


def test_threshold_generates_point_mass():
    h = generated_distribution(Threshold(0.3))
    assert h.mass_minus_inf == 0.0 and h.mass_plus_inf == 0.0
    xs, ms = h.core.atoms()
    assert xs.tolist() == [0.3] and ms.tolist() == [1.0]


def test_logistic_generates_logistic_distribution():
    h = generated_distribution(Logistic(0.2, 3.0))
    ref = stats.logistic(loc=0.2, scale=1 / 3.0)
    u = np.linspace(-3, 3, 301)
    assert np.allclose(h.cdf(u), ref.cdf(u), atol=1e-12)


def test_step_generates_endpoint_masses():
    h = generated_distribution(StepFunction([0.5], [0.2, 0.7]))
    assert h.mass_minus_inf == pytest.approx(0.2)
    assert h.mass_plus_inf == pytest.approx(0.3)


@given(st.sampled_from(POLICIES), st.lists(st.floats(-2, 3), min_size=2, max_size=30))
def test_curves_nondecreasing_in_unit_interval(policy, us):
    us = np.sort(us)
    v = apply(policy, us)
    assert np.all((v >= 0) & (v <= 1))
    assert np.all(np.diff(v) >= 0)


# -- MLRP on policy pairs ------------------------------------------------


def test_threshold_pair_ordered():
    assert policies_mlrp_ordered(Threshold(0.3), Threshold(0.7)).mlrp is Order.SECOND
    assert policies_mlrp_ordered(Threshold(0.5), Threshold(0.5)).mlrp is Order.EQUAL


def test_logistic_location_family_ordered():
    assert policies_mlrp_ordered(Logistic(0, 2), Logistic(1, 2)).mlrp is Order.SECOND


def test_logistic_different_steepness_not_ordered():
    assert policies_mlrp_ordered(Logistic(0, 1), Logistic(0.5, 3)).mlrp is Order.NEITHER


def test_beta_cdf_pair_ordered_by_closed_form():
    p0, p1 = BetaCdf(0.3, 0.01), BetaCdf(0.6, 0.01)
    rep = policies_mlrp_ordered(p0, p1)
    a0, b0, a1, b1 = p0.alpha, p0.beta, p1.alpha, p1.beta
    expected = Order.SECOND if (a1 >= a0 and b1 <= b0) else Order.NEITHER
    assert rep.mlrp is expected


# -- dyadic approximation ------------------------------------------------


def test_dyadic_threshold_all_breakpoints_at_t():
    d = dyadic_approximation(Threshold(0.5), 3)
    assert d.breakpoints.tolist() == [0.5] * 8
    assert d.cdf(0.5) == 1.0 and d.cdf(0.49) == 0.0


def test_dyadic_logistic_level_one():
    d = dyadic_approximation(Logistic(0.0, 1.0), 1)
    assert abs(d.breakpoints[0]) < 1e-15
    assert apply(Logistic(0.0, 1.0), d.breakpoints[0]) >= 0.5
    assert d.breakpoints[1] == math.inf


def test_dyadic_breakpoints_are_smallest():
    p = BetaCdf(0.4, 0.02)
    d = dyadic_approximation(p, 6)
    levels = np.arange(1, 65) / 64
    finite = np.isfinite(d.breakpoints)
    l = d.breakpoints[finite]
    assert np.all(apply(p, l) >= levels[finite])
    below = np.nextafter(l, -np.inf)
    assert np.all(apply(p, below) < levels[finite])


def test_dyadic_step_endpoint_mass_maps_to_sentinels():
    p = StepFunction([0.5], [0.25, 0.75])
    d = dyadic_approximation(p, 2)
    assert d.breakpoints.tolist() == [-math.inf, 0.5, 0.5, math.inf]


@pytest.mark.parametrize("policy", POLICIES[:3] + [Logistic(-1.0, 0.3)])
def test_refinement_never_worsens_gap(policy):
    grid = np.linspace(-3, 3, 2001)
    gaps = [dyadic_approximation(policy, n).sup_gap(grid) for n in range(1, 9)]
    assert all(b <= a + 1e-15 for a, b in zip(gaps, gaps[1:]))


@pytest.mark.parametrize("policy", POLICIES + [Logistic(0.0, 0.5)])
@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_gap_bound(policy, n):
    d = dyadic_approximation(policy, n)
    g = d.gap(GRID)
    assert np.all(g >= 0)
    assert np.all(g < 2.0**-n)


@given(
    st.floats(-5, 5),
    st.floats(0.05, 50),
    st.integers(1, 12),
    st.lists(st.floats(-20, 20), min_size=1, max_size=50),
)
def test_gap_bound_random_logistic(t, lam, n, us):
    d = dyadic_approximation(Logistic(t, lam), n)
    g = d.gap(np.asarray(us))
    assert np.all((g >= 0) & (g < 2.0**-n))


def test_level_must_be_positive():
    with pytest.raises(ValueError):
        dyadic_approximation(Threshold(0.1), 0)
