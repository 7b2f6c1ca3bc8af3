import numpy as np
import pytest

from outcome_audit.distributions import Beta, Discrete
from outcome_audit.estimation import estimate_rates
from outcome_audit.oracle import DiscreteInstance, exact_rates
from outcome_audit.policies import Logistic, Threshold
from outcome_audit.synthetic import GeneratorSpec, generate


def spec(**kw):
    base = dict(
        dist0=Beta(3, 4),
        dist1=Beta(2, 5),
        group_share=0.5,
        policy0=Threshold(0.3),
        policy1=Threshold(0.4),
        n_total=5000,
        seed=7,
    )
    base.update(kw)
    return GeneratorSpec(**base)


def test_threshold_decisions_are_indicators():
    s = generate(spec())
    t = np.where(s.group == 1, 0.4, 0.3)
    assert np.array_equal(s.decision, (s.risk >= t).astype(int))


def test_outcomes_only_for_positive_decisions():
    s = generate(spec())
    assert np.all(np.isnan(s.outcome[s.decision == 0]))
    y = s.outcome[s.decision == 1]
    assert np.all((y == 0) | (y == 1))


def test_identity_utility_records_risk():
    s = generate(spec(outcome_model="identity_utility", policy1=Logistic(0.3, 10)))
    pos = s.decision == 1
    assert np.array_equal(s.outcome[pos], s.risk[pos])


def test_group_share_concentrates():
    s = generate(spec(n_total=100_000))
    assert abs(np.mean(s.group) - 0.5) < 0.01


def test_same_seed_same_sample():
    a, b = generate(spec()), generate(spec())
    for name in ("group", "decision", "risk"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert np.array_equal(a.outcome, b.outcome, equal_nan=True)
    c = generate(spec(seed=8))
    assert not np.array_equal(a.risk, c.risk)


def test_spec_validation():
    with pytest.raises(ValueError):
        spec(group_share=1.0)
    with pytest.raises(ValueError):
        spec(n_total=0)
    with pytest.raises(ValueError):
        spec(outcome_model="poisson")


def test_spec_json_round_trip():
    s = spec(policy1=Logistic(0.2, 4.0))
    again = GeneratorSpec.from_dict(s.to_dict())
    assert again.to_json() == s.to_json()


def test_rates_converge_to_exact():
    xs = [0.1, 0.3, 0.6, 0.9]
    m0, m1 = [0.4, 0.3, 0.2, 0.1], [0.1, 0.2, 0.3, 0.4]
    g = spec(
        dist0=Discrete(xs, m0),
        dist1=Discrete(xs, m1),
        group_share=0.3,
        policy0=Threshold(0.3),
        policy1=Threshold(0.6),
        n_total=100_000,
    )
    s = generate(g)
    truth = exact_rates(DiscreteInstance(tuple(zip(xs, m0)), tuple(zip(xs, m1)), 0.3, (0.3, 0.6)))
    r0, r1 = estimate_rates(s, 0), estimate_rates(s, 1)
    for est, se, true in (
        (r0.decision_rate, r0.se_decision_rate, truth[0]),
        (r1.decision_rate, r1.se_decision_rate, truth[1]),
        (r0.outcome_rate, r0.se_outcome_rate, truth[2]),
        (r1.outcome_rate, r1.se_outcome_rate, truth[3]),
    ):
        assert abs(est - true) < 3 * se
