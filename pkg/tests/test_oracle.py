import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from outcome_audit.distributions import Order, check_ordering
from outcome_audit.errors import AssumptionViolation, NotFound
from outcome_audit.estimation import DeltaEstimates, estimate_rates
from outcome_audit.oracle import (
    AtomGrid,
    DiscreteInstance,
    audit_proposition,
    audit_theorem,
    exact_rates,
    exact_rates_fraction,
    expand_instance,
    find_fig2_counterexample,
    load_fig2_fixture,
    mlrp_ordered,
    random_mlrp_instance,
    theorem_case,
    verify_proposition,
)
from outcome_audit.polarity import Conclusion
from outcome_audit.verdicts import robust_outcome_test

SAME = ((0.2, 0.5), (0.8, 0.5))


def test_identical_groups_uniform_threshold():
    inst = DiscreteInstance(SAME, SAME, 0.5, (0.5, 0.5))
    assert exact_rates(inst) == (0.5, 0.5, 0.8, 0.8)
    assert verify_proposition(inst).consistent


def test_right_shifted_group_inframarginality():
    inst = DiscreteInstance(((0.2, 0.6), (0.5, 0.3), (0.8, 0.1)), ((0.2, 0.2), (0.5, 0.3), (0.8, 0.5)), 0.5, (0.4, 0.4))
    assert mlrp_ordered(inst)
    dr0, dr1, or0, or1 = exact_rates(inst)
    assert or1 > or0 and dr1 > dr0


def test_threshold_above_top_atom():
    with pytest.raises(AssumptionViolation):
        DiscreteInstance(SAME, SAME, 0.5, (0.5, 0.9))
    with pytest.raises(AssumptionViolation):
        DiscreteInstance(SAME, SAME, 1.0, (0.5, 0.5))


def test_rates_are_fractions_of_given_masses():
    inst = DiscreteInstance(((0.1, 1.0), (0.9, 3.0)), ((0.1, 2.0), (0.9, 2.0)), 0.4, (0.5, 0.1))
    x1, x9 = Fraction(0.1), Fraction(0.9)
    assert exact_rates_fraction(inst) == (Fraction(3, 4), Fraction(1), x9, (x1 + x9) / 2)


def test_instance_json_round_trip():
    inst = random_mlrp_instance(np.random.default_rng(5))
    assert DiscreteInstance.from_dict(json.loads(json.dumps(inst.to_dict()))) == inst


@given(st.integers(0, 2**32 - 1))
def test_random_instances_are_mlrp_and_consistent(seed):
    inst = random_mlrp_instance(np.random.default_rng(seed))
    res = verify_proposition(inst)
    assert res.mlrp_ordered
    assert res.consistent


@given(st.integers(0, 2**32 - 1))
def test_uniform_threshold_never_meets_both_premises(seed):
    inst = random_mlrp_instance(np.random.default_rng(seed))
    t = inst.thresholds[0]
    same = DiscreteInstance(inst.atoms0, inst.atoms1, inst.group_share, (t, t))
    assert not verify_proposition(same).premises_hold


def test_exact_mlrp_agrees_with_float_check():
    rng = np.random.default_rng(9)
    for _ in range(200):
        inst = random_mlrp_instance(rng)
        ordered = check_ordering(inst.distribution(0), inst.distribution(1)).mlrp is not Order.NEITHER
        assert ordered == mlrp_ordered(inst)


def test_small_proposition_audit():
    r = audit_proposition(500, seed=1)
    assert r.violations == 0 and r.non_mlrp_skipped == 0
    assert r.premises_held > 0


@pytest.mark.parametrize("seed", range(8))
def test_theorem_truth_is_pointwise_policy_ordering(seed):
    case = theorem_case(np.random.default_rng(seed))
    u = np.linspace(0, 1, 1001)
    d0, d1 = case.policy0(u), case.policy1(u)
    if case.truth == "higher_threshold_g1":
        assert np.all(d1 <= d0 + 1e-12)
    elif case.truth == "higher_threshold_g0":
        assert np.all(d0 <= d1 + 1e-12)
    else:
        assert np.allclose(d0, d1)


def test_small_theorem_audit():
    r = audit_theorem(60, seed=2)
    assert r.violations == 0
    assert r.premises_held > 0


# -- counterexample ------------------------------------------------------


@pytest.fixture(scope="module")
def found():
    return find_fig2_counterexample()


def test_counterexample_sign_pattern(found):
    t0, t1 = found.thresholds
    assert t0 == t1
    dr0, dr1, or0, or1 = exact_rates_fraction(found)
    assert dr1 < dr0 and or1 > or0
    assert not mlrp_ordered(found)
    assert check_ordering(found.distribution(0), found.distribution(1)).mlrp is Order.NEITHER


def test_counterexample_fools_robust_test(found):
    dr0, dr1, or0, or1 = exact_rates(found)
    v = robust_outcome_test(DeltaEstimates(dr1 - dr0, or1 - or0))
    assert v.conclusion is Conclusion.HIGHER_THRESHOLD_G1
    res = verify_proposition(found)
    assert res.premises_hold and not res.consistent


def test_counterexample_frozen_values(found):
    assert found.atoms0 == ((0.1, 0.1), (0.2, 0.8), (0.9, 0.1))
    assert found.atoms1 == ((0.1, 0.6), (0.2, 0.1), (0.9, 0.3))
    assert found.thresholds == (0.2, 0.2)
    assert exact_rates(found) == pytest.approx((0.9, 0.4, 0.25 / 0.9, 0.29 / 0.4), abs=1e-15)


def test_shipped_fixture_matches_search(found):
    assert load_fig2_fixture() == found


def test_restricting_to_mlrp_pairs_finds_nothing():
    with pytest.raises(NotFound):
        find_fig2_counterexample(AtomGrid(mlrp_only=True))


def test_two_atom_shared_support_cannot_fool_the_test():
    # any pair on two shared points has a monotone ratio
    with pytest.raises(NotFound):
        find_fig2_counterexample(AtomGrid(n_atoms=2, mass_units=12))


def test_disjoint_supports_also_searched():
    grid = AtomGrid(risks=(0.2, 0.4, 0.6, 0.8), n_atoms=2, mass_units=6, thresholds=(0.4,), shared_support=False)
    inst = find_fig2_counterexample(grid)
    dr0, dr1, or0, or1 = exact_rates_fraction(inst)
    assert dr1 < dr0 and or1 > or0 and not mlrp_ordered(inst)


# -- expansion -----------------------------------------------------------


@given(st.integers(0, 2**32 - 1))
def test_expanded_sample_matches_exact_rates(seed):
    inst = random_mlrp_instance(np.random.default_rng(seed), max_atoms=5)
    k0, k1 = len(inst.atoms0), len(inst.atoms1)
    c0 = [int(m) for _, m in inst.atoms0]
    c1 = [int(m) for _, m in inst.atoms1]
    sample = expand_instance(inst, c0, c1)
    r0, r1 = estimate_rates(sample, 0), estimate_rates(sample, 1)
    dr0, dr1, or0, or1 = exact_rates(inst)
    assert abs(r0.decision_rate - dr0) <= 1e-12 and abs(r1.decision_rate - dr1) <= 1e-12
    assert abs(r0.outcome_rate - or0) <= 1e-12 and abs(r1.outcome_rate - or1) <= 1e-12
    assert len(sample) == sum(c0) + sum(c1) and k0 == k1
