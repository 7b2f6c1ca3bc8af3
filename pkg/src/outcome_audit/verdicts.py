"""Benchmark, standard outcome and robust outcome verdicts."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import UnavailableSE
from .estimation import DeltaEstimates, directional_p_values, one_tailed_p, robust_p_value
from .polarity import Conclusion, DecisionPolarity, discriminated_group

__all__ = [
    "Conclusion",
    "DecisionPolarity",
    "Mode",
    "POINT",
    "TestKind",
    "Verdict",
    "benchmark_test",
    "robust_outcome_test",
    "standard_outcome_test",
]


class TestKind(str, Enum):
    __test__ = False

    BENCHMARK = "benchmark"
    STANDARD_OUTCOME = "standard_outcome"
    ROBUST = "robust"


@dataclass(frozen=True)
class Mode:
    """Point-estimate mode when ``alpha`` is ``None``, otherwise significance at ``alpha``."""

    alpha: float | None = None

    def __post_init__(self):
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")

    @property
    def is_point(self) -> bool:
        return self.alpha is None

    @classmethod
    def significance(cls, alpha: float) -> "Mode":
        return cls(alpha)

    def to_dict(self) -> dict:
        return {"name": "point" if self.alpha is None else "significance", "alpha": self.alpha}


POINT = Mode()


@dataclass(frozen=True)
class Verdict:
    test: TestKind
    conclusion: Conclusion
    discrimination_against: int | None
    mode: Mode
    p_value: float | None = None

    @property
    def conclusive(self) -> bool:
        return self.conclusion is not Conclusion.INCONCLUSIVE

    def to_dict(self) -> dict:
        against = "none" if self.discrimination_against is None else f"group{self.discrimination_against}"
        return {
            "test": self.test.value,
            "conclusion": self.conclusion.value,
            "discrimination_against": against,
            "p_value": self.p_value,
            "mode": self.mode.to_dict(),
        }


def _sign_conclusion(value: float, g1_when_negative: bool) -> Conclusion:
    if value == 0.0 or value != value:
        return Conclusion.INCONCLUSIVE
    negative = value < 0.0
    return Conclusion.HIGHER_THRESHOLD_G1 if negative == g1_when_negative else Conclusion.HIGHER_THRESHOLD_G0


def _single(test, value, se, g1_when_negative, mode, polarity) -> Verdict:
    conclusion = _sign_conclusion(value, g1_when_negative)
    p = None
    if not mode.is_point:
        if se is None:
            raise UnavailableSE("significance mode needs standard errors")
        sign = 1 if value > 0 else -1
        p = one_tailed_p(value, se, sign) if value != 0.0 else 0.5
        if p > mode.alpha:
            conclusion = Conclusion.INCONCLUSIVE
    return Verdict(test, conclusion, discriminated_group(conclusion, polarity), mode, p)


def benchmark_test(
    delta: DeltaEstimates, mode: Mode = POINT, polarity: DecisionPolarity = DecisionPolarity.DESIRABLE
) -> Verdict:
    """A lower decision rate for group 1 points to a higher group-1 threshold."""
    return _single(TestKind.BENCHMARK, delta.delta_dr, delta.se_delta_dr, True, mode, polarity)


def standard_outcome_test(
    delta: DeltaEstimates, mode: Mode = POINT, polarity: DecisionPolarity = DecisionPolarity.DESIRABLE
) -> Verdict:
    """A higher outcome rate for group 1 points to a higher group-1 threshold."""
    return _single(TestKind.STANDARD_OUTCOME, delta.delta_or, delta.se_delta_or, False, mode, polarity)


def robust_outcome_test(
    delta: DeltaEstimates, polarity: DecisionPolarity = DecisionPolarity.DESIRABLE, mode: Mode = POINT
) -> Verdict:
    """Conclude only when the benchmark and outcome tests point the same way.

    Group 1 faces the higher threshold when its decision rate is strictly lower
    and its outcome rate strictly higher; the mirrored pattern gives group 0.
    In significance mode the larger one-tailed p-value must also clear ``alpha``.
    """
    dr, dor = delta.delta_dr, delta.delta_or
    if dr < 0.0 and dor > 0.0:
        conclusion = Conclusion.HIGHER_THRESHOLD_G1
    elif dr > 0.0 and dor < 0.0:
        conclusion = Conclusion.HIGHER_THRESHOLD_G0
    else:
        conclusion = Conclusion.INCONCLUSIVE
    p = None
    if not mode.is_point:
        if conclusion is Conclusion.INCONCLUSIVE:
            p = robust_p_value(delta, polarity)
        else:
            p = max(directional_p_values(delta, conclusion))
        if p > mode.alpha:
            conclusion = Conclusion.INCONCLUSIVE
    return Verdict(TestKind.ROBUST, conclusion, discriminated_group(conclusion, polarity), mode, p)
