"""Enumerations shared by the estimation and verdict layers."""

from __future__ import annotations

from enum import Enum


class DecisionPolarity(str, Enum):
    """Whether a positive decision helps (a loan) or burdens (a search) the person."""

    DESIRABLE = "desirable"
    UNDESIRABLE = "undesirable"


class Conclusion(str, Enum):
    HIGHER_THRESHOLD_G1 = "higher_threshold_g1"
    HIGHER_THRESHOLD_G0 = "higher_threshold_g0"
    INCONCLUSIVE = "inconclusive"

    def swapped(self) -> "Conclusion":
        if self is Conclusion.HIGHER_THRESHOLD_G1:
            return Conclusion.HIGHER_THRESHOLD_G0
        if self is Conclusion.HIGHER_THRESHOLD_G0:
            return Conclusion.HIGHER_THRESHOLD_G1
        return self


def discriminated_group(conclusion: Conclusion, polarity: DecisionPolarity) -> int | None:
    """Group held to the harsher standard implied by a threshold ordering.

    A higher bar for a desirable decision disadvantages that group; for an
    undesirable decision it is the group facing the *lower* bar.
    """
    if conclusion is Conclusion.INCONCLUSIVE:
        return None
    higher = 1 if conclusion is Conclusion.HIGHER_THRESHOLD_G1 else 0
    return higher if DecisionPolarity(polarity) is DecisionPolarity.DESIRABLE else 1 - higher


def conclusion_against(group: int, polarity: DecisionPolarity) -> Conclusion:
    """Inverse of :func:`discriminated_group`."""
    if group not in (0, 1):
        raise ValueError("group must be 0 or 1")
    higher = group if DecisionPolarity(polarity) is DecisionPolarity.DESIRABLE else 1 - group
    return Conclusion.HIGHER_THRESHOLD_G1 if higher == 1 else Conclusion.HIGHER_THRESHOLD_G0
