"""Decision and outcome rates, their standard errors, and the joint test on the two differences."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import EmptyGroup, InputError, InsufficientPositives, UnavailableSE, ZeroSE
from .polarity import Conclusion, DecisionPolarity, conclusion_against

VARIANCE_DENOMINATORS = ("positives", "group")


@dataclass(frozen=True, eq=False)
class GroupedSample:
    """Unit-level records as parallel arrays; missing outcome or risk is ``nan``."""

    group: np.ndarray
    decision: np.ndarray
    outcome: np.ndarray
    risk: np.ndarray | None = None
    group_labels: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        g = np.asarray(self.group, dtype=np.int64).ravel()
        d = np.asarray(self.decision, dtype=np.int64).ravel()
        y = np.asarray(self.outcome, dtype=float).ravel()
        if not (g.shape == d.shape == y.shape):
            raise InputError("group, decision and outcome must have equal length")
        if np.any((g != 0) & (g != 1)):
            raise InputError("group must be coded 0/1")
        if np.any((d != 0) & (d != 1)):
            raise InputError("decision must be coded 0/1")
        r = None
        if self.risk is not None:
            r = np.asarray(self.risk, dtype=float).ravel()
            if r.shape != g.shape:
                raise InputError("risk must have one entry per row")
        for name, arr in (("group", g), ("decision", d), ("outcome", y), ("risk", r)):
            if arr is not None:
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        object.__setattr__(self, "group_labels", dict(self.group_labels))

    def __len__(self) -> int:
        return int(self.group.size)

    @property
    def has_risk(self) -> bool:
        return self.risk is not None and not np.any(np.isnan(self.risk))

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence], group_labels: Mapping[str, int] | None = None) -> "GroupedSample":
        """Build from ``(group, decision, outcome[, risk])`` tuples; ``None`` marks a missing value."""
        rows = list(rows)
        g = [r[0] for r in rows]
        d = [r[1] for r in rows]
        y = [np.nan if r[2] is None else r[2] for r in rows]
        with_risk = any(len(r) > 3 for r in rows)
        risk = [np.nan if len(r) < 4 or r[3] is None else r[3] for r in rows] if with_risk else None
        return cls(np.array(g, dtype=np.int64), np.array(d, dtype=np.int64), np.array(y, dtype=float), None if risk is None else np.array(risk, dtype=float), group_labels or {})

    def subset(self, mask) -> "GroupedSample":
        mask = np.asarray(mask, dtype=bool)
        return GroupedSample(
            self.group[mask],
            self.decision[mask],
            self.outcome[mask],
            None if self.risk is None else self.risk[mask],
            self.group_labels,
        )

    def swap_groups(self) -> "GroupedSample":
        labels = {k: 1 - v for k, v in self.group_labels.items()}
        return GroupedSample(1 - self.group, self.decision, self.outcome, self.risk, labels)


@dataclass(frozen=True)
class RateSummary:
    group: int
    n: int
    n_positive: int
    decision_rate: float
    outcome_rate: float
    outcome_variance: float | None
    se_decision_rate: float
    se_outcome_rate: float | None

    @property
    def has_se(self) -> bool:
        return self.se_outcome_rate is not None

    @classmethod
    def from_counts(
        cls,
        group: int,
        n: int,
        n_positive: int,
        outcome_sum: float,
        outcome_sum_sq: float,
        variance_denominator: str = "positives",
    ) -> "RateSummary":
        """Summary from pre-aggregated counts and outcome moments."""
        n, npos = int(n), int(n_positive)
        if n <= 0:
            raise EmptyGroup(f"group {group} has no rows")
        if npos < 0 or npos > n:
            raise InputError("need 0 <= n_positive <= n")
        if npos == 0:
            raise InsufficientPositives(f"group {group} has no positive decisions")
        mean = outcome_sum / npos
        ss = max(0.0, outcome_sum_sq - outcome_sum * outcome_sum / npos)
        return cls._build(group, n, npos, mean, ss, variance_denominator)

    @classmethod
    def _build(cls, group, n, npos, mean, ss, variance_denominator) -> "RateSummary":
        if variance_denominator not in VARIANCE_DENOMINATORS:
            raise ValueError(f"variance_denominator must be one of {VARIANCE_DENOMINATORS}")
        dr = npos / n
        se_dr = math.sqrt(dr * (1.0 - dr) / n)
        denom = npos - 1 if variance_denominator == "positives" else n - 1
        if npos < 2 or denom < 1:
            var, se_or = None, None
        else:
            var = ss / denom
            se_or = math.sqrt(var / npos)
        return cls(group, n, npos, dr, mean, var, se_dr, se_or)

    def to_dict(self) -> dict:
        return {
            "group": self.group,
            "n": self.n,
            "n_positive": self.n_positive,
            "decision_rate": self.decision_rate,
            "outcome_rate": self.outcome_rate,
            "outcome_variance": self.outcome_variance,
            "se_decision_rate": self.se_decision_rate,
            "se_outcome_rate": self.se_outcome_rate,
        }


def _centered_moments(y: np.ndarray) -> tuple[float, float]:
    # shift by the first value so constant samples give exactly zero spread
    shift = float(y[0])
    dev = y - shift
    m = math.fsum(dev) / y.size
    ss = math.fsum((dev - m) ** 2)
    return shift + m, ss


def estimate_rates(sample: GroupedSample, group: int, variance_denominator: str = "positives") -> RateSummary:
    """Rates for one group.

    ``variance_denominator="positives"`` divides the squared outcome deviations
    by ``n_positive - 1``; ``"group"`` divides by ``n - 1`` instead.  With a
    single positive decision the outcome SE is reported as unavailable.
    """
    mask = sample.group == group
    n = int(np.count_nonzero(mask))
    if n == 0:
        raise EmptyGroup(f"group {group} has no rows")
    pos = mask & (sample.decision == 1)
    npos = int(np.count_nonzero(pos))
    if npos == 0:
        raise InsufficientPositives(f"group {group} has no positive decisions")
    y = sample.outcome[pos]
    if np.any(np.isnan(y)):
        raise InputError("outcome missing for a positive decision")
    mean, ss = _centered_moments(y)
    return RateSummary._build(group, n, npos, mean, ss, variance_denominator)


@dataclass(frozen=True)
class DeltaEstimates:
    """Group-1 minus group-0 differences, with standard errors when available."""

    delta_dr: float
    delta_or: float
    se_delta_dr: float | None = None
    se_delta_or: float | None = None

    @classmethod
    def point(cls, s0: RateSummary, s1: RateSummary) -> "DeltaEstimates":
        return cls(s1.decision_rate - s0.decision_rate, s1.outcome_rate - s0.outcome_rate)

    @property
    def has_se(self) -> bool:
        return self.se_delta_dr is not None and self.se_delta_or is not None

    def swapped(self) -> "DeltaEstimates":
        return DeltaEstimates(-self.delta_dr, -self.delta_or, self.se_delta_dr, self.se_delta_or)

    def to_dict(self) -> dict:
        return {
            "delta_dr": self.delta_dr,
            "delta_or": self.delta_or,
            "se_delta_dr": self.se_delta_dr,
            "se_delta_or": self.se_delta_or,
        }


def delta_with_errors(s0: RateSummary, s1: RateSummary) -> DeltaEstimates:
    """Differences with SEs combined in quadrature (groups treated as independent)."""
    if not (s0.has_se and s1.has_se):
        raise UnavailableSE("an outcome-rate standard error is unavailable")
    return DeltaEstimates(
        s1.decision_rate - s0.decision_rate,
        s1.outcome_rate - s0.outcome_rate,
        math.hypot(s0.se_decision_rate, s1.se_decision_rate),
        math.hypot(s0.se_outcome_rate, s1.se_outcome_rate),
    )


def chi2_2df_quantile(alpha: float) -> float:
    """Upper-``alpha`` point of chi-square with 2 degrees of freedom."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return -2.0 * math.log(alpha)


@dataclass(frozen=True)
class ConfidenceRegion:
    center: tuple[float, float]
    axes: tuple[float, float]
    radius_squared: float
    alpha: float

    def statistic(self, point: Sequence[float]) -> float:
        total = 0.0
        for x, c, s in zip(point, self.center, self.axes):
            diff = x - c
            if s == 0.0:
                # a collapsed axis admits only its own center
                total += 0.0 if diff == 0.0 else math.inf
            else:
                total += (diff / s) ** 2
        return total

    def contains(self, point: Sequence[float]) -> bool:
        return self.statistic(point) <= self.radius_squared

    def to_dict(self) -> dict:
        return {
            "center": list(self.center),
            "axes": list(self.axes),
            "radius_squared": self.radius_squared,
            "alpha": self.alpha,
        }


def confidence_region(delta: DeltaEstimates, alpha: float) -> ConfidenceRegion:
    """Axis-aligned ellipse ``sum(((x - center) / se)^2) <= -2 ln(alpha)``."""
    if not delta.has_se:
        raise UnavailableSE("confidence region needs standard errors")
    if delta.se_delta_dr == 0.0 and delta.se_delta_or == 0.0:
        raise ZeroSE("both standard errors are zero")
    return ConfidenceRegion(
        (delta.delta_dr, delta.delta_or),
        (delta.se_delta_dr, delta.se_delta_or),
        chi2_2df_quantile(alpha),
        alpha,
    )


def one_tailed_p(value: float, se: float, sign: int) -> float:
    """``Pr(Z >= sign * value / se)`` under a normal null centred at zero."""
    if se <= 0.0:
        raise ZeroSE("standard error is zero")
    return float(stats.norm.sf(sign * value / se))


def directional_p_values(delta: DeltaEstimates, direction: Conclusion) -> tuple[float, float]:
    """One-tailed p-values for the decision-rate and outcome-rate conditions of ``direction``."""
    if not delta.has_se:
        raise UnavailableSE("p-values need standard errors")
    if direction is Conclusion.HIGHER_THRESHOLD_G1:
        s_dr, s_or = -1, 1
    elif direction is Conclusion.HIGHER_THRESHOLD_G0:
        s_dr, s_or = 1, -1
    else:
        raise ValueError("direction must name a threshold ordering")
    return (
        one_tailed_p(delta.delta_dr, delta.se_delta_dr, s_dr),
        one_tailed_p(delta.delta_or, delta.se_delta_or, s_or),
    )


def robust_p_value(
    delta: DeltaEstimates,
    polarity: DecisionPolarity = DecisionPolarity.DESIRABLE,
    against: int | None = None,
) -> float:
    """Larger of the two one-tailed p-values behind a robust conclusion.

    ``against`` names the group alleged to be disadvantaged; ``polarity`` maps
    it to a threshold ordering.  Without it the better-supported ordering is
    tested.
    """
    if not delta.has_se:
        raise UnavailableSE("p-values need standard errors")
    if delta.se_delta_dr == 0.0 or delta.se_delta_or == 0.0:
        raise ZeroSE("standard errors must be positive")
    if against is not None:
        return max(directional_p_values(delta, conclusion_against(against, polarity)))
    return min(
        max(directional_p_values(delta, Conclusion.HIGHER_THRESHOLD_G1)),
        max(directional_p_values(delta, Conclusion.HIGHER_THRESHOLD_G0)),
    )
