"""How far a sample's group-membership curve ``Pr(G = 1 | R)`` is from monotone."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import PosteriorBin, binned_posterior
from .errors import InsufficientBins
from .estimation import GroupedSample


def pava(y, w=None) -> np.ndarray:
    """Weighted least-squares non-decreasing fit (pool adjacent violators)."""
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float)
    means: list[float] = []
    weights: list[float] = []
    sizes: list[int] = []
    for yi, wi in zip(y, w):
        means.append(yi)
        weights.append(wi)
        sizes.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            wt = weights[-2] + weights[-1]
            m = (means[-2] * weights[-2] + means[-1] * weights[-1]) / wt
            size = sizes[-2] + sizes[-1]
            del means[-1], weights[-1], sizes[-1]
            means[-1], weights[-1], sizes[-1] = m, wt, size
    return np.repeat(means, sizes)


def _weighted_mad(a: np.ndarray, b: np.ndarray, w: np.ndarray) -> float:
    return math.fsum(w * np.abs(a - b)) / math.fsum(w)


@dataclass(frozen=True, eq=False)
class MonotonicityReport:
    curve: tuple
    direction: str
    violation_score: float
    isotonic_fit: np.ndarray
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "violation_score": self.violation_score,
            "degenerate": self.degenerate,
            "curve": [
                {"midpoint": b.midpoint, "share_group1": b.share_group1, "count": b.count, "fit": float(f)}
                for b, f in zip(self.curve, self.isotonic_fit)
            ],
        }


def score_curve(values, weights) -> tuple[str, float, np.ndarray, bool]:
    """Direction, normalized deviation score, fitted curve and degeneracy flag.

    The score is the weighted mean absolute gap between the curve and its best
    monotone fit, relative to the curve's weighted mean absolute deviation from
    its own weighted mean, capped at 1.
    """
    y = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    inc = pava(y, w)
    dec = -pava(-y, w)
    dev_inc, dev_dec = _weighted_mad(y, inc, w), _weighted_mad(y, dec, w)
    direction, fit, dev = ("increasing", inc, dev_inc) if dev_inc <= dev_dec else ("decreasing", dec, dev_dec)
    centre = math.fsum(w * y) / math.fsum(w)
    spread = _weighted_mad(y, np.full_like(y, centre), w)
    if spread == 0.0:
        return direction, 0.0, fit, True
    return direction, min(1.0, dev / spread), fit, False


def monotonicity_violation(sample: GroupedSample, bins: int, min_count: int = 50) -> MonotonicityReport:
    curve: list[PosteriorBin] = binned_posterior(sample, bins, min_count)
    if len(curve) < 2:
        raise InsufficientBins(f"only {len(curve)} bin(s) left after merging")
    direction, score, fit, degenerate = score_curve([b.share_group1 for b in curve], [b.count for b in curve])
    return MonotonicityReport(tuple(curve), direction, score, fit, degenerate)
