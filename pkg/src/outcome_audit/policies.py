"""Risk-decision curves ``d(u) = Pr(D = 1 | U = u)`` and the distributions they generate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import special

from .distributions import (
    Beta,
    Discrete,
    ExtendedDistribution,
    OrderingReport,
    Transform,
    Transformed,
    check_ordering,
)
from .errors import InvalidPolicy

# largest double below 1; a logistic curve never attains 1
_BELOW_ONE = float(np.nextafter(1.0, 0.0))
_MAX = float(np.finfo(float).max)
_SIGN = np.int64(-0x8000000000000000)
_MAGNITUDE = np.int64(0x7FFFFFFFFFFFFFFF)


@dataclass(frozen=True)
class Threshold:
    t: float
    kind: str = field(default="threshold", init=False)

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise InvalidPolicy("threshold must be finite")

    def __call__(self, u):
        return np.where(np.asarray(u, dtype=float) >= self.t, 1.0, 0.0)

    def to_dict(self):
        return {"kind": self.kind, "params": {"t": self.t}}


@dataclass(frozen=True)
class Logistic:
    """``1 / (1 + exp(-lam * (u - t)))``, kept strictly below 1."""

    t: float
    lam: float
    kind: str = field(default="logistic", init=False)

    def __post_init__(self):
        if not math.isfinite(self.t) or not (self.lam > 0 and math.isfinite(self.lam)):
            raise InvalidPolicy("logistic needs finite t and finite lam > 0")

    def __call__(self, u):
        with np.errstate(over="ignore"):
            z = self.lam * (np.asarray(u, dtype=float) - self.t)
        return np.minimum(special.expit(z), _BELOW_ONE)

    def to_dict(self):
        return {"kind": self.kind, "params": {"t": self.t, "lam": self.lam}}


@dataclass(frozen=True)
class BetaCdf:
    """Beta CDF with mean ``t`` and variance ``variance``; 0 below 0 and 1 above 1."""

    t: float
    variance: float
    kind: str = field(default="beta_cdf", init=False)

    def __post_init__(self):
        if not 0.0 < self.t < 1.0:
            raise InvalidPolicy("beta_cdf mean must lie in (0, 1)")
        if not 0.0 < self.variance < self.t * (1.0 - self.t):
            raise InvalidPolicy("beta_cdf variance must lie in (0, t(1-t))")

    @property
    def _scale(self) -> float:
        return self.t * (1.0 - self.t) / self.variance - 1.0

    @property
    def alpha(self) -> float:
        return self.t * self._scale

    @property
    def beta(self) -> float:
        return (1.0 - self.t) * self._scale

    def __call__(self, u):
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        return special.betainc(self.alpha, self.beta, u)

    def to_dict(self):
        return {"kind": self.kind, "params": {"t": self.t, "variance": self.variance}}


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous step curve: ``levels[i]`` on ``[breakpoints[i-1], breakpoints[i])``."""

    breakpoints: tuple
    levels: tuple
    kind: str = field(default="step", init=False)

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        lv = tuple(float(v) for v in self.levels)
        if len(lv) != len(bp) + 1:
            raise InvalidPolicy("need exactly one more level than breakpoints")
        if any(not math.isfinite(b) for b in bp) or any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise InvalidPolicy("breakpoints must be finite and strictly increasing")
        if any(not 0.0 <= v <= 1.0 for v in lv) or any(v1 < v0 for v0, v1 in zip(lv, lv[1:])):
            raise InvalidPolicy("levels must be non-decreasing values in [0, 1]")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "levels", lv)

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return self.breakpoints == other.breakpoints and self.levels == other.levels

    def __hash__(self):
        return hash((self.breakpoints, self.levels))

    def __call__(self, u):
        idx = np.searchsorted(np.asarray(self.breakpoints), np.asarray(u, dtype=float), side="right")
        return np.asarray(self.levels)[idx]

    def to_dict(self):
        return {"kind": self.kind, "params": {"breakpoints": list(self.breakpoints), "levels": list(self.levels)}}


DecisionPolicy = Union[Threshold, Logistic, BetaCdf, StepFunction]


def apply(policy: DecisionPolicy, u):
    out = policy(u)
    return float(out) if np.ndim(u) == 0 else out


def policy_from_dict(data: dict) -> DecisionPolicy:
    kind, p = data["kind"], data.get("params", {})
    if kind == "threshold":
        return Threshold(p["t"])
    if kind == "logistic":
        return Logistic(p["t"], p["lam"])
    if kind == "beta_cdf":
        return BetaCdf(p["t"], p["variance"])
    if kind == "step":
        return StepFunction(p["breakpoints"], p["levels"])
    raise InvalidPolicy(f"unknown policy kind {kind!r}")


def generated_distribution(policy: DecisionPolicy) -> ExtendedDistribution:
    """Distribution on the extended reals whose CDF is the policy curve."""
    if isinstance(policy, Threshold):
        return ExtendedDistribution(Discrete([policy.t], [1.0]))
    if isinstance(policy, Logistic):
        standard = Transformed(Beta(1.0, 1.0), Transform("logit"))
        return ExtendedDistribution(Transformed(standard, Transform("affine", 1.0 / policy.lam, policy.t)))
    if isinstance(policy, BetaCdf):
        return ExtendedDistribution(Beta(policy.alpha, policy.beta))
    if isinstance(policy, StepFunction):
        lv = np.asarray(policy.levels)
        jumps = np.diff(lv)
        low, high = lv[0], 1.0 - lv[-1]
        if np.any(jumps > 0):
            keep = jumps > 0
            core = Discrete(np.asarray(policy.breakpoints)[keep], jumps[keep])
        else:
            core = None
        return ExtendedDistribution(core, low, high)
    raise InvalidPolicy(f"unsupported policy {policy!r}")


def policies_mlrp_ordered(p0: DecisionPolicy, p1: DecisionPolicy, grid=None) -> OrderingReport:
    # point masses of two thresholds never overlap, so overlap is not required here
    return check_ordering(generated_distribution(p0), generated_distribution(p1), grid, require_overlap=False)


# --------------------------------------------------------------------------
# dyadic approximation


def _to_key(x) -> np.ndarray:
    bits = np.asarray(x, dtype=np.float64).view(np.int64)
    return np.where(bits < 0, -(bits & _MAGNITUDE), bits)


def _from_key(k) -> np.ndarray:
    k = np.asarray(k, dtype=np.int64)
    bits = np.where(k < 0, (-k) | _SIGN, k)
    return bits.view(np.float64)


def _midpoint(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    return (lo >> 1) + (hi >> 1) + (((lo & 1) + (hi & 1)) >> 1)


def _seeds(policy: DecisionPolicy, levels: np.ndarray) -> np.ndarray:
    if isinstance(policy, Threshold):
        return np.full(levels.shape, policy.t)
    if isinstance(policy, Logistic):
        with np.errstate(divide="ignore"):
            s = policy.t + special.logit(levels) / policy.lam
        return np.clip(np.nan_to_num(s, nan=policy.t), -_MAX, _MAX)
    if isinstance(policy, BetaCdf):
        return special.betaincinv(policy.alpha, policy.beta, levels)
    raise InvalidPolicy(f"no seed rule for {policy!r}")


def _search_breakpoints(policy: DecisionPolicy, levels: np.ndarray) -> np.ndarray:
    """Smallest double ``u`` with ``d(u) >= level``, for each level.

    Doubles are ordered through their integer bit patterns.  From an analytic
    seed the bracket is widened by doubling ulp steps, then bisected down to
    adjacent doubles, so the breakpoints are exact for the evaluated curve.
    """
    out = np.empty(levels.shape)
    top, bottom = float(policy(_MAX)), float(policy(-_MAX))
    plus = levels > top
    minus = (~plus) & (levels <= bottom)
    out[plus] = np.inf
    out[minus] = -np.inf
    todo = ~(plus | minus)
    if not np.any(todo):
        return out
    lv = levels[todo]
    lo_bound, hi_bound = _to_key(-_MAX), _to_key(_MAX)

    seed_key = _to_key(np.clip(_seeds(policy, lv), -_MAX, _MAX))
    above = policy(_from_key(seed_key)) >= lv
    lo = np.where(above, lo_bound, seed_key)
    hi = np.where(above, seed_key, hi_bound)

    # gallop outward from the seed until the bracket is known
    anchor = seed_key.copy()
    pending = np.ones(lv.shape, dtype=bool)
    step = np.int64(1)
    while np.any(pending):
        idx = np.flatnonzero(pending)
        a = anchor[idx]
        up = ~above[idx]
        cand = np.where(
            up,
            np.where(a > hi_bound - step, hi_bound, a + step),
            np.where(a < lo_bound + step, lo_bound, a - step),
        )
        val = policy(_from_key(cand)) >= lv[idx]
        crossed = np.where(up, val, ~val)
        hi[idx] = np.where(val, cand, hi[idx])
        lo[idx] = np.where(val, lo[idx], cand)
        pending[idx[crossed]] = False
        anchor[idx] = cand
        step = np.int64(min(int(step) * 2, 1 << 62))

    idx = np.flatnonzero(hi - lo > 1)
    while idx.size:
        mid = _midpoint(lo[idx], hi[idx])
        val = policy(_from_key(mid)) >= lv[idx]
        hi[idx] = np.where(val, mid, hi[idx])
        lo[idx] = np.where(val, lo[idx], mid)
        idx = idx[hi[idx] - lo[idx] > 1]
    out[todo] = _from_key(hi)
    return out


def _step_breakpoints(policy: StepFunction, levels: np.ndarray) -> np.ndarray:
    lv = np.asarray(policy.levels)
    bp = np.concatenate([[-np.inf], np.asarray(policy.breakpoints)])
    j = np.searchsorted(lv, levels, side="left")
    out = np.full(levels.shape, np.inf)
    ok = j < len(lv)
    out[ok] = bp[j[ok]]
    return out


@dataclass(frozen=True, eq=False)
class DyadicApproximation:
    """Step CDF ``F_n(u) = #{k : l(k, n) <= u} / 2^n`` built from the breakpoints ``l(k, n)``."""

    policy: DecisionPolicy
    level: int
    breakpoints: np.ndarray

    def cdf(self, u):
        counts = np.searchsorted(self.breakpoints, np.asarray(u, dtype=float), side="right")
        out = counts / float(2**self.level)
        return float(out) if np.ndim(u) == 0 else out

    def gap(self, u) -> np.ndarray:
        return np.asarray(self.policy(u), dtype=float) - np.asarray(self.cdf(u), dtype=float)

    def sup_gap(self, grid) -> float:
        return float(np.max(self.gap(np.asarray(grid, dtype=float))))


def dyadic_approximation(policy: DecisionPolicy, n: int) -> DyadicApproximation:
    """Breakpoints ``l(k, n) = inf{u : d(u) >= k / 2^n}`` for ``k = 1..2^n``.

    Levels the curve never reaches map to ``+inf``; levels already met as
    ``u -> -inf`` map to ``-inf``.
    """
    if int(n) != n or n < 1:
        raise ValueError("level n must be an integer >= 1")
    n = int(n)
    levels = np.arange(1, 2**n + 1, dtype=float) / float(2**n)
    if isinstance(policy, StepFunction):
        bps = _step_breakpoints(policy, levels)
    elif isinstance(policy, Threshold):
        bps = np.full(levels.shape, policy.t)
    else:
        bps = _search_breakpoints(policy, levels)
    bps = np.maximum.accumulate(bps)
    bps.setflags(write=False)
    return DyadicApproximation(policy, n, bps)
