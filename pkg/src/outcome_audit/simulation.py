"""Percentile sweeps of group-specific policies over a risk population.

For each pair of percentiles ``(i, j)`` group 0 uses the policy centred at the
``i``-th pooled risk percentile and group 1 the one at the ``j``-th.  Rates only
depend on a group's own policy, so each group's rates are computed once per
percentile and the grid is their outer difference.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .distributions import Beta, Discrete, Empirical, RiskDistribution, _GRID_TAIL, discretize
from .errors import EmptyGroup, InvalidPolicy, MissingRiskScores, ZeroDecisionMass
from .estimation import GroupedSample
from .policies import BetaCdf, DecisionPolicy, apply
from .polarity import Conclusion, DecisionPolarity

FAMILIES = ("threshold", "beta_cdf")
BASES = ("pooled", "per_group")
DEFAULT_PERCENTILES = tuple(range(1, 100))
_TIE_SLACK = 1e-12

# integer codes for verdict matrices
INCONCLUSIVE, G1_HIGHER, G0_HIGHER, EQUAL = 0, 1, 2, 3
_LABELS = {
    INCONCLUSIVE: Conclusion.INCONCLUSIVE.value,
    G1_HIGHER: Conclusion.HIGHER_THRESHOLD_G1.value,
    G0_HIGHER: Conclusion.HIGHER_THRESHOLD_G0.value,
    EQUAL: "equal",
}


def rates_under_policy(risks, policy: DecisionPolicy) -> tuple[float, float]:
    """Decision and outcome rates of one group.

    ``risks`` is a pair ``(values, weights)``.
    """
    values, weights = (np.asarray(a, dtype=float) for a in risks)
    if np.any(weights < 0) or not weights.sum() > 0:
        raise ValueError("weights must be non-negative with positive total")
    d = np.asarray(apply(policy, values), dtype=float)
    decided = math.fsum(weights * d)
    if decided <= 0.0:
        raise ZeroDecisionMass("no decision mass under this policy")
    return decided / math.fsum(weights), math.fsum(weights * d * values) / decided


@dataclass(frozen=True, eq=False)
class SimulationConfig:
    dist0: RiskDistribution | None = None
    dist1: RiskDistribution | None = None
    group_share: float = 0.5
    sample: GroupedSample | None = None
    family: str = "threshold"
    percentiles: tuple = DEFAULT_PERCENTILES
    polarity: DecisionPolarity = DecisionPolarity.DESIRABLE
    seed: int = 0
    variance: float | None = None
    percentile_basis: str = "pooled"
    bins: int = 1000

    def __post_init__(self):
        if (self.sample is None) == (self.dist0 is None or self.dist1 is None):
            raise ValueError("give either two distributions or a sample, not both")
        if self.sample is None and not 0.0 < self.group_share < 1.0:
            raise ValueError("group_share must lie in (0, 1)")
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.percentile_basis not in BASES:
            raise ValueError(f"percentile_basis must be one of {BASES}")
        pct = tuple(self.percentiles)
        if not pct or any(not 0 < p < 100 for p in pct):
            raise ValueError("percentiles must lie strictly between 0 and 100")
        object.__setattr__(self, "percentiles", pct)
        object.__setattr__(self, "polarity", DecisionPolarity(self.polarity))


def _common_edges(d0: RiskDistribution, d1: RiskDistribution, bins: int) -> np.ndarray:
    lo = min(d0.support()[0], d1.support()[0])
    hi = max(d0.support()[1], d1.support()[1])
    if not np.isfinite(lo):
        lo = min(float(d0.ppf(_GRID_TAIL)), float(d1.ppf(_GRID_TAIL)))
    if not np.isfinite(hi):
        hi = max(float(d0.ppf(1 - _GRID_TAIL)), float(d1.ppf(1 - _GRID_TAIL)))
    return np.linspace(lo, hi, bins + 1)


def group_atoms(config: SimulationConfig) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray], float]:
    """Risk atoms ``(values, masses)`` per group and the group-1 share."""
    if config.sample is not None:
        s = config.sample
        if s.risk is None or np.any(np.isnan(s.risk)):
            raise MissingRiskScores("simulation needs a risk score on every row")
        parts = []
        for g in (0, 1):
            r = s.risk[s.group == g]
            if r.size == 0:
                raise EmptyGroup(f"group {g} has no rows")
            parts.append(Empirical(r).atoms())
        share = float(np.mean(s.group == 1))
        return parts[0], parts[1], share
    d0, d1 = config.dist0, config.dist1
    if d0.is_discrete and d1.is_discrete:
        return d0.atoms(), d1.atoms(), config.group_share
    edges = _common_edges(d0, d1, config.bins)
    a0 = d0.atoms() if d0.is_discrete else discretize(d0, edges).atoms()
    a1 = d1.atoms() if d1.is_discrete else discretize(d1, edges).atoms()
    return a0, a1, config.group_share


def pooled_atoms(a0, a1, share: float) -> tuple[np.ndarray, np.ndarray]:
    xs = np.concatenate([a0[0], a1[0]])
    ms = np.concatenate([(1.0 - share) * a0[1], share * a1[1]])
    order = np.argsort(xs, kind="stable")
    xs, ms = xs[order], ms[order]
    ux, start = np.unique(xs, return_index=True)
    return ux, np.add.reduceat(ms, start)


def lower_percentiles(xs: np.ndarray, ms: np.ndarray, percentiles: Sequence[float]) -> np.ndarray:
    """Smallest atom whose cumulative mass reaches each percentile."""
    cum = np.cumsum(ms) / math.fsum(ms)
    q = np.asarray(percentiles, dtype=float) / 100.0
    idx = np.searchsorted(cum, q - _TIE_SLACK, side="left")
    return xs[np.clip(idx, 0, xs.size - 1)]


def _atom_sd(xs: np.ndarray, ms: np.ndarray) -> float:
    w = ms / math.fsum(ms)
    m = math.fsum(w * xs)
    return math.sqrt(max(0.0, math.fsum(w * (xs - m) ** 2)))


def _rate_vectors(atoms, thresholds: np.ndarray, family: str, variance: float | None):
    """Decision/outcome rate per threshold for one group; ``nan`` where undefined."""
    xs, ms = atoms
    ms = ms / math.fsum(ms)
    k = thresholds.size
    dr = np.full(k, np.nan)
    orate = np.full(k, np.nan)
    if family == "threshold":
        # tail sums over sorted atoms are exact and monotone in the threshold
        tail_m = np.concatenate([np.cumsum(ms[::-1])[::-1], [0.0]])
        tail_mx = np.concatenate([np.cumsum((ms * xs)[::-1])[::-1], [0.0]])
        idx = np.searchsorted(xs, thresholds, side="left")
        mass = tail_m[idx]
        ok = mass > 0
        dr[ok] = mass[ok]
        orate[ok] = tail_mx[idx][ok] / mass[ok]
        return dr, orate
    for i, t in enumerate(thresholds):
        try:
            policy = BetaCdf(float(t), variance)
        except InvalidPolicy:
            continue
        d = special.betainc(policy.alpha, policy.beta, np.clip(xs, 0.0, 1.0))
        mass = float(np.dot(ms, d))
        if mass > 0:
            dr[i] = mass
            orate[i] = float(np.dot(ms * d, xs)) / mass
    return dr, orate


@dataclass(frozen=True, eq=False)
class SimulationGrid:
    percentiles: tuple
    t0: np.ndarray
    t1: np.ndarray
    delta_dr: np.ndarray
    delta_or: np.ndarray
    robust: np.ndarray
    standard: np.ndarray
    benchmark: np.ndarray
    truth: np.ndarray
    degenerate: np.ndarray
    family: str = "threshold"
    polarity: DecisionPolarity = DecisionPolarity.DESIRABLE
    variance: float | None = None

    @property
    def size(self) -> int:
        return int(self.robust.size)

    def wrong(self, verdicts: np.ndarray) -> np.ndarray:
        return (verdicts != INCONCLUSIVE) & (verdicts != self.truth)

    def summary(self) -> dict:
        diag = np.eye(len(self.percentiles), dtype=bool)
        out = {"cells": self.size, "degenerate": int(self.degenerate.sum())}
        for name, v in (("robust", self.robust), ("standard", self.standard), ("benchmark", self.benchmark)):
            out[f"{name}_conclusive"] = int(np.count_nonzero(v != INCONCLUSIVE))
            out[f"{name}_wrong"] = int(np.count_nonzero(self.wrong(v)))
        out["robust_diagonal_conclusive"] = int(np.count_nonzero((self.robust != INCONCLUSIVE) & diag))
        return out

    def rows(self):
        for i, p0 in enumerate(self.percentiles):
            for j, p1 in enumerate(self.percentiles):
                yield {
                    "percentile_g0": p0,
                    "percentile_g1": p1,
                    "t_g0": float(self.t0[i]),
                    "t_g1": float(self.t1[j]),
                    "delta_dr": float(self.delta_dr[i, j]),
                    "delta_or": float(self.delta_or[i, j]),
                    "robust": _LABELS[int(self.robust[i, j])],
                    "standard": _LABELS[int(self.standard[i, j])],
                    "benchmark": _LABELS[int(self.benchmark[i, j])],
                    "truth": _LABELS[int(self.truth[i, j])],
                }


GRID_COLUMNS = (
    "percentile_g0",
    "percentile_g1",
    "t_g0",
    "t_g1",
    "delta_dr",
    "delta_or",
    "robust",
    "standard",
    "benchmark",
    "truth",
)


def _sign_codes(values: np.ndarray, g1_when_negative: bool) -> np.ndarray:
    neg, pos = values < 0, values > 0
    g1 = neg if g1_when_negative else pos
    g0 = pos if g1_when_negative else neg
    return np.where(g1, G1_HIGHER, np.where(g0, G0_HIGHER, INCONCLUSIVE))


def sweep(config: SimulationConfig) -> SimulationGrid:
    """Evaluate all three tests on every percentile pair (point-estimate mode)."""
    a0, a1, share = group_atoms(config)
    pooled = pooled_atoms(a0, a1, share)
    pct = config.percentiles
    if config.percentile_basis == "pooled":
        t0 = t1 = lower_percentiles(*pooled, pct)
    else:
        t0 = lower_percentiles(*a0, pct)
        t1 = lower_percentiles(*a1, pct)
    variance = config.variance
    if config.family == "beta_cdf" and variance is None:
        variance = (_atom_sd(*pooled) / 2.0) ** 2

    dr0, or0 = _rate_vectors(a0, np.asarray(t0), config.family, variance)
    dr1, or1 = _rate_vectors(a1, np.asarray(t1), config.family, variance)
    ddr = dr1[None, :] - dr0[:, None]
    dor = or1[None, :] - or0[:, None]
    degenerate = np.isnan(ddr) | np.isnan(dor)

    bench = _sign_codes(ddr, True)
    std = _sign_codes(dor, False)
    robust = np.where((bench == std) & (bench != INCONCLUSIVE), bench, INCONCLUSIVE)
    for m in (bench, std, robust):
        m[degenerate] = INCONCLUSIVE

    tt0, tt1 = np.asarray(t0)[:, None], np.asarray(t1)[None, :]
    truth = np.where(tt1 > tt0, G1_HIGHER, np.where(tt1 < tt0, G0_HIGHER, EQUAL))
    truth = np.broadcast_to(truth, ddr.shape).copy()
    return SimulationGrid(
        tuple(pct),
        np.asarray(t0, dtype=float),
        np.asarray(t1, dtype=float),
        ddr,
        dor,
        robust,
        std,
        bench,
        truth,
        degenerate,
        config.family,
        config.polarity,
        variance,
    )


def write_grid_csv(grid: SimulationGrid, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GRID_COLUMNS)
        for row in grid.rows():
            w.writerow([_fmt(row[c]) for c in GRID_COLUMNS])


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


# --------------------------------------------------------------------------
# presets


@dataclass(frozen=True)
class Preset:
    name: str
    dist0: RiskDistribution
    dist1: RiskDistribution
    group_share: float
    description: str = ""


def perturb_masses(dist: Discrete, rel: float, seed: int) -> Discrete:
    """Multiply each mass by an independent factor in ``[1 - rel, 1 + rel]`` and renormalize."""
    rng = np.random.default_rng(seed)
    xs, ms = dist.atoms()
    factors = rng.uniform(1.0 - rel, 1.0 + rel, size=ms.size)
    return Discrete(xs, ms * factors)


_BASE_PAIRS = {
    # (group 0, group 1, share of group 1); each pair is likelihood-ratio ordered
    "base_rate_gap": (Beta(4.0, 6.0), Beta(2.0, 8.0), 0.3),
    "mild_gap": (Beta(3.0, 7.0), Beta(2.5, 7.5), 0.5),
    "wide_gap": (Beta(6.0, 4.0), Beta(2.0, 6.0), 0.4),
}
PRESET_BINS = 1000


def _discrete_pair(d0: RiskDistribution, d1: RiskDistribution, bins: int):
    edges = np.linspace(0.0, 1.0, bins + 1)
    return discretize(d0, edges), discretize(d1, edges)


def preset(name: str, bins: int = PRESET_BINS, seed: int = 0) -> Preset:
    """Named risk pair; ``<name>_perturbed`` jitters group 1's masses by up to 10%."""
    base, _, suffix = name.partition("_perturbed")
    perturbed = name.endswith("_perturbed")
    if base not in _BASE_PAIRS or (suffix and not perturbed):
        raise KeyError(f"unknown preset {name!r}; choose from {preset_names()}")
    d0, d1, share = _BASE_PAIRS[base]
    q0, q1 = _discrete_pair(d0, d1, bins)
    if perturbed:
        q1 = perturb_masses(q1, 0.10, seed)
        desc = f"{base} with group-1 masses perturbed by up to 10%"
    else:
        desc = f"Beta pair {d0.to_dict()['params']} / {d1.to_dict()['params']}"
    return Preset(name, q0, q1, share, desc)


def preset_names() -> list[str]:
    names = list(_BASE_PAIRS)
    return names + [f"{n}_perturbed" for n in names]


def preset_config(name: str, family: str = "threshold", seed: int = 0, **kw) -> SimulationConfig:
    p = preset(name, seed=seed)
    return SimulationConfig(dist0=p.dist0, dist1=p.dist1, group_share=p.group_share, family=family, seed=seed, **kw)
