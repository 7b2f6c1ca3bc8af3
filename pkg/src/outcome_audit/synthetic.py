"""Seeded synthetic grouped samples.

Streams come from ``numpy.random.SeedSequence(seed).spawn(3)``: the first
assigns groups, the other two drive each group's risks, decisions and
outcomes.  PCG64 is the bit generator throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .distributions import RiskDistribution, distribution_from_dict
from .estimation import GroupedSample
from .policies import DecisionPolicy, apply, policy_from_dict

OUTCOME_MODELS = ("bernoulli_of_risk", "identity_utility")


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    dist0: RiskDistribution
    dist1: RiskDistribution
    group_share: float
    policy0: DecisionPolicy
    policy1: DecisionPolicy
    n_total: int
    outcome_model: str = "bernoulli_of_risk"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.group_share < 1.0:
            raise ValueError("group_share must lie in (0, 1)")
        if int(self.n_total) != self.n_total or self.n_total < 1:
            raise ValueError("n_total must be a positive integer")
        if self.outcome_model not in OUTCOME_MODELS:
            raise ValueError(f"outcome_model must be one of {OUTCOME_MODELS}")

    def to_dict(self) -> dict:
        return {
            "dist0": self.dist0.to_dict(),
            "dist1": self.dist1.to_dict(),
            "group_share": self.group_share,
            "policy0": self.policy0.to_dict(),
            "policy1": self.policy1.to_dict(),
            "n_total": int(self.n_total),
            "outcome_model": self.outcome_model,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorSpec":
        return cls(
            distribution_from_dict(data["dist0"]),
            distribution_from_dict(data["dist1"]),
            data["group_share"],
            policy_from_dict(data["policy0"]),
            policy_from_dict(data["policy1"]),
            data["n_total"],
            data.get("outcome_model", "bernoulli_of_risk"),
            data.get("seed", 0),
        )


def generate(spec: GeneratorSpec) -> GroupedSample:
    """Draw ``n_total`` rows; outcomes are recorded only for positive decisions."""
    s_group, s0, s1 = (np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(3))
    n = int(spec.n_total)
    group = (s_group.random(n) < spec.group_share).astype(np.int64)
    risk = np.empty(n)
    decision = np.zeros(n, dtype=np.int64)
    outcome = np.full(n, np.nan)
    for g, rng, dist, policy in ((0, s0, spec.dist0, spec.policy0), (1, s1, spec.dist1, spec.policy1)):
        idx = np.flatnonzero(group == g)
        r = np.asarray(dist.sample(rng, idx.size), dtype=float)
        p = np.asarray(apply(policy, r), dtype=float)
        d = (rng.random(idx.size) < p).astype(np.int64)
        if spec.outcome_model == "bernoulli_of_risk":
            y = (rng.random(idx.size) < np.clip(r, 0.0, 1.0)).astype(float)
        else:
            y = r.copy()
        y[d == 0] = np.nan
        risk[idx], decision[idx], outcome[idx] = r, d, y
    return GroupedSample(group, decision, outcome, risk)
