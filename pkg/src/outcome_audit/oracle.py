"""Exact ground truth on small discrete instances.

Rates are computed with :class:`fractions.Fraction` so that the sign tests
behind the robust verdict see no rounding at all.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Iterator, Sequence

import numpy as np

from .distributions import Beta, Discrete, Order
from .errors import AssumptionViolation, NotFound
from .estimation import DeltaEstimates, GroupedSample
from .policies import BetaCdf, policies_mlrp_ordered
from .polarity import Conclusion
from .verdicts import robust_outcome_test


@dataclass(frozen=True)
class DiscreteInstance:
    """Two groups' risk atoms ``(risk, mass)`` under thresholds ``(t0, t1)``."""

    atoms0: tuple
    atoms1: tuple
    group_share: float
    thresholds: tuple

    def __post_init__(self):
        a0 = _clean_atoms(self.atoms0, "group 0")
        a1 = _clean_atoms(self.atoms1, "group 1")
        object.__setattr__(self, "atoms0", a0)
        object.__setattr__(self, "atoms1", a1)
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if len(self.thresholds) != 2:
            raise ValueError("need one threshold per group")
        if not 0.0 < self.group_share < 1.0:
            raise AssumptionViolation("group share must lie strictly between 0 and 1")
        for g, atoms in ((0, a0), (1, a1)):
            t = self.thresholds[g]
            if not any(x >= t and m > 0 for x, m in atoms):
                raise AssumptionViolation(f"group {g} has no mass at or above its threshold {t}")

    def distribution(self, group: int) -> Discrete:
        atoms = self.atoms0 if group == 0 else self.atoms1
        xs = [x for x, _ in atoms]
        ms = [m for _, m in atoms]
        return Discrete(xs, ms)

    def to_dict(self) -> dict:
        return {
            "atoms0": [list(a) for a in self.atoms0],
            "atoms1": [list(a) for a in self.atoms1],
            "group_share": self.group_share,
            "thresholds": list(self.thresholds),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteInstance":
        return cls(
            tuple(tuple(a) for a in data["atoms0"]),
            tuple(tuple(a) for a in data["atoms1"]),
            data["group_share"],
            tuple(data["thresholds"]),
        )


def _clean_atoms(atoms, what: str) -> tuple:
    # masses are kept as given; every rate is a ratio, so only proportions matter
    merged: dict[float, float] = {}
    for x, m in atoms:
        x, m = float(x), float(m)
        if not np.isfinite(x) or not np.isfinite(m) or m < 0:
            raise ValueError(f"{what}: atoms need finite risk and non-negative mass")
        merged[x] = merged.get(x, 0.0) + m
    if sum(merged.values()) <= 0:
        raise AssumptionViolation(f"{what} has no mass")
    return tuple(sorted(merged.items()))


def _exact_group_rates(atoms, t: float) -> tuple[Fraction, Fraction]:
    total = sum(Fraction(m) for _, m in atoms)
    above = [(Fraction(x), Fraction(m)) for x, m in atoms if x >= t]
    mass = sum(m for _, m in above)
    return mass / total, sum(x * m for x, m in above) / mass


def exact_rates_fraction(instance: DiscreteInstance) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    dr0, or0 = _exact_group_rates(instance.atoms0, instance.thresholds[0])
    dr1, or1 = _exact_group_rates(instance.atoms1, instance.thresholds[1])
    return dr0, dr1, or0, or1


def exact_rates(instance: DiscreteInstance) -> tuple[float, float, float, float]:
    """``(DR0, DR1, OR0, OR1)`` by exact enumeration of atoms."""
    return tuple(float(v) for v in exact_rates_fraction(instance))


@dataclass(frozen=True)
class PropositionCheck:
    consistent: bool
    premises_hold: bool
    mlrp_ordered: bool
    witness: dict | None = None


def _exact_monotone(a: list, b: list) -> bool:
    """Whether ``a_i / b_i`` is monotone (``x / 0 = +inf``), skipping points where both vanish."""
    pts = [(p, q) for p, q in zip(a, b) if p or q]
    up = all(p0 * q1 <= p1 * q0 for (p0, q0), (p1, q1) in zip(pts, pts[1:]))
    down = all(p0 * q1 >= p1 * q0 for (p0, q0), (p1, q1) in zip(pts, pts[1:]))
    return up or down


def mlrp_ordered(instance: DiscreteInstance) -> bool:
    """Exact likelihood-ratio check on the union of both supports."""
    m0, m1 = dict(instance.atoms0), dict(instance.atoms1)
    xs = sorted(set(m0) | set(m1))
    a = [Fraction(m0.get(x, 0.0)) for x in xs]
    b = [Fraction(m1.get(x, 0.0)) for x in xs]
    return _exact_monotone(a, b)


def verify_proposition(instance: DiscreteInstance) -> PropositionCheck:
    """Flag a violation when lower decision and higher outcome rates coexist with a non-higher threshold."""
    dr0, dr1, or0, or1 = exact_rates_fraction(instance)
    t0, t1 = instance.thresholds
    g1_premise = dr1 < dr0 and or1 > or0
    g0_premise = dr0 < dr1 and or0 > or1
    violated = (g1_premise and not t1 > t0) or (g0_premise and not t0 > t1)
    witness = None
    if violated:
        witness = {
            "instance": instance.to_dict(),
            "rates": [float(dr0), float(dr1), float(or0), float(or1)],
            "premise": "group1_higher" if g1_premise else "group0_higher",
        }
    return PropositionCheck(not violated, g1_premise or g0_premise, mlrp_ordered(instance), witness)


# --------------------------------------------------------------------------
# randomized audits


def random_mlrp_instance(rng: np.random.Generator, max_atoms: int = 8) -> DiscreteInstance:
    """Shared-support pair whose mass ratio is monotone, with random thresholds."""
    k = int(rng.integers(1, max_atoms + 1))
    xs = np.sort(rng.choice(np.arange(1, 100), size=k, replace=False)) / 100.0
    # integer masses and integer non-decreasing ratios keep the ordering exact
    m0 = rng.integers(1, 21, size=k)
    ratio = np.cumsum(rng.integers(0, 4, size=k) * (rng.random(k) < 0.7)) + 1
    if rng.random() < 0.5:
        ratio = ratio[::-1]
    m1 = m0 * ratio
    top = xs[-1]

    def draw_t():
        if rng.random() < 0.5:
            return float(rng.choice(xs))
        return float(rng.uniform(0.0, top))

    t0 = draw_t()
    t1 = t0 if rng.random() < 0.1 else draw_t()
    share = float(rng.uniform(0.05, 0.95))
    return DiscreteInstance(tuple(zip(xs, m0.astype(float))), tuple(zip(xs, m1.astype(float))), share, (t0, t1))


@dataclass(frozen=True)
class AuditResult:
    instances: int
    violations: int
    premises_held: int
    non_mlrp_skipped: int = 0
    witnesses: tuple = ()


def audit_proposition(n: int = 10_000, seed: int = 0) -> AuditResult:
    """Draw ``n`` MLRP-ordered instances and count violations."""
    children = np.random.SeedSequence(seed).spawn(n)
    violations = held = skipped = 0
    witnesses = []
    for child in children:
        inst = random_mlrp_instance(np.random.default_rng(child))
        res = verify_proposition(inst)
        if not res.mlrp_ordered:
            skipped += 1
            continue
        held += res.premises_hold
        if not res.consistent:
            violations += 1
            if len(witnesses) < 5:
                witnesses.append(res.witness)
    return AuditResult(n, violations, held, skipped, tuple(witnesses))


def _gauss_legendre_atoms(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True)
class TheoremCase:
    risk0: Beta
    risk1: Beta
    policy0: BetaCdf
    policy1: BetaCdf
    delta_dr: float
    delta_or: float
    conclusion: Conclusion
    truth: str

    @property
    def wrong(self) -> bool:
        return self.conclusion is not Conclusion.INCONCLUSIVE and self.conclusion.value != self.truth


def _random_beta_pair(rng) -> tuple[Beta, Beta]:
    a0, b0 = rng.uniform(0.5, 10.0, size=2)
    da, db = rng.uniform(0.0, 4.0, size=2)
    low, high = Beta(a0, b0 + db), Beta(a0 + da, b0)
    return (high, low) if rng.random() < 0.5 else (low, high)


def _random_beta_cdf(rng) -> BetaCdf:
    t = float(rng.uniform(0.05, 0.95))
    v = float(rng.uniform(0.05, 0.9)) * t * (1.0 - t)
    return BetaCdf(t, v)


def theorem_case(rng: np.random.Generator, nodes: int = 200, max_tries: int = 200) -> TheoremCase:
    """One quasi-rational instance: ordered beta risks, ordered beta-CDF policies.

    Risks are collapsed to Gauss-Legendre nodes with masses ``w_i * pdf(x_i)``,
    so the likelihood ratio on the nodes is the continuous ratio itself.
    """
    r0, r1 = _random_beta_pair(rng)
    for _ in range(max_tries):
        p0, p1 = _random_beta_cdf(rng), _random_beta_cdf(rng)
        order = policies_mlrp_ordered(p0, p1).mlrp
        if order is not Order.NEITHER:
            break
    else:
        raise NotFound("no ordered policy pair drawn")
    xs, ws = _gauss_legendre_atoms(nodes)
    rates = []
    for risk, policy in ((r0, p0), (r1, p1)):
        m = ws * np.exp(risk.logpdf(xs))
        m = m / m.sum()
        d = policy(xs)
        mass = float(np.dot(m, d))
        rates.append((mass, float(np.dot(m * d, xs)) / mass))
    delta = DeltaEstimates(rates[1][0] - rates[0][0], rates[1][1] - rates[0][1])
    # group 1 faces the higher bar when its generated distribution dominates
    truth = {
        Order.SECOND: Conclusion.HIGHER_THRESHOLD_G1.value,
        Order.FIRST: Conclusion.HIGHER_THRESHOLD_G0.value,
        Order.EQUAL: "equal",
    }[order]
    verdict = robust_outcome_test(delta)
    return TheoremCase(r0, r1, p0, p1, delta.delta_dr, delta.delta_or, verdict.conclusion, truth)


def audit_theorem(n: int = 1_000, seed: int = 0) -> AuditResult:
    children = np.random.SeedSequence(seed).spawn(n)
    wrong = conclusive = 0
    witnesses = []
    for child in children:
        case = theorem_case(np.random.default_rng(child))
        conclusive += case.conclusion is not Conclusion.INCONCLUSIVE
        if case.wrong:
            wrong += 1
            if len(witnesses) < 5:
                witnesses.append(case)
    return AuditResult(n, wrong, conclusive, 0, tuple(witnesses))


# --------------------------------------------------------------------------
# counterexample search


@dataclass(frozen=True)
class AtomGrid:
    """Search space: ``n_atoms`` risks from ``risks`` with masses in units of ``1/mass_units``."""

    risks: tuple = tuple(k / 10 for k in range(1, 10))
    n_atoms: int = 3
    mass_units: int = 10
    thresholds: tuple = tuple(k / 10 for k in range(1, 10))
    shared_support: bool = True
    mlrp_only: bool = False


def _compositions(total: int, parts: int) -> np.ndarray:
    """All positive integer vectors of length ``parts`` summing to ``total``."""
    out = []
    for cuts in itertools.combinations(range(1, total), parts - 1):
        edges = (0,) + cuts + (total,)
        out.append([edges[i + 1] - edges[i] for i in range(parts)])
    return np.array(out, dtype=np.int64).reshape(-1, parts)


def _ratio_monotone(c0: np.ndarray, c1: np.ndarray) -> np.ndarray:
    """Whether ``c1/c0`` is monotone along the atoms, via integer cross products."""
    cross = c1[..., 1:] * c0[..., :-1] - c1[..., :-1] * c0[..., 1:]
    return np.all(cross >= 0, axis=-1) | np.all(cross <= 0, axis=-1)


def _iter_supports(grid: AtomGrid) -> Iterator[tuple[tuple, tuple]]:
    combos = list(itertools.combinations(range(len(grid.risks)), grid.n_atoms))
    if grid.shared_support:
        for c in combos:
            yield c, c
    else:
        for c0 in combos:
            for c1 in combos:
                yield c0, c1


def find_fig2_counterexample(grid: AtomGrid = AtomGrid()) -> DiscreteInstance:
    """Uniform-threshold instance where group 1 has lower decision and higher outcome rates.

    The search is exhaustive and integer-exact (risks are scaled to integers).
    Among all hits the one with the largest ``min(DR0 - DR1, OR1 - OR0)`` is
    returned, earliest in enumeration order on ties.
    """
    risks = [Fraction(r).limit_denominator(10**6) for r in grid.risks]
    scale = int(np.lcm.reduce([r.denominator for r in risks]))
    ri = np.array([int(r * scale) for r in risks], dtype=np.int64)
    comps = _compositions(grid.mass_units, grid.n_atoms)
    c0 = comps[:, None, :]
    c1 = comps[None, :, :]
    pair_ok = np.ones((len(comps), len(comps)), dtype=bool)
    if grid.mlrp_only:
        if not grid.shared_support:
            raise ValueError("mlrp_only search needs a shared support")
        pair_ok = _ratio_monotone(np.broadcast_to(c0, (len(comps),) * 2 + (grid.n_atoms,)), np.broadcast_to(c1, (len(comps),) * 2 + (grid.n_atoms,)))

    best = None
    best_key = None
    for s0, s1 in _iter_supports(grid):
        x0, x1 = ri[list(s0)], ri[list(s1)]
        for t in grid.thresholds:
            keep0 = np.array([risks[i] >= Fraction(t).limit_denominator(10**6) for i in s0])
            keep1 = np.array([risks[i] >= Fraction(t).limit_denominator(10**6) for i in s1])
            n0 = (c0 * keep0).sum(-1)
            n1 = (c1 * keep1).sum(-1)
            s0x = (c0 * keep0 * x0).sum(-1)
            s1x = (c1 * keep1 * x1).sum(-1)
            valid = (n0 > 0) & (n1 > 0) & pair_ok
            # DR1 < DR0 and OR1 > OR0, cross-multiplied
            hit = valid & (n1 < n0) & (s1x * n0 > s0x * n1)
            if not np.any(hit):
                continue
            u = grid.mass_units
            with np.errstate(divide="ignore", invalid="ignore"):
                margin = np.minimum((n0 - n1) / u, (s1x / n1 - s0x / n0) / scale)
            margin = np.where(hit, margin, -np.inf)
            i, j = np.unravel_index(int(np.argmax(margin)), margin.shape)
            key = float(margin[i, j])
            if best_key is None or key > best_key:
                best_key = key
                best = (s0, s1, comps[i].copy(), comps[j].copy(), t)
    if best is None:
        raise NotFound("no instance in the search space shows the sign pattern")
    s0, s1, m0, m1, t = best
    atoms0 = tuple((grid.risks[k], int(m) / grid.mass_units) for k, m in zip(s0, m0))
    atoms1 = tuple((grid.risks[k], int(m) / grid.mass_units) for k, m in zip(s1, m1))
    return DiscreteInstance(atoms0, atoms1, 0.5, (t, t))


def expand_instance(instance: DiscreteInstance, counts0: Sequence[int], counts1: Sequence[int]) -> GroupedSample:
    """Unit-level sample with ``counts_g[i]`` copies of atom ``i``; outcome equals risk."""
    group, decision, outcome = [], [], []
    for g, atoms, counts in ((0, instance.atoms0, counts0), (1, instance.atoms1, counts1)):
        t = instance.thresholds[g]
        for (x, _), c in zip(atoms, counts):
            group += [g] * int(c)
            decision += [int(x >= t)] * int(c)
            outcome += [x if x >= t else np.nan] * int(c)
    return GroupedSample(np.array(group), np.array(decision), np.array(outcome, dtype=float))


FIXTURE_NAME = "fig2_counterexample.json"


def load_fig2_fixture() -> DiscreteInstance:
    text = resources.files("outcome_audit").joinpath("fixtures", FIXTURE_NAME).read_text(encoding="utf-8")
    return DiscreteInstance.from_dict(json.loads(text))
