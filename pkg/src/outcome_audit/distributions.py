"""Risk distributions and the stochastic orderings the robust test relies on.

Every distribution is an immutable value.  Discrete-like kinds (``Discrete``,
``Empirical``, ``Binomial`` and transforms of them) are handled exactly on
their atoms; continuous kinds delegate to :mod:`scipy.stats` / :mod:`scipy.special`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import TYPE_CHECKING, Any, Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate, special, stats

from .errors import (
    DegenerateTilt,
    IncompatibleSupports,
    InvalidDistribution,
    MissingRiskScores,
    ZeroMassAboveThreshold,
)

if TYPE_CHECKING:
    from .estimation import GroupedSample

NORMALIZATION_TOL = 1e-12
ORDERING_TOL = 1e-9
_GRID_TAIL = 1e-9


def _scalar_or_array(values: np.ndarray, like: Any):
    if np.ndim(like) == 0:
        return float(values)
    return values


# --------------------------------------------------------------------------
# atom helpers


def _atoms_cdf(xs: np.ndarray, cum: np.ndarray, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    idx = np.searchsorted(xs, x, side="right")
    out = np.where(idx == 0, 0.0, cum[np.maximum(idx - 1, 0)])
    return np.minimum(out, 1.0)


def _atoms_prob_at_least(xs: np.ndarray, tail: np.ndarray, t) -> np.ndarray:
    # tail[i] = sum of masses at indices >= i, with tail[len] = 0
    t = np.asarray(t, dtype=float)
    idx = np.searchsorted(xs, t, side="left")
    return tail[idx]


def _atoms_partial_mean(xs: np.ndarray, ms: np.ndarray, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    flat = np.atleast_1d(t).ravel()
    out = np.empty(flat.shape)
    for i, ti in enumerate(flat):
        keep = xs >= ti
        out[i] = math.fsum(xs[keep] * ms[keep])
    return out.reshape(t.shape)


def _atoms_ppf(xs: np.ndarray, cum: np.ndarray, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    idx = np.searchsorted(cum, q, side="left")
    return xs[np.clip(idx, 0, len(xs) - 1)]


def _normalize(weights: np.ndarray, what: str) -> np.ndarray:
    if np.any(~np.isfinite(weights)) or np.any(weights < 0):
        raise InvalidDistribution(f"{what} must be finite and non-negative")
    total = math.fsum(weights)
    if total <= 0:
        raise InvalidDistribution(f"{what} must have positive total")
    return weights / total


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


# --------------------------------------------------------------------------
# distributions


class RiskDistribution:
    """Interface shared by all one-dimensional risk distributions."""

    kind: str = "abstract"
    is_discrete: bool = False

    def cdf(self, x):
        raise NotImplementedError

    def prob_at_least(self, t):
        """``Pr(X >= t)``."""
        raise NotImplementedError

    def partial_mean_above(self, t):
        """``E[X * 1(X >= t)]``."""
        raise NotImplementedError

    def mean(self) -> float:
        return float(self.partial_mean_above(-np.inf))

    def ppf(self, q):
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def logpdf(self, x):
        raise NotImplementedError(f"{self.kind} has no density")

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError(f"{self.kind} is not discrete")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


class _Atomic(RiskDistribution):
    is_discrete = True

    @cached_property
    def _cum(self) -> np.ndarray:
        return np.cumsum(self.atoms()[1])

    @cached_property
    def _tail(self) -> np.ndarray:
        ms = self.atoms()[1]
        return np.concatenate([np.cumsum(ms[::-1])[::-1], [0.0]])

    def cdf(self, x):
        return _scalar_or_array(_atoms_cdf(self.atoms()[0], self._cum, x), x)

    def prob_at_least(self, t):
        return _scalar_or_array(_atoms_prob_at_least(self.atoms()[0], self._tail, t), t)

    def partial_mean_above(self, t):
        xs, ms = self.atoms()
        return _scalar_or_array(_atoms_partial_mean(xs, ms, t), t)

    def ppf(self, q):
        return _scalar_or_array(_atoms_ppf(self.atoms()[0], self._cum, q), q)

    def support(self) -> tuple[float, float]:
        xs, ms = self.atoms()
        pos = xs[ms > 0]
        return float(pos[0]), float(pos[-1])

    def sample(self, rng, size):
        xs, ms = self.atoms()
        return rng.choice(xs, size=size, p=ms)

    def _atoms_equal(self, other) -> bool:
        if not isinstance(other, _Atomic):
            return NotImplemented
        x0, m0 = self.atoms()
        x1, m1 = other.atoms()
        return type(self) is type(other) and np.array_equal(x0, x1) and np.array_equal(m0, m1)


@dataclass(frozen=True, eq=False)
class Discrete(_Atomic):
    """Finitely many atoms with strictly increasing support."""

    support_points: np.ndarray
    masses: np.ndarray
    kind: str = field(default="discrete", init=False)

    def __post_init__(self):
        xs = np.asarray(self.support_points, dtype=float).ravel()
        ms = np.asarray(self.masses, dtype=float).ravel()
        if xs.size == 0 or xs.shape != ms.shape:
            raise InvalidDistribution("support and masses must be non-empty and of equal length")
        if not np.all(np.isfinite(xs)):
            raise InvalidDistribution("support values must be finite")
        if np.any(np.diff(xs) <= 0):
            raise InvalidDistribution("support must be strictly increasing")
        object.__setattr__(self, "support_points", _frozen_array(xs))
        object.__setattr__(self, "masses", _frozen_array(_normalize(ms, "masses")))

    def atoms(self):
        return self.support_points, self.masses

    def __eq__(self, other):
        return self._atoms_equal(other)

    __hash__ = None

    def to_dict(self):
        return {
            "kind": self.kind,
            "params": {"support": self.support_points.tolist(), "masses": self.masses.tolist()},
        }


@dataclass(frozen=True, eq=False)
class Empirical(_Atomic):
    """Observed values with non-negative weights, treated as atoms."""

    samples: np.ndarray
    weights: np.ndarray | None = None
    kind: str = field(default="empirical", init=False)

    def __post_init__(self):
        xs = np.asarray(self.samples, dtype=float).ravel()
        ws = np.ones_like(xs) if self.weights is None else np.asarray(self.weights, dtype=float).ravel()
        if xs.size == 0 or xs.shape != ws.shape:
            raise InvalidDistribution("samples and weights must be non-empty and of equal length")
        if not np.all(np.isfinite(xs)):
            raise InvalidDistribution("samples must be finite")
        order = np.argsort(xs, kind="stable")
        object.__setattr__(self, "samples", _frozen_array(xs[order]))
        object.__setattr__(self, "weights", _frozen_array(_normalize(ws[order], "weights")))

    @cached_property
    def _unique(self):
        xs, start = np.unique(self.samples, return_index=True)
        ms = np.add.reduceat(self.weights, start)
        return _frozen_array(xs), _frozen_array(ms)

    def atoms(self):
        return self._unique

    def __eq__(self, other):
        if not isinstance(other, Empirical):
            return NotImplemented
        return np.array_equal(self.samples, other.samples) and np.array_equal(self.weights, other.weights)

    __hash__ = None

    def to_dict(self):
        return {
            "kind": self.kind,
            "params": {"samples": self.samples.tolist(), "weights": self.weights.tolist()},
        }


@dataclass(frozen=True)
class Binomial(_Atomic):
    n: int
    p: float
    kind: str = field(default="binomial", init=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidDistribution("Binomial n must be an integer >= 1")
        if not 0.0 <= self.p <= 1.0:
            raise InvalidDistribution("Binomial p must lie in [0, 1]")

    @cached_property
    def _atoms(self):
        ks = np.arange(self.n + 1, dtype=float)
        pmf = stats.binom.pmf(ks, self.n, self.p)
        return _frozen_array(ks), _frozen_array(_normalize(pmf, "pmf"))

    def atoms(self):
        return self._atoms

    def sample(self, rng, size):
        return rng.binomial(self.n, self.p, size=size).astype(float)

    def to_dict(self):
        return {"kind": self.kind, "params": {"n": int(self.n), "p": self.p}}


@dataclass(frozen=True)
class Beta(RiskDistribution):
    alpha: float
    beta: float
    kind: str = field(default="beta", init=False)

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise InvalidDistribution("Beta parameters must be positive")

    def cdf(self, x):
        return _scalar_or_array(stats.beta.cdf(x, self.alpha, self.beta), x)

    def prob_at_least(self, t):
        return _scalar_or_array(stats.beta.sf(t, self.alpha, self.beta), t)

    def partial_mean_above(self, t):
        m = self.alpha / (self.alpha + self.beta)
        return _scalar_or_array(m * stats.beta.sf(t, self.alpha + 1, self.beta), t)

    def mean(self):
        return self.alpha / (self.alpha + self.beta)

    def variance(self) -> float:
        a, b = self.alpha, self.beta
        return a * b / ((a + b) ** 2 * (a + b + 1))

    def ppf(self, q):
        return _scalar_or_array(stats.beta.ppf(q, self.alpha, self.beta), q)

    def support(self):
        return 0.0, 1.0

    def logpdf(self, x):
        return _scalar_or_array(stats.beta.logpdf(x, self.alpha, self.beta), x)

    def sample(self, rng, size):
        return rng.beta(self.alpha, self.beta, size=size)

    def to_dict(self):
        return {"kind": self.kind, "params": {"alpha": self.alpha, "beta": self.beta}}


@dataclass(frozen=True)
class Normal(RiskDistribution):
    mu: float
    variance: float
    kind: str = field(default="normal", init=False)

    def __post_init__(self):
        if not self.variance > 0:
            raise InvalidDistribution("Normal variance must be positive")

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def cdf(self, x):
        return _scalar_or_array(stats.norm.cdf(x, self.mu, self.sd), x)

    def prob_at_least(self, t):
        return _scalar_or_array(stats.norm.sf(t, self.mu, self.sd), t)

    def partial_mean_above(self, t):
        z = (np.asarray(t, dtype=float) - self.mu) / self.sd
        val = self.mu * stats.norm.sf(z) + self.sd * stats.norm.pdf(z)
        return _scalar_or_array(val, t)

    def conditional_mean_above(self, t):
        # inverse Mills ratio in log space keeps far tails accurate
        z = (np.asarray(t, dtype=float) - self.mu) / self.sd
        mills = np.exp(stats.norm.logpdf(z) - stats.norm.logsf(z))
        return _scalar_or_array(self.mu + self.sd * mills, t)

    def mean(self):
        return self.mu

    def ppf(self, q):
        return _scalar_or_array(stats.norm.ppf(q, self.mu, self.sd), q)

    def support(self):
        return -np.inf, np.inf

    def logpdf(self, x):
        return _scalar_or_array(stats.norm.logpdf(x, self.mu, self.sd), x)

    def sample(self, rng, size):
        return rng.normal(self.mu, self.sd, size=size)

    def to_dict(self):
        return {"kind": self.kind, "params": {"mu": self.mu, "variance": self.variance}}


@dataclass(frozen=True)
class Gamma(RiskDistribution):
    """Gamma with shape ``alpha`` and rate ``beta``."""

    alpha: float
    beta: float
    kind: str = field(default="gamma", init=False)

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise InvalidDistribution("Gamma parameters must be positive")

    def cdf(self, x):
        return _scalar_or_array(stats.gamma.cdf(x, self.alpha, scale=1 / self.beta), x)

    def prob_at_least(self, t):
        return _scalar_or_array(stats.gamma.sf(t, self.alpha, scale=1 / self.beta), t)

    def partial_mean_above(self, t):
        m = self.alpha / self.beta
        return _scalar_or_array(m * stats.gamma.sf(t, self.alpha + 1, scale=1 / self.beta), t)

    def mean(self):
        return self.alpha / self.beta

    def ppf(self, q):
        return _scalar_or_array(stats.gamma.ppf(q, self.alpha, scale=1 / self.beta), q)

    def support(self):
        return 0.0, np.inf

    def logpdf(self, x):
        return _scalar_or_array(stats.gamma.logpdf(x, self.alpha, scale=1 / self.beta), x)

    def sample(self, rng, size):
        return rng.gamma(self.alpha, 1 / self.beta, size=size)

    def to_dict(self):
        return {"kind": self.kind, "params": {"alpha": self.alpha, "beta": self.beta}}


@dataclass(frozen=True)
class Transform:
    """A strictly increasing map: ``log``, ``logit`` or ``affine`` (``a*x + b``, ``a > 0``)."""

    name: str
    a: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if self.name not in ("log", "logit", "affine"):
            raise InvalidDistribution(f"unknown transform {self.name!r}")
        if self.name == "affine" and not self.a > 0:
            raise InvalidDistribution("affine transform needs a > 0")

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        if self.name == "log":
            with np.errstate(divide="ignore"):
                return np.log(x)
        if self.name == "logit":
            return special.logit(x)
        return self.a * x + self.b

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if self.name == "log":
            return np.exp(y)
        if self.name == "logit":
            return special.expit(y)
        return (y - self.b) / self.a

    def log_abs_dinverse(self, y):
        y = np.asarray(y, dtype=float)
        if self.name == "log":
            return y
        if self.name == "logit":
            return special.log_expit(y) + special.log_expit(-y)
        return np.full_like(y, -math.log(self.a))

    def to_dict(self):
        out = {"name": self.name}
        if self.name == "affine":
            out.update(a=self.a, b=self.b)
        return out


@dataclass(frozen=True, eq=False)
class Transformed(RiskDistribution):
    """Distribution of ``transform(X)`` for ``X ~ base``."""

    base: RiskDistribution
    transform: Transform
    kind: str = field(default="transformed", init=False)

    def __post_init__(self):
        lo, hi = self.base.support()
        name = self.transform.name
        if name == "log" and (lo < 0 or (self.base.is_discrete and lo <= 0)):
            raise InvalidDistribution("log transform needs a positive base support")
        if name == "logit" and (lo < 0 or hi > 1 or (self.base.is_discrete and (lo <= 0 or hi >= 1))):
            raise InvalidDistribution("logit transform needs base support inside (0, 1)")

    @property
    def is_discrete(self) -> bool:
        return self.base.is_discrete

    def __eq__(self, other):
        if not isinstance(other, Transformed):
            return NotImplemented
        return self.transform == other.transform and self.base == other.base

    __hash__ = None

    @cached_property
    def _atoms(self):
        xs, ms = self.base.atoms()
        keep = ms > 0
        ys = self.transform.forward(xs[keep])
        return _frozen_array(ys), _frozen_array(ms[keep])

    def atoms(self):
        return self._atoms

    def cdf(self, x):
        return self.base.cdf(_scalar_or_array(self.transform.inverse(x), x))

    def prob_at_least(self, t):
        return self.base.prob_at_least(_scalar_or_array(self.transform.inverse(t), t))

    def partial_mean_above(self, t):
        if self.is_discrete:
            xs, ms = self.atoms()
            return _scalar_or_array(_atoms_partial_mean(xs, ms, t), t)
        s = np.asarray(self.transform.inverse(t), dtype=float)
        if self.transform.name == "affine":
            a, b = self.transform.a, self.transform.b
            val = a * np.asarray(self.base.partial_mean_above(s)) + b * np.asarray(self.base.prob_at_least(s))
            return _scalar_or_array(val, t)
        _, hi = self.base.support()
        flat = np.atleast_1d(s).ravel()
        out = np.empty(flat.shape)
        for i, si in enumerate(flat):
            lo = max(si, self.base.support()[0])
            out[i] = integrate.quad(
                lambda x: float(self.transform.forward(x)) * math.exp(float(self.base.logpdf(x))),
                lo,
                hi,
                limit=200,
            )[0]
        return _scalar_or_array(out.reshape(np.shape(s)), t)

    def ppf(self, q):
        return _scalar_or_array(self.transform.forward(self.base.ppf(q)), q)

    def support(self):
        lo, hi = self.base.support()
        f = self.transform.forward
        return float(f(lo)), float(f(hi))

    def logpdf(self, y):
        s = self.transform.inverse(y)
        return _scalar_or_array(np.asarray(self.base.logpdf(s)) + self.transform.log_abs_dinverse(y), y)

    def sample(self, rng, size):
        return self.transform.forward(self.base.sample(rng, size))

    def to_dict(self):
        return {"kind": self.kind, "params": {"base": self.base.to_dict(), "transform": self.transform.to_dict()}}


@dataclass(frozen=True, eq=False)
class Tilted(RiskDistribution):
    """Continuous tilt ``weight ⟲ base``, evaluated by quadrature."""

    base: RiskDistribution
    weight: Callable[[float], float]
    normalizer: float
    kind: str = field(default="tilted", init=False)

    def _density(self, x: float) -> float:
        return float(self.weight(x)) * math.exp(float(self.base.logpdf(x)))

    def _integral(self, lo: float, hi: float, fn) -> float:
        if not lo < hi:
            return 0.0
        return integrate.quad(fn, lo, hi, limit=200)[0]

    def cdf(self, x):
        lo, _ = self.base.support()
        flat = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
        out = np.array([self._integral(lo, xi, self._density) for xi in flat]) / self.normalizer
        return _scalar_or_array(np.clip(out, 0.0, 1.0).reshape(np.shape(x)), x)

    def prob_at_least(self, t):
        return _scalar_or_array(1.0 - np.asarray(self.cdf(t)), t)

    def partial_mean_above(self, t):
        lo, hi = self.base.support()
        flat = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
        out = np.array(
            [self._integral(max(ti, lo), hi, lambda x: x * self._density(x)) for ti in flat]
        ) / self.normalizer
        return _scalar_or_array(out.reshape(np.shape(t)), t)

    def support(self):
        return self.base.support()

    def ppf(self, q):
        from scipy.optimize import brentq

        lo, hi = self.base.ppf(_GRID_TAIL), self.base.ppf(1 - _GRID_TAIL)
        flat = np.atleast_1d(np.asarray(q, dtype=float)).ravel()
        out = np.array([brentq(lambda x: self.cdf(x) - qi, lo, hi) for qi in flat])
        return _scalar_or_array(out.reshape(np.shape(q)), q)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        w = np.vectorize(lambda v: float(self.weight(v)))(x)
        with np.errstate(divide="ignore"):
            val = np.log(w) + np.asarray(self.base.logpdf(x)) - math.log(self.normalizer)
        return _scalar_or_array(val, x)


@dataclass(frozen=True, eq=False)
class ExtendedDistribution:
    """A distribution on the extended reals: ``core`` plus point masses at ``-inf``/``+inf``."""

    core: RiskDistribution | None
    mass_minus_inf: float = 0.0
    mass_plus_inf: float = 0.0

    def __post_init__(self):
        lo, hi = self.mass_minus_inf, self.mass_plus_inf
        if lo < 0 or hi < 0 or lo + hi > 1 + NORMALIZATION_TOL:
            raise InvalidDistribution("endpoint masses must be non-negative and sum to at most 1")
        if self.core is None and abs(1 - lo - hi) > NORMALIZATION_TOL:
            raise InvalidDistribution("interior mass is positive but no core distribution was given")

    @property
    def interior_mass(self) -> float:
        if self.core is None:
            return 0.0
        return max(0.0, 1.0 - self.mass_minus_inf - self.mass_plus_inf)

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        core = 0.0 if self.core is None else np.asarray(self.core.cdf(x_arr), dtype=float)
        out = self.mass_minus_inf + self.interior_mass * core
        out = np.where(x_arr == np.inf, 1.0, np.where(x_arr == -np.inf, self.mass_minus_inf, out))
        return _scalar_or_array(np.clip(out, 0.0, 1.0), x)

    def __eq__(self, other):
        if not isinstance(other, ExtendedDistribution):
            return NotImplemented
        return (
            self.core == other.core
            and self.mass_minus_inf == other.mass_minus_inf
            and self.mass_plus_inf == other.mass_plus_inf
        )

    __hash__ = None


def distribution_from_dict(data: dict) -> RiskDistribution:
    kind = data["kind"]
    p = data.get("params", {})
    if kind == "beta":
        return Beta(p["alpha"], p["beta"])
    if kind == "normal":
        return Normal(p["mu"], p["variance"])
    if kind == "gamma":
        return Gamma(p["alpha"], p["beta"])
    if kind == "binomial":
        return Binomial(p["n"], p["p"])
    if kind == "discrete":
        return Discrete(p["support"], p["masses"])
    if kind == "empirical":
        return Empirical(p["samples"], p.get("weights"))
    if kind == "transformed":
        t = p["transform"]
        return Transformed(distribution_from_dict(p["base"]), Transform(t["name"], t.get("a", 1.0), t.get("b", 0.0)))
    raise InvalidDistribution(f"unknown distribution kind {kind!r}")


def discretize(dist: RiskDistribution, edges: Sequence[float], points: Sequence[float] | None = None) -> Discrete:
    """Collapse ``dist`` onto bins: mass ``F(e[i+1]) - F(e[i])`` placed at ``points[i]``.

    Two distributions discretized on the same bins keep their likelihood-ratio
    ordering, since each bin ratio averages the density ratio over the bin.
    """
    edges = np.asarray(edges, dtype=float)
    if points is None:
        points = 0.5 * (edges[:-1] + edges[1:])
    points = np.asarray(points, dtype=float)
    cdf = np.asarray(dist.cdf(edges), dtype=float)
    masses = np.diff(cdf)
    if not dist.is_discrete:
        # upper-tail bins from survival differences, which keep their relative precision
        sf = np.asarray(dist.prob_at_least(edges), dtype=float)
        upper = cdf[:-1] >= 0.5
        masses[upper] = -np.diff(sf)[upper]
    return Discrete(points, np.clip(masses, 0.0, None))


# --------------------------------------------------------------------------
# operations


def cdf(dist: RiskDistribution | ExtendedDistribution, x):
    return dist.cdf(x)


def conditional_mean_above(dist: RiskDistribution, t: float) -> float:
    """``E[X | X >= t]``; raises :class:`ZeroMassAboveThreshold` when ``Pr(X >= t) = 0``."""
    if t == -np.inf:
        return float(dist.mean())
    if isinstance(dist, Normal):
        if stats.norm.logsf(t, dist.mu, dist.sd) == -np.inf:
            raise ZeroMassAboveThreshold(f"no mass at or above {t}")
        return float(dist.conditional_mean_above(t))
    mass = float(dist.prob_at_least(t))
    if mass <= 0.0:
        raise ZeroMassAboveThreshold(f"no mass at or above {t}")
    return float(dist.partial_mean_above(t)) / mass


def tilt(dist, weight: Callable):
    """Reweight ``dist`` by a non-negative ``weight``; discrete inputs are handled on atoms."""
    if isinstance(dist, ExtendedDistribution):
        return _tilt_extended(dist, weight)
    if dist.is_discrete:
        xs, ms = dist.atoms()
        w = _eval_weight(weight, xs)
        if np.all(w == w[0]) and w[0] > 0 and np.isfinite(w[0]):
            return dist if isinstance(dist, (Discrete, Empirical)) else Discrete(xs, ms)
        total = math.fsum(w * ms)
        if not (np.isfinite(total) and total > 0):
            raise DegenerateTilt("E[weight(X)] must be finite and positive")
        if isinstance(dist, Empirical):
            return Empirical(dist.samples, dist.weights * _eval_weight(weight, dist.samples))
        return Discrete(xs, w * ms / total)
    lo, hi = dist.support()
    total = integrate.quad(lambda x: float(weight(x)) * math.exp(float(dist.logpdf(x))), lo, hi, limit=200)[0]
    if not (np.isfinite(total) and total > 0):
        raise DegenerateTilt("E[weight(X)] must be finite and positive")
    return Tilted(dist, weight, total)


def _eval_weight(weight: Callable, xs: np.ndarray) -> np.ndarray:
    try:
        w = np.asarray(weight(xs), dtype=float)
    except (TypeError, ValueError):
        w = None
    if w is None or w.shape != xs.shape:
        w = np.array([float(weight(x)) for x in xs])
    if np.any(w < 0) or np.any(np.isnan(w)):
        raise DegenerateTilt("weight must be non-negative")
    return w


def _tilt_extended(dist: ExtendedDistribution, weight: Callable) -> ExtendedDistribution:
    w_lo = float(weight(-np.inf)) if dist.mass_minus_inf > 0 else 0.0
    w_hi = float(weight(np.inf)) if dist.mass_plus_inf > 0 else 0.0
    inner = 0.0
    core = None
    if dist.core is not None and dist.interior_mass > 0:
        if dist.core.is_discrete:
            xs, ms = dist.core.atoms()
            inner = math.fsum(_eval_weight(weight, xs) * ms)
        else:
            lo, hi = dist.core.support()
            inner = integrate.quad(
                lambda x: float(weight(x)) * math.exp(float(dist.core.logpdf(x))), lo, hi, limit=200
            )[0]
        if inner > 0:
            core = tilt(dist.core, weight)
    parts = np.array([dist.mass_minus_inf * w_lo, dist.interior_mass * inner, dist.mass_plus_inf * w_hi])
    total = math.fsum(parts)
    if not (np.isfinite(total) and total > 0):
        raise DegenerateTilt("E[weight(X)] must be finite and positive")
    return ExtendedDistribution(core, parts[0] / total, parts[2] / total)


# --------------------------------------------------------------------------
# orderings


class Order(str, Enum):
    FIRST = "first>=second"
    SECOND = "second>=first"
    NEITHER = "neither"
    EQUAL = "equal"


@dataclass(frozen=True)
class OrderingReport:
    stochastic_dominance: Order
    mlrp: Order
    max_cdf_violation: float
    max_likelihood_ratio_inversion: float
    grid_size: int

    def to_dict(self) -> dict:
        return {
            "stochastic_dominance": self.stochastic_dominance.value,
            "mlrp": self.mlrp.value,
            "max_cdf_violation": self.max_cdf_violation,
            "max_likelihood_ratio_inversion": self.max_likelihood_ratio_inversion,
            "grid_size": self.grid_size,
        }


@dataclass
class _Parts:
    atoms_x: np.ndarray
    atoms_m: np.ndarray
    cont: RiskDistribution | None
    cont_w: float


def _decompose(d) -> _Parts:
    xs: list[np.ndarray] = []
    ms: list[np.ndarray] = []
    cont, cont_w = None, 0.0
    if isinstance(d, ExtendedDistribution):
        core, w = d.core, d.interior_mass
        if d.mass_minus_inf > 0:
            xs.append(np.array([-np.inf]))
            ms.append(np.array([d.mass_minus_inf]))
    else:
        core, w = d, 1.0
    if core is not None and w > 0:
        if core.is_discrete:
            ax, am = core.atoms()
            keep = am > 0
            xs.append(ax[keep])
            ms.append(am[keep] * w)
        else:
            cont, cont_w = core, w
    if isinstance(d, ExtendedDistribution) and d.mass_plus_inf > 0:
        xs.append(np.array([np.inf]))
        ms.append(np.array([d.mass_plus_inf]))
    ax = np.concatenate(xs) if xs else np.empty(0)
    am = np.concatenate(ms) if ms else np.empty(0)
    return _Parts(ax, am, cont, cont_w)


def _unwrap(d):
    if isinstance(d, ExtendedDistribution):
        if d.mass_minus_inf == 0 and d.mass_plus_inf == 0 and d.core is not None:
            return d.core
        return None
    return d


def _closed_form_mlrp(d0, d1) -> Order | None:
    """Likelihood-ratio order for parametric pairs with a closed-form condition."""
    d0, d1 = _unwrap(d0), _unwrap(d1)
    if d0 is None or d1 is None:
        return None

    def by_two(a0, b0, a1, b1):
        first = a0 >= a1 and b0 <= b1
        second = a1 >= a0 and b1 <= b0
        if first and second:
            return Order.EQUAL
        return Order.FIRST if first else Order.SECOND if second else Order.NEITHER

    def by_one(x0, x1):
        return Order.EQUAL if x0 == x1 else Order.FIRST if x0 > x1 else Order.SECOND

    if isinstance(d0, Beta) and isinstance(d1, Beta):
        return by_two(d0.alpha, d0.beta, d1.alpha, d1.beta)
    if isinstance(d0, Gamma) and isinstance(d1, Gamma):
        return by_two(d0.alpha, d0.beta, d1.alpha, d1.beta)
    if isinstance(d0, Normal) and isinstance(d1, Normal) and d0.variance == d1.variance:
        return by_one(d0.mu, d1.mu)
    if (
        isinstance(d0, Binomial)
        and isinstance(d1, Binomial)
        and d0.n == d1.n
        and 0 < d0.p < 1
        and 0 < d1.p < 1
    ):
        return by_one(d0.p, d1.p)
    if isinstance(d0, Transformed) and isinstance(d1, Transformed) and d0.transform == d1.transform:
        return _closed_form_mlrp(d0.base, d1.base)
    return None


def _overlaps(p0: _Parts, p1: _Parts) -> bool:
    fin0 = p0.atoms_x[np.isfinite(p0.atoms_x)]
    fin1 = p1.atoms_x[np.isfinite(p1.atoms_x)]
    if np.intersect1d(p0.atoms_x, p1.atoms_x).size:
        return True
    for cont, atoms in ((p0.cont, fin1), (p1.cont, fin0)):
        if cont is not None and atoms.size:
            lo, hi = cont.support()
            if np.any((atoms >= lo) & (atoms <= hi)):
                return True
    if p0.cont is not None and p1.cont is not None:
        lo0, hi0 = p0.cont.support()
        lo1, hi1 = p1.cont.support()
        if max(lo0, lo1) < min(hi0, hi1):
            return True
    return False


def _continuous_span(cont: RiskDistribution) -> tuple[float, float]:
    lo, hi = cont.support()
    try:
        qlo, qhi = float(cont.ppf(_GRID_TAIL)), float(cont.ppf(1 - _GRID_TAIL))
    except NotImplementedError:
        qlo, qhi = lo, hi
    if not np.isfinite(qlo):
        qlo = lo
    if not np.isfinite(qhi):
        qhi = hi
    return qlo, qhi


def _build_grid(p0: _Parts, p1: _Parts, grid) -> np.ndarray:
    conts = [p.cont for p in (p0, p1) if p.cont is not None]
    if not conts:
        return np.empty(0)
    if grid is None:
        grid = 1001
    if np.ndim(grid) == 0:
        n = int(grid)
        if n < 2:
            raise ValueError("grid needs at least 2 points")
        spans = [_continuous_span(c) for c in conts]
        lo = min(s[0] for s in spans)
        hi = max(s[1] for s in spans)
        finite_atoms = np.concatenate([p0.atoms_x, p1.atoms_x])
        finite_atoms = finite_atoms[np.isfinite(finite_atoms)]
        if finite_atoms.size:
            lo, hi = min(lo, finite_atoms.min()), max(hi, finite_atoms.max())
        return np.linspace(lo, hi, n)
    pts = np.unique(np.asarray(grid, dtype=float))
    if pts.size < 2:
        raise ValueError("grid needs at least 2 points")
    return pts


def _log_density(parts: _Parts, atom_pts: np.ndarray, grid_pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lookup = dict(zip(parts.atoms_x.tolist(), parts.atoms_m.tolist()))
    with np.errstate(divide="ignore"):
        la = np.log(np.array([lookup.get(x, 0.0) for x in atom_pts.tolist()], dtype=float))
    if parts.cont is None or grid_pts.size == 0:
        lg = np.full(grid_pts.shape, -np.inf)
    else:
        lg = math.log(parts.cont_w) + np.asarray(parts.cont.logpdf(grid_pts), dtype=float)
        lg = np.where(np.isnan(lg), -np.inf, lg)
    return la, lg


def _monotone_inversion(values: np.ndarray) -> float:
    """Largest drop below the running maximum (0 when non-decreasing)."""
    if values.size == 0:
        return 0.0
    run = np.maximum.accumulate(values)
    with np.errstate(invalid="ignore"):
        drops = np.where(run == values, 0.0, run - values)
    return float(np.max(drops))


def check_ordering(d0, d1, grid=None, *, tol: float = ORDERING_TOL, require_overlap: bool = True) -> OrderingReport:
    """Compare ``d0`` and ``d1`` under first-order dominance and the MLRP.

    ``grid`` is a point count or explicit points used for continuous parts;
    purely discrete pairs are compared exactly on their union support.  The
    likelihood ratio is compared in log space with tolerance ``tol``, taking
    the ratio as ``+inf`` where the second density vanishes and skipping
    points where both vanish.
    """
    p0, p1 = _decompose(d0), _decompose(d1)
    if require_overlap and not _overlaps(p0, p1):
        raise IncompatibleSupports("distributions have disjoint supports")

    atom_pts = np.union1d(p0.atoms_x, p1.atoms_x)
    grid_pts = _build_grid(p0, p1, grid)
    if grid_pts.size and atom_pts.size:
        grid_pts = grid_pts[~np.isin(grid_pts, atom_pts)]

    sd_pts = np.union1d(atom_pts, grid_pts)
    diff = np.asarray(d0.cdf(sd_pts), dtype=float) - np.asarray(d1.cdf(sd_pts), dtype=float)
    over = max(0.0, float(np.max(diff, initial=0.0)))
    under = max(0.0, float(np.max(-diff, initial=0.0)))
    sd_first, sd_second = over <= tol, under <= tol
    if sd_first and sd_second:
        sd = Order.EQUAL
    else:
        sd = Order.FIRST if sd_first else Order.SECOND if sd_second else Order.NEITHER

    la0, lg0 = _log_density(p0, atom_pts, grid_pts)
    la1, lg1 = _log_density(p1, atom_pts, grid_pts)
    xs = np.concatenate([atom_pts, grid_pts])
    l0 = np.concatenate([la0, lg0])
    l1 = np.concatenate([la1, lg1])
    order = np.argsort(xs, kind="stable")
    l0, l1 = l0[order], l1[order]
    live = ~((l0 == -np.inf) & (l1 == -np.inf))
    l0, l1 = l0[live], l1[live]
    with np.errstate(invalid="ignore"):
        ratio = np.where(l1 == -np.inf, np.inf, np.where(l0 == -np.inf, -np.inf, l0 - l1))
    inv_up = _monotone_inversion(ratio)
    inv_down = _monotone_inversion(-ratio)

    closed = _closed_form_mlrp(d0, d1)
    if closed is not None:
        mlrp = closed
    else:
        up, down = inv_up <= tol, inv_down <= tol
        if up and down:
            mlrp = Order.EQUAL
        else:
            mlrp = Order.FIRST if up else Order.SECOND if down else Order.NEITHER

    return OrderingReport(
        stochastic_dominance=sd,
        mlrp=mlrp,
        max_cdf_violation=min(over, under),
        max_likelihood_ratio_inversion=min(inv_up, inv_down),
        grid_size=int(sd_pts.size),
    )


# --------------------------------------------------------------------------
# empirical posterior curve


class PosteriorBin(NamedTuple):
    midpoint: float
    share_group1: float
    count: int


def binned_posterior(sample: "GroupedSample", bins: int, min_count: int = 50) -> list[PosteriorBin]:
    """Equal-count bins over pooled risk with the group-1 share in each bin.

    Tied risks always share a bin.  Bins holding fewer than ``min_count`` rows
    are merged into their right neighbour (the last bin merges leftward).
    """
    if bins < 2:
        raise ValueError("bins must be at least 2")
    risk = None if sample.risk is None else np.asarray(sample.risk, dtype=float)
    if risk is None or risk.size == 0 or np.any(np.isnan(risk)):
        raise MissingRiskScores("every row needs a risk score")
    group = np.asarray(sample.group)
    n = risk.size
    order = np.argsort(risk, kind="stable")
    r_sorted = risk[order]
    g_sorted = group[order]
    first_rank = np.searchsorted(r_sorted, r_sorted, side="left")
    labels = (first_rank * bins) // n

    blocks: list[list[int]] = []
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        blocks.append([int(idx[0]), int(idx[-1]) + 1])

    merged: list[list[int]] = []
    carry: list[int] | None = None
    for start, stop in blocks:
        if carry is not None:
            start = carry[0]
        if stop - start < min_count:
            carry = [start, stop]
            continue
        merged.append([start, stop])
        carry = None
    if carry is not None:
        if merged:
            merged[-1][1] = carry[1]
        else:
            merged.append(carry)

    out = []
    for start, stop in merged:
        r = r_sorted[start:stop]
        g = g_sorted[start:stop]
        out.append(PosteriorBin(0.5 * (float(r[0]) + float(r[-1])), float(np.mean(g)), int(stop - start)))
    return out
