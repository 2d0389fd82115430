"""Treatment policies: distributions over assignment vectors.

Every policy exposes an exact pmf over integer masks, a vectorized sampler,
and exact conditioning on a partial assignment.

Seeding: a single integer master seed; the random stream for chunk ``c`` is
``default_rng(SeedSequence(seed, spawn_key=(c,)))`` (see :func:`substream`),
so results do not depend on how chunks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .assignments import Assignment, bits, popcounts, to_mask
from .errors import EnumerationTooLarge, ZeroProbabilityEvent
from .graph import Graph


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for chunk ``index`` under master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _check_prob(x: float, name: str) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x}")
    return x


def _normalize_fixed(fixed: Mapping[int, int], n: int) -> tuple[tuple[int, int], ...]:
    out = []
    for i, v in fixed.items():
        if not 0 <= i < n:
            raise ValueError(f"conditioned unit {i} out of range for n={n}")
        if v not in (0, 1):
            raise ValueError(f"conditioned value for unit {i} must be 0 or 1, got {v}")
        out.append((int(i), int(v)))
    return tuple(sorted(out))


def _describe(fixed) -> str:
    return ", ".join(f"Z_{i + 1}={v}" for i, v in fixed) or "(no constraint)"


class Policy:
    """Base class; subclasses are frozen dataclasses with an ``n`` field."""

    family = "abstract"
    n: int

    #: entries of Z independent (so the policy factorizes over any unit partition)
    is_product = False

    def pmf_masks(self, masks: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def marginals(self) -> np.ndarray:
        """``P(Z_i = 1)`` for every unit."""
        raise NotImplementedError

    def event_probability(self, fixed: Mapping[int, int]) -> float:
        raise NotImplementedError

    def _rest(self, fixed: tuple[tuple[int, int], ...]) -> "Policy":
        raise NotImplementedError

    def pmf(self, z: Assignment) -> float:
        return float(self.pmf_masks(np.array([to_mask(z, self.n)], dtype=np.int64))[0])

    def pmf_vector(self, cap: int = 20) -> np.ndarray:
        if self.n > cap:
            raise EnumerationTooLarge(self.n, cap)
        return self.pmf_masks(np.arange(1 << self.n, dtype=np.int64))

    def sample(self, seed: int) -> np.ndarray:
        return self.sample_many(np.random.default_rng(seed), 1)[0]

    def condition(self, fixed: Mapping[int, int]) -> "Conditioned":
        """Exact conditional policy given ``Z_i = fixed[i]`` for ``i`` in ``fixed``."""
        norm = _normalize_fixed(fixed, self.n)
        prob = self.event_probability(dict(norm))
        if prob <= 0.0:
            raise ZeroProbabilityEvent(_describe(norm))
        return Conditioned(self, norm, prob)

    def restrict(self, units: Sequence[int]) -> "Policy":
        """Marginal policy on ``units``; only defined for product policies."""
        raise TypeError(f"{self.family} policies do not factorize over units")


@dataclass(frozen=True)
class HeterogeneousBernoulli(Policy):
    """Independent ``Z_i ~ Bernoulli(p_i)``."""

    p: tuple[float, ...]
    family = "heterogeneous_bernoulli"
    is_product = True

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(_check_prob(x, "p_i") for x in self.p))

    @property
    def n(self) -> int:
        return len(self.p)

    def pmf_masks(self, masks):
        p = np.asarray(self.p)
        z = bits(masks, self.n)
        return np.prod(np.where(z, p, 1.0 - p), axis=1)

    def sample_many(self, rng, size):
        return rng.random((size, self.n)) < np.asarray(self.p)

    def marginals(self):
        return np.asarray(self.p, dtype=np.float64)

    def event_probability(self, fixed):
        prob = 1.0
        for i, v in _normalize_fixed(fixed, self.n):
            prob *= self.p[i] if v else 1.0 - self.p[i]
        return prob

    def _rest(self, fixed):
        held = {i for i, _ in fixed}
        return HeterogeneousBernoulli(tuple(x for i, x in enumerate(self.p) if i not in held))

    def restrict(self, units):
        return HeterogeneousBernoulli(tuple(self.p[i] for i in units))


@dataclass(frozen=True)
class HomogeneousBernoulli(Policy):
    """Independent ``Z_i ~ Bernoulli(p)``."""

    n: int
    p: float
    family = "homogeneous_bernoulli"
    is_product = True

    def __post_init__(self):
        object.__setattr__(self, "p", _check_prob(self.p, "p"))
        if self.n < 0:
            raise ValueError("n must be non-negative")

    def pmf_masks(self, masks):
        k = _popcount(masks, self.n)
        return self.p ** k * (1.0 - self.p) ** (self.n - k)

    def sample_many(self, rng, size):
        return rng.random((size, self.n)) < self.p

    def marginals(self):
        return np.full(self.n, self.p)

    def event_probability(self, fixed):
        fixed = _normalize_fixed(fixed, self.n)
        ones = sum(v for _, v in fixed)
        return self.p ** ones * (1.0 - self.p) ** (len(fixed) - ones)

    def _rest(self, fixed):
        return HomogeneousBernoulli(self.n - len(fixed), self.p)

    def restrict(self, units):
        return HomogeneousBernoulli(len(units), self.p)


@dataclass(frozen=True)
class CompletelyRandomized(Policy):
    """Uniform over assignments with exactly ``m`` of ``n`` treated."""

    n: int
    m: int
    family = "completely_randomized"

    def __post_init__(self):
        if not 0 <= self.m <= self.n:
            raise ValueError(f"m must lie in 0..n={self.n}, got {self.m}")

    def pmf_masks(self, masks):
        k = _popcount(masks, self.n)
        return np.where(k == self.m, 1.0 / math.comb(self.n, self.m), 0.0)

    def sample_many(self, rng, size):
        keys = rng.random((size, self.n))
        ranks = keys.argsort(axis=1).argsort(axis=1)
        return ranks < self.m

    def marginals(self):
        return np.full(self.n, self.m / self.n if self.n else 0.0)

    def event_probability(self, fixed):
        fixed = _normalize_fixed(fixed, self.n)
        ones = sum(v for _, v in fixed)
        zeros = len(fixed) - ones
        if ones > self.m or zeros > self.n - self.m:
            return 0.0
        return math.comb(self.n - len(fixed), self.m - ones) / math.comb(self.n, self.m)

    def _rest(self, fixed):
        ones = sum(v for _, v in fixed)
        return CompletelyRandomized(self.n - len(fixed), self.m - ones)


@dataclass(frozen=True)
class AllOrNone(Policy):
    """Treat everyone with probability ``q``, no one otherwise."""

    n: int
    q: float = 0.5
    family = "all_or_none"

    def __post_init__(self):
        object.__setattr__(self, "q", _check_prob(self.q, "q"))

    def pmf_masks(self, masks):
        masks = np.asarray(masks, dtype=np.int64)
        if self.n == 0:
            return np.ones(masks.shape)
        full = (1 << self.n) - 1
        return np.where(masks == full, self.q, 0.0) + np.where(masks == 0, 1.0 - self.q, 0.0)

    def sample_many(self, rng, size):
        treat = rng.random(size) < self.q
        return np.repeat(treat[:, None], self.n, axis=1)

    def marginals(self):
        return np.full(self.n, self.q)

    def event_probability(self, fixed):
        vals = {v for _, v in _normalize_fixed(fixed, self.n)}
        if not vals:
            return 1.0
        if vals == {1}:
            return self.q
        if vals == {0}:
            return 1.0 - self.q
        return 0.0

    def _rest(self, fixed):
        vals = {v for _, v in fixed}
        if not vals:
            return self
        return AllOrNone(self.n - len(fixed), 1.0 if vals == {1} else 0.0)


@dataclass(frozen=True)
class Conditioned(Policy):
    """A base policy conditioned on fixed treatments of some units.

    ``pmf`` and ``sample_many`` work on all ``n`` units (fixed entries held);
    :attr:`rest` is the conditional law of the free units in closed family
    form, on the free units in ascending index order.
    """

    base: Policy
    fixed: tuple[tuple[int, int], ...]
    probability: float
    family = "conditioned"

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def free_units(self) -> tuple[int, ...]:
        held = {i for i, _ in self.fixed}
        return tuple(i for i in range(self.n) if i not in held)

    @property
    def rest(self) -> Policy:
        return self.base._rest(self.fixed)

    def _consistent(self, masks):
        masks = np.asarray(masks, dtype=np.int64)
        ok = np.ones(masks.shape, dtype=bool)
        for i, v in self.fixed:
            ok &= ((masks >> i) & 1) == v
        return ok

    def pmf_masks(self, masks):
        return np.where(self._consistent(masks), self.base.pmf_masks(masks) / self.probability, 0.0)

    def sample_many(self, rng, size):
        z = np.empty((size, self.n), dtype=bool)
        z[:, list(self.free_units)] = self.rest.sample_many(rng, size)
        for i, v in self.fixed:
            z[:, i] = bool(v)
        return z

    def marginals(self):
        out = np.empty(self.n)
        out[list(self.free_units)] = self.rest.marginals()
        for i, v in self.fixed:
            out[i] = v
        return out

    def event_probability(self, fixed):
        merged = dict(self.fixed)
        for i, v in _normalize_fixed(fixed, self.n):
            if merged.get(i, v) != v:
                return 0.0
            merged[i] = v
        return self.base.event_probability(merged) / self.probability

    def condition(self, fixed):
        merged = dict(self.fixed)
        merged.update(dict(_normalize_fixed(fixed, self.n)))
        if self.event_probability(fixed) <= 0.0:
            raise ZeroProbabilityEvent(_describe(_normalize_fixed(merged, self.n)))
        return self.base.condition(merged)

    def _rest(self, fixed):
        return self.base._rest(tuple(sorted(set(self.fixed) | set(fixed))))

    @property
    def is_product(self):
        return self.base.is_product


def _popcount(masks, n: int) -> np.ndarray:
    masks = np.asarray(masks, dtype=np.int64)
    if n <= 20:
        return popcounts(n)[masks]
    return bits(masks, n).sum(axis=1)


def bernoulli_by_degree(g: Graph, probs: Mapping[int, float]) -> HeterogeneousBernoulli:
    """Heterogeneous Bernoulli policy with one probability per degree class."""
    missing = sorted({int(d) for d in g.degrees} - set(probs))
    if missing:
        raise ValueError(f"no treatment probability given for degree {missing[0]}")
    return HeterogeneousBernoulli(tuple(probs[int(d)] for d in g.degrees))
