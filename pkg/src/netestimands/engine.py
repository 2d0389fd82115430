"""Exact and Monte Carlo expectations of functionals of ``(Z, Y)``.

Exact mode enumerates masks ``0..2^n-1`` in ascending order, in contiguous
chunks; each chunk yields partial sums that are reduced in chunk order, so
the result is independent of the number of workers. Conditional expectations
are ratios of two weighted sums from the same pass.

Monte Carlo mode draws fixed-size sample chunks from seeded substreams (see
:func:`netestimands.policy.substream`) and reports a standard error from the
per-sample influence values of the (ratio) estimator.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .assignments import MAX_MASK_UNITS, bits, masks_of
from .errors import EnumerationTooLarge, ZeroProbabilityEvent
from .policy import Policy, substream
from .science import DEFAULT_CAP, ScienceTable

EXACT = "exact"
MONTE_CARLO = "monte_carlo"
MC_CHUNK = 1 << 14


@dataclass(frozen=True)
class EngineSettings:
    mode: str = EXACT
    n_samples: int = 100_000
    seed: int = 0
    cap: int = DEFAULT_CAP
    chunk_size: int = 1 << 16
    workers: int = 1

    def __post_init__(self):
        if self.mode not in (EXACT, MONTE_CARLO):
            raise ValueError(f"mode must be {EXACT!r} or {MONTE_CARLO!r}, got {self.mode!r}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be positive, got {self.n_samples}")
        if self.chunk_size < 1 or self.workers < 1:
            raise ValueError("chunk_size and workers must be positive")


@dataclass(frozen=True)
class Batch:
    """A block of assignments with their outcome rows."""

    z: np.ndarray
    y: np.ndarray
    masks: Optional[np.ndarray]
    table: ScienceTable

    def outcomes(self, z: np.ndarray) -> np.ndarray:
        """Outcomes at other assignments (e.g. with one unit's treatment flipped)."""
        return self.table.outcomes(z)


@dataclass(frozen=True)
class Functional:
    """``value(batch)`` with an optional conditioning ``event(batch)``.

    Both may return shape ``(m,)`` or ``(m, K)`` for ``K`` expectations
    computed in the same pass. ``event_name`` is a label, or a callable giving
    the label of component ``k``, used in zero-probability errors.
    """

    value: Callable[[Batch], np.ndarray]
    event: Optional[Callable[[Batch], np.ndarray]] = None
    name: str = "functional"
    event_name: Union[str, Callable[[int], str]] = "event"

    def label(self, k: int) -> str:
        return self.event_name(k) if callable(self.event_name) else self.event_name


@dataclass(frozen=True)
class EstimandResult:
    value: float
    method: str = EXACT
    std_error: float = 0.0
    event_probability: float = 1.0
    n_samples: int = 0

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be non-negative")


Term = tuple[Union[float, np.ndarray], Functional]


def enumerate_chunks(n: int, cap: int = DEFAULT_CAP, chunk_size: int = 1 << 16) -> list[tuple[int, int]]:
    if n > cap:
        raise EnumerationTooLarge(n, cap)
    if n > MAX_MASK_UNITS:
        raise EnumerationTooLarge(n, MAX_MASK_UNITS)
    total = 1 << n
    return [(lo, min(total, lo + chunk_size)) for lo in range(0, total, chunk_size)]


def _columns(arr, m: int) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] != m:
        raise ValueError(f"functional returned shape {arr.shape}, expected ({m},) or ({m}, K)")
    return arr


def _evaluate(f: Functional, batch: Batch) -> tuple[np.ndarray, np.ndarray]:
    m = batch.z.shape[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        val = _columns(f.value(batch), m).astype(np.float64)
        ev = np.ones((m, 1), dtype=bool) if f.event is None else _columns(f.event(batch), m).astype(bool)
    ev = np.broadcast_to(ev, np.broadcast_shapes(ev.shape, val.shape))
    val = np.broadcast_to(val, ev.shape)
    return val, ev


def _exact_chunk(terms: Sequence[Term], pi: Policy, table: ScienceTable, lo: int, hi: int):
    masks = np.arange(lo, hi, dtype=np.int64)
    p = pi.pmf_masks(masks)
    batch = Batch(bits(masks, table.n), table.outcomes_range(lo, hi), masks, table)
    out = []
    for _, f in terms:
        val, ev = _evaluate(f, batch)
        live = ev & (p > 0)[:, None]
        if not np.isfinite(val[live]).all():
            raise ValueError(f"{f.name} is not finite on a supported assignment")
        out.append((np.where(live, val, 0.0).T @ p, live.T @ p))
    return out


def _finish(terms: Sequence[Term], nums, dens):
    total = 0.0
    thetas = []
    for (w, f), num, den in zip(terms, nums, dens):
        for k in np.flatnonzero(den <= 0):
            raise ZeroProbabilityEvent(f.label(int(k)))
        theta = num / den
        thetas.append(theta)
        total += float(np.sum(np.broadcast_to(w, theta.shape) * theta))
    probs = [float(d.min()) for d in dens]
    return total, thetas, (min(probs) if probs else 1.0)


def exact_combination(terms: Sequence[Term], pi: Policy, table: ScienceTable, settings: EngineSettings = EngineSettings()) -> EstimandResult:
    """``sum_t w_t . E[value_t | event_t]`` by full enumeration."""
    if pi.n != table.n:
        raise ValueError(f"policy has {pi.n} units but table has {table.n}")
    chunks = enumerate_chunks(table.n, settings.cap, settings.chunk_size)
    run = lambda c: _exact_chunk(terms, pi, table, *c)
    if settings.workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(settings.workers) as ex:
            partials = list(ex.map(run, chunks))
    else:
        partials = [run(c) for c in chunks]
    nums = [sum(part[t][0] for part in partials) for t in range(len(terms))]
    dens = [sum(part[t][1] for part in partials) for t in range(len(terms))]
    value, _, prob = _finish(terms, nums, dens)
    return EstimandResult(value, EXACT, 0.0, prob)


def mc_combination(terms: Sequence[Term], pi: Policy, table: ScienceTable, settings: EngineSettings = EngineSettings(mode=MONTE_CARLO)) -> EstimandResult:
    """Monte Carlo version of :func:`exact_combination` with a delta-method standard error."""
    if pi.n != table.n:
        raise ValueError(f"policy has {pi.n} units but table has {table.n}")
    n_total = settings.n_samples
    sizes = [min(MC_CHUNK, n_total - lo) for lo in range(0, n_total, MC_CHUNK)]

    def run(c):
        z = pi.sample_many(substream(settings.seed, c), sizes[c])
        masks = masks_of(z) if table.n <= MAX_MASK_UNITS else None
        batch = Batch(z, table.outcomes(z), masks, table)
        out = []
        for _, f in terms:
            val, ev = _evaluate(f, batch)
            if not np.isfinite(val[ev]).all():
                raise ValueError(f"{f.name} is not finite on a sampled assignment")
            out.append((np.where(ev, val, 0.0), ev.astype(np.float64)))
        return out

    if settings.workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(settings.workers) as ex:
            partials = list(ex.map(run, range(len(sizes))))
    else:
        partials = [run(c) for c in range(len(sizes))]
    u = [np.concatenate([part[t][0] for part in partials]) for t in range(len(terms))]
    e = [np.concatenate([part[t][1] for part in partials]) for t in range(len(terms))]
    for (_, f), et in zip(terms, e):
        for k in np.flatnonzero(et.sum(axis=0) == 0):
            raise ZeroProbabilityEvent(f"{f.label(int(k))} (no sample out of {n_total} satisfied it)")
    nums = [ut.sum(axis=0) for ut in u]
    dens = [et.sum(axis=0) for et in e]
    value, thetas, _ = _finish(terms, nums, dens)
    psi = np.zeros(n_total)
    for (w, _), ut, et, theta, den in zip(terms, u, e, thetas, dens):
        coef = np.broadcast_to(w, theta.shape) * n_total / den
        psi += (ut - et * theta) @ coef
    ddof = 1 if n_total > 1 else 0
    se = float(np.std(psi, ddof=ddof) / math.sqrt(n_total))
    prob = min(float(d.min()) / n_total for d in dens) if dens else 1.0
    return EstimandResult(value, MONTE_CARLO, se, prob, n_total)


def combination(terms: Sequence[Term], pi: Policy, table: ScienceTable, settings: Optional[EngineSettings] = None) -> EstimandResult:
    settings = settings or EngineSettings()
    if settings.mode == EXACT:
        return exact_combination(terms, pi, table, settings)
    return mc_combination(terms, pi, table, settings)


def exact_means(f: Functional, pi: Policy, table: ScienceTable, settings: Optional[EngineSettings] = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-component ``E[value_k | event_k]`` and ``P(event_k)`` by enumeration."""
    settings = settings or EngineSettings()
    chunks = enumerate_chunks(table.n, settings.cap, settings.chunk_size)
    partials = [_exact_chunk([(1.0, f)], pi, table, *c)[0] for c in chunks]
    num = sum(p[0] for p in partials)
    den = sum(p[1] for p in partials)
    for k in np.flatnonzero(den <= 0):
        raise ZeroProbabilityEvent(f.label(int(k)))
    return num / den, den


def exact_expectation(f: Functional, pi: Policy, table: ScienceTable, settings: Optional[EngineSettings] = None) -> EstimandResult:
    """``E_pi[f | event]`` by enumeration, with the event probability."""
    settings = replace(settings or EngineSettings(), mode=EXACT)
    return exact_combination([(1.0, f)], pi, table, settings)


def mc_expectation(
    f: Functional,
    pi: Policy,
    table: ScienceTable,
    n_samples: int,
    seed: int,
    settings: Optional[EngineSettings] = None,
) -> EstimandResult:
    settings = replace(settings or EngineSettings(), mode=MONTE_CARLO, n_samples=n_samples, seed=seed)
    return mc_combination([(1.0, f)], pi, table, settings)


def expectation(f: Functional, pi: Policy, table: ScienceTable, settings: Optional[EngineSettings] = None) -> EstimandResult:
    return combination([(1.0, f)], pi, table, settings)


def constant(c: float = 1.0) -> Functional:
    return Functional(lambda b: np.full(b.z.shape[0], c), name=f"constant {c}")
