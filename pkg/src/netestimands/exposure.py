"""Exposure mappings, their induced distributions, and level-set consistency."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .assignments import Assignment, bits, format_mask, to_mask
from .graph import Graph
from .science import DEFAULT_CAP, ScienceTable

_CHUNK = 1 << 16


class ExposureMap:
    """Per-unit map from assignments to levels ``0..num_levels-1``."""

    family = "abstract"

    def num_levels(self, g: Graph) -> int:
        raise NotImplementedError

    def levels(self, z: np.ndarray, g: Graph) -> np.ndarray:
        """Integer levels, shape ``(m, n)``, for a batch of assignments."""
        raise NotImplementedError

    def level_names(self, g: Graph) -> list[str]:
        return [str(d) for d in range(self.num_levels(g))]


@dataclass(frozen=True)
class OwnTreatmentExposure(ExposureMap):
    """``d_i(z) = z_i``."""

    family = "own_treatment"

    def num_levels(self, g):
        return 2

    def levels(self, z, g):
        return z.astype(np.int64)


@dataclass(frozen=True)
class NeighborCountCapped(ExposureMap):
    """Number of treated neighbors, with ``cap`` meaning "cap or more"."""

    cap: int = 2
    family = "neighbor_count_capped"

    def __post_init__(self):
        if self.cap < 1:
            raise ValueError(f"cap must be at least 1, got {self.cap}")

    def num_levels(self, g):
        return self.cap + 1

    def levels(self, z, g):
        counts = (z.astype(np.float64) @ g.adjacency).astype(np.int64)
        return np.minimum(counts, self.cap)

    def level_names(self, g):
        return [str(d) for d in range(self.cap)] + [f"{self.cap}+"]


@dataclass(frozen=True)
class OwnAndAnyNeighbor(ExposureMap):
    """``2 * z_i + 1{some neighbor treated}`` (four levels)."""

    family = "own_and_any_neighbor"

    def num_levels(self, g):
        return 4

    def levels(self, z, g):
        any_nbr = (z.astype(np.float64) @ g.adjacency) > 0
        return 2 * z.astype(np.int64) + any_nbr.astype(np.int64)


class CustomExposure(ExposureMap):
    """Wraps ``fn(z_batch, graph) -> (m, n)`` integer levels."""

    family = "custom"

    def __init__(self, fn: Callable[[np.ndarray, Graph], np.ndarray], n_levels: int) -> None:
        self.fn = fn
        self.n_levels = n_levels

    def num_levels(self, g):
        return self.n_levels

    def levels(self, z, g):
        out = np.asarray(self.fn(z, g), dtype=np.int64)
        if out.shape != z.shape:
            raise ValueError(f"custom exposure returned shape {out.shape}, expected {z.shape}")
        if out.size and (out.min() < 0 or out.max() >= self.n_levels):
            raise ValueError(f"custom exposure produced a level outside 0..{self.n_levels - 1}")
        return out


def exposure_of(emap: ExposureMap, g: Graph, i: int, z: Assignment) -> int:
    if not 0 <= i < g.n:
        raise IndexError(f"unit {i} out of range for n={g.n}")
    mask = to_mask(z, g.n)
    return int(emap.levels(bits(np.array([mask]), g.n), g)[0, i])


def exposure_distribution(emap: ExposureMap, g: Graph, i: int, pi, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Exact pmf of unit ``i``'s exposure level under policy ``pi``."""
    if not 0 <= i < g.n:
        raise IndexError(f"unit {i} out of range for n={g.n}")
    from .engine import enumerate_chunks

    k = emap.num_levels(g)
    out = np.zeros(k)
    for lo, hi in enumerate_chunks(g.n, cap):
        masks = np.arange(lo, hi, dtype=np.int64)
        lv = emap.levels(bits(masks, g.n), g)[:, i]
        out += np.bincount(lv, weights=pi.pmf_masks(masks), minlength=k)
    return out


@dataclass(frozen=True)
class Witness:
    """Two assignments with equal exposure but different outcomes for ``unit``."""

    unit: int
    level: int
    z_ref: int
    z_other: int
    y_ref: float
    y_other: float

    def revalidate(self, table: ScienceTable, emap: ExposureMap, tol: float = 0.0) -> bool:
        """True iff the witness still violates the level-set property."""
        g = table.graph
        same_level = exposure_of(emap, g, self.unit, self.z_ref) == exposure_of(
            emap, g, self.unit, self.z_other
        )
        gap = abs(table.evaluate(self.unit, self.z_ref) - table.evaluate(self.unit, self.z_other))
        return same_level and gap > tol

    def describe(self, n: int) -> str:
        return (
            f"unit {self.unit + 1}, level {self.level}: S={format_mask(self.z_ref, n)} "
            f"gives {self.y_ref!r}, S={format_mask(self.z_other, n)} gives {self.y_other!r}"
        )


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    witness: Optional[Witness] = None

    @property
    def verdict(self) -> str:
        return "consistent" if self.consistent else "inconsistent"


def check_consistency(
    table: ScienceTable, emap: ExposureMap, tol: float = 0.0, cap: int = DEFAULT_CAP
) -> ConsistencyReport:
    """Check outcomes are constant on every exposure level set of every unit.

    Each unit's assignments are grouped by level and compared with the first
    (lowest-mask) member of the group. The witness is the lowest unit with a
    violation and, within it, the lowest offending mask.
    """
    g = table.graph
    values = table.dense(cap)
    masks = np.arange(1 << g.n, dtype=np.int64)
    levels = np.empty((1 << g.n, g.n), dtype=np.int64)
    for lo in range(0, 1 << g.n, _CHUNK):
        hi = min(1 << g.n, lo + _CHUNK)
        levels[lo:hi] = emap.levels(bits(masks[lo:hi], g.n), g)
    for i in range(g.n):
        lv = levels[:, i]
        _, first = np.unique(lv, return_index=True)
        rep = np.full(emap.num_levels(g), -1, dtype=np.int64)
        rep[lv[first]] = first
        ref = rep[lv]
        bad = np.abs(values[i] - values[i, ref]) > tol
        if bad.any():
            j = int(np.argmax(bad))
            r = int(ref[j])
            return ConsistencyReport(
                False,
                Witness(i, int(lv[j]), r, j, float(values[i, r]), float(values[i, j])),
            )
    return ConsistencyReport(True)


def level_outcomes(table: ScienceTable, emap: ExposureMap, cap: int = DEFAULT_CAP) -> np.ndarray:
    """``y_i(d)`` per unit and level; NaN where a unit cannot reach the level.

    Raises :class:`~netestimands.errors.InconsistentExposure` if the map does
    not respect the table.
    """
    from .errors import InconsistentExposure

    report = check_consistency(table, emap, cap=cap)
    if not report.consistent:
        raise InconsistentExposure(report, table.n)
    g = table.graph
    values = table.dense(cap)
    k = emap.num_levels(g)
    out = np.full((g.n, k), np.nan)
    for lo in range(0, 1 << g.n, _CHUNK):
        hi = min(1 << g.n, lo + _CHUNK)
        lv = emap.levels(bits(np.arange(lo, hi, dtype=np.int64), g.n), g)
        for i in range(g.n):
            missing = np.isnan(out[i])
            if not missing.any():
                continue
            _, first = np.unique(lv[:, i], return_index=True)
            for j in first:
                d = lv[j, i]
                if missing[d]:
                    out[i, d] = values[i, lo + j]
    return out
