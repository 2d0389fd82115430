"""Potential-outcome models and the science table ``y_i(z)``.

A model maps a batch of assignments ``Z`` (an ``(m, n)`` boolean matrix) on a
graph to an ``(m, n)`` matrix of outcomes. A :class:`ScienceTable` binds a
model to a graph and either materializes all ``2^n`` columns or evaluates
columns on demand.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .assignments import MAX_MASK_UNITS, Assignment, bits, masks_of, to_mask
from .errors import EnumerationTooLarge
from .graph import Graph, empty_graph

DEFAULT_CAP = 20
_CHUNK = 1 << 16


class OutcomeModel:
    """Base class for outcome families."""

    family = "abstract"

    def outcomes(self, z: np.ndarray, g: Graph) -> np.ndarray:
        raise NotImplementedError

    def validate(self, g: Graph) -> None:
        """Raise ``ValueError`` if the model cannot be evaluated on ``g``."""

    def __add__(self, other: "OutcomeModel") -> "LinearCombination":
        return LinearCombination(((1.0, self), (1.0, other)))

    def __rmul__(self, weight: float) -> "LinearCombination":
        return LinearCombination(((float(weight), self),))


def _per_unit(values, n: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name} must be a scalar or have length {n}, got shape {arr.shape}")
    return arr


def _as_tuple(values):
    if np.ndim(values) == 0:
        return float(values)
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class OwnTreatment(OutcomeModel):
    """``y_i(z) = alpha + tau * z_i``."""

    alpha: float = 0.0
    tau: float = 1.0
    family = "own_treatment"

    def outcomes(self, z, g):
        return self.alpha + self.tau * z.astype(np.float64)


@dataclass(frozen=True)
class TreatedNeighborCount(OutcomeModel):
    """``y_i(z)`` is the number of treated neighbors of ``i``."""

    family = "treated_neighbor_count"

    def outcomes(self, z, g):
        return z.astype(np.float64) @ g.adjacency


@dataclass(frozen=True)
class OneTreatedNeighborIndicator(OutcomeModel):
    """``y_i(z) = c_i`` when exactly one neighbor of ``i`` is treated, else 0."""

    c: Union[float, tuple[float, ...]] = 1.0
    family = "one_treated_neighbor_indicator"

    def __post_init__(self):
        object.__setattr__(self, "c", _as_tuple(self.c))

    def validate(self, g):
        _per_unit(self.c, g.n, "c")

    def outcomes(self, z, g):
        counts = z.astype(np.float64) @ g.adjacency
        return np.where(counts == 1.0, _per_unit(self.c, g.n, "c"), 0.0)


@dataclass(frozen=True)
class ConstantBaseline(OutcomeModel):
    """``y_i(z) = b_i`` regardless of treatment."""

    b: Union[float, tuple[float, ...]] = 0.0
    family = "constant_baseline"

    def __post_init__(self):
        object.__setattr__(self, "b", _as_tuple(self.b))

    def validate(self, g):
        _per_unit(self.b, g.n, "b")

    def outcomes(self, z, g):
        return np.broadcast_to(_per_unit(self.b, g.n, "b"), z.shape).copy()


@dataclass(frozen=True)
class ExposureResponse(OutcomeModel):
    """``y_i(z) = values[i][d_i(z)]`` for an exposure map ``d``.

    Respects the map by construction; used for the biclique settings where
    each half has its own outcome per exposure level.
    """

    exposure: object
    values: tuple[tuple[float, ...], ...]
    family = "exposure_response"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(tuple(float(x) for x in row) for row in self.values))

    def validate(self, g):
        if len(self.values) != g.n:
            raise ValueError(f"need one outcome row per unit ({g.n}), got {len(self.values)}")
        k = self.exposure.num_levels(g)
        for i, row in enumerate(self.values):
            if len(row) != k:
                raise ValueError(f"unit {i}: need {k} outcomes (one per level), got {len(row)}")

    def outcomes(self, z, g):
        table = np.asarray(self.values, dtype=np.float64)
        levels = self.exposure.levels(z, g)
        return table[np.arange(g.n)[None, :], levels]


class ExplicitTable(OutcomeModel):
    """Arbitrary outcomes given densely as an ``(n, 2^n)`` array."""

    family = "explicit_table"

    def __init__(self, values) -> None:
        values = np.array(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("explicit table must be two-dimensional")
        n = values.shape[0]
        if n > MAX_MASK_UNITS or values.shape[1] != 1 << n:
            raise ValueError(
                f"explicit table for {n} units needs {1 << n} columns, got {values.shape[1]}"
            )
        if not np.isfinite(values).all():
            raise ValueError("explicit table contains non-finite outcomes")
        values.setflags(write=False)
        self.values = values

    def validate(self, g):
        if g.n != self.values.shape[0]:
            raise ValueError(f"table has {self.values.shape[0]} units but graph has {g.n}")

    def outcomes(self, z, g):
        return self.values[:, masks_of(z)].T

    def __eq__(self, other):
        return isinstance(other, ExplicitTable) and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True)
class LinearCombination(OutcomeModel):
    """``sum_k w_k * model_k``."""

    terms: tuple[tuple[float, OutcomeModel], ...]
    family = "linear_combination"

    def validate(self, g):
        for _, model in self.terms:
            model.validate(g)

    def outcomes(self, z, g):
        out = np.zeros(z.shape, dtype=np.float64)
        for w, model in self.terms:
            out += w * model.outcomes(z, g)
        return out


class Componentwise(OutcomeModel):
    """Copies of a component table on a disjoint union.

    Unit ``i`` of copy ``c`` has outcome ``table.y_i`` evaluated on copy
    ``c``'s own block of the assignment.
    """

    family = "componentwise"

    def __init__(self, table: "ScienceTable", copies: int) -> None:
        self.table = table
        self.copies = copies

    def validate(self, g):
        if g.n != self.table.n * self.copies:
            raise ValueError(f"graph has {g.n} units, expected {self.table.n * self.copies}")

    def outcomes(self, z, g):
        n = self.table.n
        m = z.shape[0]
        blocks = z.reshape(m * self.copies, n)
        return self.table.outcomes(blocks).reshape(m, n * self.copies)


class ScienceTable:
    """The ``n x 2^n`` potential-outcomes table of a model on a graph."""

    def __init__(self, model: OutcomeModel, graph: Graph, values: Optional[np.ndarray] = None) -> None:
        model.validate(graph)
        self.model = model
        self.graph = graph
        self.n = graph.n
        if values is not None:
            values.setflags(write=False)
        self.values = values

    @property
    def is_materialized(self) -> bool:
        return self.values is not None

    def outcomes(self, z: np.ndarray) -> np.ndarray:
        """Outcome rows for a batch of assignments (``(m, n)`` boolean)."""
        if self.values is not None:
            return self.values[:, masks_of(z)].T
        y = np.asarray(self.model.outcomes(z, self.graph), dtype=np.float64)
        if not np.isfinite(y).all():
            raise ValueError(f"{self.model.family} produced non-finite outcomes")
        return y

    def outcomes_range(self, lo: int, hi: int) -> np.ndarray:
        """Outcome rows for the contiguous masks ``lo..hi-1``."""
        if self.values is not None:
            return self.values[:, lo:hi].T
        return self.outcomes(bits(np.arange(lo, hi, dtype=np.int64), self.n))

    def column(self, z: Assignment) -> np.ndarray:
        mask = to_mask(z, self.n)
        if self.values is not None:
            return self.values[:, mask].copy()
        return self.outcomes(bits(np.array([mask]), self.n))[0]

    def evaluate(self, i: int, z: Assignment) -> float:
        if not 0 <= i < self.n:
            raise IndexError(f"unit {i} out of range for n={self.n}")
        return float(self.column(z)[i])

    def dense(self, cap: int = DEFAULT_CAP) -> np.ndarray:
        """All ``2^n`` columns, materializing if needed."""
        if self.values is not None:
            return self.values
        return _materialize(self.model, self.graph, cap)


def _materialize(model: OutcomeModel, g: Graph, cap: int) -> np.ndarray:
    if g.n > cap:
        raise EnumerationTooLarge(g.n, cap)
    total = 1 << g.n
    values = np.empty((g.n, total), dtype=np.float64)
    for lo in range(0, total, _CHUNK):
        hi = min(total, lo + _CHUNK)
        z = bits(np.arange(lo, hi, dtype=np.int64), g.n)
        values[:, lo:hi] = np.asarray(model.outcomes(z, g), dtype=np.float64).T
    if not np.isfinite(values).all():
        raise ValueError(f"{model.family} produced non-finite outcomes")
    values.setflags(write=False)
    return values


def tabulate(model: OutcomeModel, g: Graph, cap: int = DEFAULT_CAP) -> ScienceTable:
    """Materialize every column of the table; fails above ``cap`` units."""
    model.validate(g)
    if isinstance(model, ExplicitTable):
        if g.n > cap:
            raise EnumerationTooLarge(g.n, cap)
        return ScienceTable(model, g, model.values)
    return ScienceTable(model, g, _materialize(model, g, cap))


def lazy_table(model: OutcomeModel, g: Graph) -> ScienceTable:
    """Table evaluated column-by-column on demand; usable past the cap for sampling."""
    return ScienceTable(model, g)


def explicit_table(values, graph: Optional[Graph] = None) -> ScienceTable:
    model = ExplicitTable(values)
    if graph is None:
        graph = empty_graph(model.values.shape[0])
    return ScienceTable(model, graph, model.values)


def random_table(g: Graph, seed: int, scale: float = 1.0) -> ScienceTable:
    """Table with i.i.d. normal entries; handy for identities that hold for any table."""
    rng = np.random.default_rng(seed)
    return explicit_table(scale * rng.standard_normal((g.n, 1 << g.n)), g)


def read_table_csv(source: Union[str, Path, io.TextIOBase], graph: Optional[Graph] = None) -> ScienceTable:
    """Read an explicit table.

    The header is ``unit`` followed by assignment bitmasks (bit ``i`` is unit
    ``i+1``), in any order; each following row is one unit, in order.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            rows = list(csv.reader(fh))
    else:
        rows = list(csv.reader(source))
    if not rows:
        raise ValueError("table CSV is empty")
    header, body = rows[0], [r for r in rows[1:] if r]
    n = len(body)
    try:
        masks = [int(h) for h in header[1:]]
    except ValueError:
        raise ValueError("table CSV header must list integer assignment bitmasks") from None
    if sorted(masks) != list(range(1 << n)):
        raise ValueError(f"table CSV for {n} units must have exactly the columns 0..{(1 << n) - 1}")
    values = np.empty((n, 1 << n))
    for r, row in enumerate(body):
        if len(row) != len(header):
            raise ValueError(f"row {r + 2}: expected {len(header)} fields, got {len(row)}")
        values[r, masks] = [float(x) for x in row[1:]]
    return explicit_table(values, graph)


def write_table_csv(table: ScienceTable, path: Union[str, Path], cap: int = DEFAULT_CAP) -> None:
    values = table.dense(cap)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["unit"] + [str(m) for m in range(values.shape[1])])
        for i, row in enumerate(values):
            w.writerow([i + 1] + [format(x, ".17g") for x in row])
