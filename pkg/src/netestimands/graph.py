"""Interference graphs and neighborhood structures.

Units are indexed ``0..n-1``. Edge-list files use the 1-based labels of the
``[n]`` convention and are converted on read.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph, immutable after construction."""

    n: int
    neighbors: tuple[frozenset[int], ...]
    labels: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"unit count must be non-negative, got {self.n}")
        if len(self.neighbors) != self.n:
            raise ValueError(
                f"expected {self.n} neighbor sets, got {len(self.neighbors)}"
            )
        if self.labels is not None and len(self.labels) != self.n:
            raise ValueError(f"expected {self.n} labels, got {len(self.labels)}")
        for i, nbrs in enumerate(self.neighbors):
            if i in nbrs:
                raise ValueError(f"self-loop at unit {i}")
            for j in nbrs:
                if not 0 <= j < self.n:
                    raise ValueError(f"neighbor {j} of unit {i} out of range")
                if i not in self.neighbors[j]:
                    raise ValueError(f"adjacency not symmetric for edge ({i}, {j})")

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        labels: Optional[Sequence[str]] = None,
    ) -> "Graph":
        """Build from 0-based edges; duplicates and reversed pairs collapse."""
        sets: list[set[int]] = [set() for _ in range(n)]
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop at unit {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"edge ({a}, {b}) out of range for n={n}")
            sets[a].add(b)
            sets[b].add(a)
        return cls(
            n,
            tuple(frozenset(s) for s in sets),
            tuple(labels) if labels is not None else None,
        )

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.array([len(s) for s in self.neighbors], dtype=np.int64)
        deg.setflags(write=False)
        return deg

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Dense 0/1 adjacency matrix (read-only)."""
        a = np.zeros((self.n, self.n), dtype=np.float64)
        for i, nbrs in enumerate(self.neighbors):
            a[i, list(nbrs)] = 1.0
        a.setflags(write=False)
        return a

    @property
    def num_edges(self) -> int:
        return int(self.degrees.sum()) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in sorted(self.neighbors[i]) if i < j]

    def components(self) -> list[list[int]]:
        """Connected components, each sorted, ordered by smallest member."""
        seen = [False] * self.n
        comps = []
        for start in range(self.n):
            if seen[start]:
                continue
            seen[start] = True
            stack, comp = [start], []
            while stack:
                i = stack.pop()
                comp.append(i)
                for j in self.neighbors[i]:
                    if not seen[j]:
                        seen[j] = True
                        stack.append(j)
            comps.append(sorted(comp))
        return comps


def empty_graph(n: int) -> Graph:
    return Graph(n, tuple(frozenset() for _ in range(n)))


def biclique(u: int, v: int) -> Graph:
    """Complete bipartite graph K_{u,v}.

    Units ``0..u-1`` are the left half (degree ``v``), ``u..u+v-1`` the right
    half (degree ``u``).
    """
    if u < 1 or v < 1:
        raise ValueError(f"biclique sides must be positive, got u={u}, v={v}")
    edges = [(a, u + b) for a in range(u) for b in range(v)]
    return Graph.from_edges(u + v, edges, ["left"] * u + ["right"] * v)


def disjoint_copies(g: Graph, k: int) -> Graph:
    """Disjoint union of ``k`` copies of ``g``; unit ``i`` of copy ``c`` is ``c*n + i``."""
    if k < 1:
        raise ValueError(f"number of copies must be positive, got {k}")
    n = g.n
    neighbors = tuple(
        frozenset(c * n + j for j in g.neighbors[i]) for c in range(k) for i in range(n)
    )
    labels = g.labels * k if g.labels is not None else None
    return Graph(k * n, neighbors, labels)


def parse_edge_list(text: str, n: Optional[int] = None) -> Graph:
    """Parse "u v" lines with 1-based labels; blank lines and ``#`` comments skipped."""
    edges = []
    top = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected two unit labels, got {line!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"line {lineno}: unit labels must be integers") from None
        if a < 1 or b < 1:
            raise ValueError(f"line {lineno}: unit labels are 1-based")
        if a == b:
            raise ValueError(f"line {lineno}: self-loop at unit {a}")
        edges.append((a - 1, b - 1))
        top = max(top, a, b)
    if n is None:
        n = top
    elif top > n:
        raise ValueError(f"edge list mentions unit {top} but n={n}")
    return Graph.from_edges(n, edges)


def read_edge_list(path: Union[str, Path], n: Optional[int] = None) -> Graph:
    return parse_edge_list(Path(path).read_text(), n)


@dataclass(frozen=True)
class NeighborhoodStructure:
    """Per-unit sets ``N_i`` of units whose treatment is taken to affect unit ``i``."""

    n: int
    sets: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        if len(self.sets) != self.n:
            raise ValueError(f"expected {self.n} neighborhoods, got {len(self.sets)}")
        for i, s in enumerate(self.sets):
            if i in s:
                raise ValueError(f"unit {i} is in its own neighborhood")
            if any(not 0 <= j < self.n for j in s):
                raise ValueError(f"neighborhood of unit {i} has an out-of-range index")

    @classmethod
    def from_graph(cls, g: Graph) -> "NeighborhoodStructure":
        return cls(g.n, g.neighbors)

    @cached_property
    def matrix(self) -> np.ndarray:
        """``M[i, j] = 1`` iff ``j`` is in ``N_i``."""
        m = np.zeros((self.n, self.n), dtype=np.float64)
        for i, s in enumerate(self.sets):
            m[i, list(s)] = 1.0
        m.setflags(write=False)
        return m

    @property
    def is_unique_pairs(self) -> bool:
        if any(len(s) != 1 for s in self.sets):
            return False
        targets = [next(iter(s)) for s in self.sets]
        return len(set(targets)) == self.n


def unique_pairs(n: int, assignment: Union[Sequence[int], Mapping[int, int]]) -> NeighborhoodStructure:
    """Neighborhoods ``N_i = {assignment[i]}`` for an injective, fixed-point-free map."""
    if isinstance(assignment, Mapping):
        missing = [i for i in range(n) if i not in assignment]
        if missing:
            raise ValueError(f"assignment is not total: unit {missing[0]} has no target")
        targets = [assignment[i] for i in range(n)]
    else:
        targets = list(assignment)
        if len(targets) != n:
            raise ValueError(f"assignment has {len(targets)} entries, expected {n}")
    owner: dict[int, int] = {}
    for i, j in enumerate(targets):
        if not 0 <= j < n:
            raise ValueError(f"unit {i} assigned out-of-range target {j}")
        if j == i:
            raise ValueError(f"unit {i} is assigned to itself (fixed point)")
        if j in owner:
            raise ValueError(
                f"unit {i} repeats target {j} already assigned to unit {owner[j]}"
            )
        owner[j] = i
    return NeighborhoodStructure(n, tuple(frozenset([j]) for j in targets))
