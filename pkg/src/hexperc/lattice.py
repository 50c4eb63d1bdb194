"""Hexagonal-cell patches in axial coordinates, plus a generic cell-graph view.

A patch of side ``s`` is the set of hexagonal cells at hex distance at most
``s - 1`` from a central cell O.  The center is excluded from everything that
gets colored; the remaining ``m = 3 s (s - 1)`` cells carry the fluids.  Cells
are indexed in lexicographic ``(q, r)`` order so that every structure built
here is reproducible byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

# The six axial directions, in the fixed order used everywhere.
HEX_DIRECTIONS: tuple[tuple[int, int], ...] = (
    (1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1),
)


@dataclass(frozen=True, order=True)
class HexCoord:
    """Axial coordinates of a hexagonal cell."""

    q: int
    r: int

    def neighbors(self) -> tuple["HexCoord", ...]:
        return tuple(HexCoord(self.q + dq, self.r + dr) for dq, dr in HEX_DIRECTIONS)


def hex_distance(a: HexCoord, b: HexCoord) -> int:
    """Graph distance between two cells of the infinite hexagonal tiling."""
    dq = a.q - b.q
    dr = a.r - b.r
    return (abs(dq) + abs(dr) + abs(dq + dr)) // 2


@dataclass(frozen=True)
class Lattice:
    """Side-``s`` patch with the center removed.

    ``cells`` lists the m colored cells sorted by ``(q, r)``; all mask fields
    are integers whose bit ``i`` refers to ``cells[i]``.
    """

    s: int
    m: int
    cells: tuple[HexCoord, ...]
    adjacency: tuple[tuple[int, ...], ...]
    neighbor_masks: tuple[int, ...]
    boundary: tuple[int, ...]
    center_adjacent: tuple[int, ...]
    boundary_mask: int
    center_adjacent_mask: int

    @property
    def full_mask(self) -> int:
        return (1 << self.m) - 1

    def index_of(self, cell: HexCoord) -> int:
        return self._index[cell]

    @cached_property
    def _index(self) -> dict[HexCoord, int]:
        return {c: i for i, c in enumerate(self.cells)}


def build_lattice(s: int) -> Lattice:
    """Construct the side-``s`` patch.  Requires ``s >= 2``."""
    if s < 2:
        raise ValueError(f"side must be at least 2, got {s}")
    center = HexCoord(0, 0)
    radius = s - 1
    cells = sorted(
        HexCoord(q, r)
        for q in range(-radius, radius + 1)
        for r in range(-radius, radius + 1)
        if (q, r) != (0, 0) and hex_distance(HexCoord(q, r), center) <= radius
    )
    m = len(cells)
    assert m == 3 * s * (s - 1), f"cell count {m} != 3s(s-1) at s={s}"

    index = {c: i for i, c in enumerate(cells)}
    adjacency = []
    neighbor_masks = []
    for c in cells:
        ids = tuple(index[nb] for nb in c.neighbors() if nb in index)
        adjacency.append(ids)
        mask = 0
        for i in ids:
            mask |= 1 << i
        neighbor_masks.append(mask)

    boundary = tuple(i for i, c in enumerate(cells) if hex_distance(c, center) == radius)
    center_adjacent = tuple(i for i, c in enumerate(cells) if hex_distance(c, center) == 1)
    assert len(boundary) == 6 * radius
    assert len(center_adjacent) == 6

    boundary_mask = 0
    for i in boundary:
        boundary_mask |= 1 << i
    center_adjacent_mask = 0
    for i in center_adjacent:
        center_adjacent_mask |= 1 << i

    return Lattice(
        s=s,
        m=m,
        cells=cells,
        adjacency=tuple(adjacency),
        neighbor_masks=tuple(neighbor_masks),
        boundary=boundary,
        center_adjacent=center_adjacent,
        boundary_mask=boundary_mask,
        center_adjacent_mask=center_adjacent_mask,
    )


@dataclass(frozen=True)
class CellGraph:
    """Undirected cell graph with designated source and target cells.

    This is the abstraction the path-sum formulas run on: percolation for one
    fluid means an open path from some source to some target.  Edges are
    stored normalized as sorted unique ``(i, j)`` pairs with ``i < j``.
    """

    cell_count: int
    edges: tuple[tuple[int, int], ...]
    sources: frozenset[int]
    targets: frozenset[int]

    def __post_init__(self):
        if self.cell_count < 1:
            raise ValueError("graph needs at least one cell")
        norm = set()
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self loop on cell {a}")
            if not (0 <= a < self.cell_count and 0 <= b < self.cell_count):
                raise ValueError(f"edge ({a}, {b}) out of range")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", tuple(sorted(norm)))
        for name in ("sources", "targets"):
            cells = frozenset(getattr(self, name))
            if not cells:
                raise ValueError(f"{name} must be nonempty")
            if not all(0 <= c < self.cell_count for c in cells):
                raise ValueError(f"{name} contain out-of-range cells")
            object.__setattr__(self, name, cells)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[set[int]] = [set() for _ in range(self.cell_count)]
        for a, b in self.edges:
            nbrs[a].add(b)
            nbrs[b].add(a)
        return tuple(tuple(sorted(ns)) for ns in nbrs)

    @cached_property
    def neighbor_masks(self) -> tuple[int, ...]:
        out = []
        for ns in self.adjacency:
            mask = 0
            for i in ns:
                mask |= 1 << i
            out.append(mask)
        return tuple(out)

    @cached_property
    def source_mask(self) -> int:
        mask = 0
        for i in self.sources:
            mask |= 1 << i
        return mask

    @cached_property
    def target_mask(self) -> int:
        mask = 0
        for i in self.targets:
            mask |= 1 << i
        return mask

    def to_json(self) -> str:
        payload = {
            "cells": self.cell_count,
            "edges": [list(e) for e in self.edges],
            "sources": sorted(self.sources),
            "targets": sorted(self.targets),
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CellGraph":
        payload = json.loads(text)
        return cls(
            cell_count=int(payload["cells"]),
            edges=tuple((int(a), int(b)) for a, b in payload["edges"]),
            sources=frozenset(int(c) for c in payload["sources"]),
            targets=frozenset(int(c) for c in payload["targets"]),
        )


def as_cell_graph(lat: Lattice) -> CellGraph:
    """View a patch as a cell graph: sources are the cells adjacent to the
    center, targets are the outer-ring cells."""
    edges = tuple(
        (i, j) for i, nbrs in enumerate(lat.adjacency) for j in nbrs if i < j
    )
    return CellGraph(
        cell_count=lat.m,
        edges=edges,
        sources=frozenset(lat.center_adjacent),
        targets=frozenset(lat.boundary),
    )


def graph_cells_from_coords(coords: Iterable[HexCoord],
                            sources: Iterable[HexCoord],
                            targets: Iterable[HexCoord]) -> CellGraph:
    """Build a cell graph from explicit hexagonal coordinates.

    Adjacency is inherited from the tiling.  Handy for carving custom patches
    in tests.
    """
    cells = sorted(set(coords))
    index = {c: i for i, c in enumerate(cells)}
    edges = tuple(
        (index[c], index[nb])
        for c in cells
        for nb in c.neighbors()
        if nb in index and index[c] < index[nb]
    )
    return CellGraph(
        cell_count=len(cells),
        edges=edges,
        sources=frozenset(index[c] for c in sources),
        targets=frozenset(index[c] for c in targets),
    )
