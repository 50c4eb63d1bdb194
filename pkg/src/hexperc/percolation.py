"""Center-to-boundary percolation tests, scalar and bit-packed.

Fluid i percolates when some cell next to the center is open for it and the
set of open cells connects that cell to the outer ring.  This is plain graph
reachability; nothing here enumerates paths.

Two engines implement the same predicate.  The scalar one works on Python
int masks and is the reference.  ``BatchPercolator`` packs 64 colorings into
each uint64 lane and runs the reachability fixpoint for all of them at once,
which is what makes million-sample campaigns affordable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import Lattice
from .sampling import Coloring


def reachable_mask(neighbor_masks, seed_mask: int, open_mask: int) -> int:
    """Open cells reachable from ``seed_mask & open_mask`` through open cells."""
    visited = seed_mask & open_mask
    frontier = visited
    while frontier:
        grow = 0
        f = frontier
        while f:
            low = f & -f
            grow |= neighbor_masks[low.bit_length() - 1]
            f ^= low
        frontier = grow & open_mask & ~visited
        visited |= frontier
    return visited


def percolates_mask(neighbor_masks, source_mask: int, target_mask: int,
                    open_mask: int) -> bool:
    """Does an open path join a source cell to a target cell?"""
    seeds = source_mask & open_mask
    if not seeds:
        return False
    if seeds & target_mask:
        return True
    visited = seeds
    frontier = seeds
    while frontier:
        grow = 0
        f = frontier
        while f:
            low = f & -f
            grow |= neighbor_masks[low.bit_length() - 1]
            f ^= low
        frontier = grow & open_mask & ~visited
        if frontier & target_mask:
            return True
        visited |= frontier
    return False


def plane_percolates(lat: Lattice, open_mask: int) -> bool:
    """Percolation predicate for a single fluid's open-cell mask."""
    if not 0 <= open_mask <= lat.full_mask:
        raise ValueError("open mask out of range for this lattice")
    return percolates_mask(
        lat.neighbor_masks, lat.center_adjacent_mask, lat.boundary_mask, open_mask
    )


@dataclass(frozen=True)
class PercolationOutcome:
    """Per-fluid percolation flags for one coloring (bit i = fluid i flows)."""

    n: int
    flags: int

    @property
    def k(self) -> int:
        """How many fluids percolate."""
        return self.flags.bit_count()

    def fluid(self, i: int) -> bool:
        if not 0 <= i < self.n:
            raise ValueError(f"fluid index {i} out of range")
        return bool((self.flags >> i) & 1)


def outcome(lat: Lattice, coloring: Coloring) -> PercolationOutcome:
    if coloring.m != lat.m:
        raise ValueError("coloring and lattice disagree on cell count")
    flags = 0
    for i, plane in enumerate(coloring.planes):
        if plane_percolates(lat, plane):
            flags |= 1 << i
    return PercolationOutcome(n=coloring.n, flags=flags)


class BatchPercolator:
    """Vectorized percolation for 64 colorings per uint64 lane.

    Open masks arrive as an (m, W) uint64 array: row c holds cell c's open
    bit for 64*W samples.  The fixpoint loop gathers the six neighbor rows
    (missing neighbors point at a sentinel row that stays zero), ANDs with
    the open rows and ORs into the reach set until nothing changes.
    """

    def __init__(self, lat: Lattice):
        self.lat = lat
        m = lat.m
        nbr = np.full((m, 6), m, dtype=np.intp)
        for i, ids in enumerate(lat.adjacency):
            nbr[i, : len(ids)] = ids
        self._nbr = nbr
        self._center = np.array(lat.center_adjacent, dtype=np.intp)
        self._boundary = np.array(lat.boundary, dtype=np.intp)

    def percolate_words(self, open_words: np.ndarray) -> np.ndarray:
        """Map (m, W) open-bit words to (W,) percolation-bit words."""
        m = self.lat.m
        if open_words.shape[0] != m:
            raise ValueError("open_words must have one row per cell")
        width = open_words.shape[1]
        reach = np.zeros((m + 1, width), dtype=np.uint64)
        reach[self._center] = open_words[self._center]
        while True:
            spread = reach[self._nbr[:, 0]]
            for d in range(1, 6):
                spread |= reach[self._nbr[:, d]]
            new = (spread & open_words) | reach[:m]
            if np.array_equal(new, reach[:m]):
                break
            reach[:m] = new
        out = reach[self._boundary[0]].copy()
        for b in self._boundary[1:]:
            out |= reach[b]
        return out
