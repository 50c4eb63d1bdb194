"""Closed-form percolation probabilities as signed sums over path subsets.

For a cell graph G with path family P(G) (all simple source-to-target
paths), the percolation probability of one fluid with i.i.d. fair-coin open
cells is

    p(G) = - sum over nonempty S subseteq P(G) of (-1)^|S| 2^(-|union S|),

and for three fluids under the parity constraint the probability that all
three percolate is a triple sum over subset triples (S1, S2, S3) with weight
(-1)^(|S1|+|S2|+|S3|) 2^(-|T1|) 4^(-|T23|), where T1 is the set of cells
covered by exactly one of the three unions and T23 the set covered by at
least two.  Both identities hold for any family of directed path sequences,
including families listing a path in both directions; duplicated coverage
cancels through the alternating signs.

The sums cost 2**P and 2**(3P) terms naively.  The implementations walk
subsets in Gray-code order keeping per-cell coverage counters, so each step
is O(path length); the triple sum is first collapsed to net signed counts
per distinct union mask, then a symmetric pass over unordered mask triples
finishes the job.  Everything is exact integer arithmetic.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

from .errors import PathCountExceeded, StateSpaceError, SubsetCapExceeded
from .lattice import CellGraph, as_cell_graph, build_lattice
from .percolation import percolates_mask

#: Hard ceiling on how many subset terms a sum may touch.
DEFAULT_SUBSET_CAP = 1 << 24

#: Default ceiling for path enumeration.
DEFAULT_PATH_CAP = 100_000

#: Budget (in free bits) for the brute-force enumeration oracle.
DEFAULT_BRUTE_BUDGET = 30


def enumerate_paths(graph: CellGraph, cap: int = DEFAULT_PATH_CAP) -> list[tuple[int, ...]]:
    """All simple source-to-target paths, in deterministic DFS order.

    A path may not revisit a cell.  A source that is itself a target yields
    the single-cell path.  Raises PathCountExceeded as soon as the count
    passes ``cap``.
    """
    adjacency = graph.adjacency
    targets = graph.targets
    out: list[tuple[int, ...]] = []
    path: list[int] = []
    visited = [False] * graph.cell_count

    def walk(cell: int) -> None:
        path.append(cell)
        visited[cell] = True
        if cell in targets:
            out.append(tuple(path))
            if len(out) > cap:
                raise PathCountExceeded(len(out), cap)
        for nb in adjacency[cell]:
            if not visited[nb]:
                walk(nb)
        visited[cell] = False
        path.pop()

    for src in sorted(graph.sources):
        walk(src)
    return out


def _path_masks(paths: Sequence[Sequence[int]]) -> list[int]:
    masks = []
    for p in paths:
        mask = 0
        for c in p:
            mask |= 1 << c
        masks.append(mask)
    return masks


def _cells_per_path(paths: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    return [tuple(sorted(set(p))) for p in paths]


def _signed_counts_by_union_size(paths: Sequence[Sequence[int]],
                                 cell_count: int) -> list[int]:
    """net[c] = sum of (-1)^|S| over nonempty subsets S whose union covers
    exactly c cells.  Gray-code walk: one path toggled per step."""
    cells_of = _cells_per_path(paths)
    count = len(paths)
    coverage = [0] * cell_count
    covered = 0
    member = 0
    sign = 1
    net = [0] * (cell_count + 1)
    for step in range(1, 1 << count):
        j = (step & -step).bit_length() - 1
        bit = 1 << j
        member ^= bit
        if member & bit:
            for c in cells_of[j]:
                coverage[c] += 1
                if coverage[c] == 1:
                    covered += 1
        else:
            for c in cells_of[j]:
                coverage[c] -= 1
                if coverage[c] == 0:
                    covered -= 1
        sign = -sign
        net[covered] += sign
    return net


def _signed_counts_by_union_mask(paths: Sequence[Sequence[int]],
                                 cell_count: int) -> dict[int, int]:
    """net[mask] = sum of (-1)^|S| over nonempty subsets S with union mask."""
    cells_of = _cells_per_path(paths)
    count = len(paths)
    coverage = [0] * cell_count
    union = 0
    member = 0
    sign = 1
    net: dict[int, int] = {}
    for step in range(1, 1 << count):
        j = (step & -step).bit_length() - 1
        bit = 1 << j
        member ^= bit
        if member & bit:
            for c in cells_of[j]:
                coverage[c] += 1
                if coverage[c] == 1:
                    union |= 1 << c
        else:
            for c in cells_of[j]:
                coverage[c] -= 1
                if coverage[c] == 0:
                    union &= ~(1 << c)
        sign = -sign
        net[union] = net.get(union, 0) + sign
    return {mask: value for mask, value in net.items() if value}


def _resolve_paths(graph: CellGraph, paths, per_sum_budget: int,
                   subset_cap: int, sums: int) -> list[tuple[int, ...]]:
    if paths is None:
        try:
            paths = enumerate_paths(graph, cap=per_sum_budget)
        except PathCountExceeded as exc:
            raise SubsetCapExceeded(
                exc.count, 1 << (sums * exc.count), subset_cap, at_least=True
            ) from exc
    count = len(paths)
    if count > per_sum_budget:
        raise SubsetCapExceeded(count, 1 << (sums * count), subset_cap)
    return list(paths)


def single_fluid_sum(graph: CellGraph, subset_cap: int = DEFAULT_SUBSET_CAP,
                     paths: Optional[Sequence[Sequence[int]]] = None) -> Fraction:
    """Exact one-fluid percolation probability via the alternating subset sum.

    Refuses when 2**P exceeds ``subset_cap``.  ``paths`` may be supplied to
    skip re-enumeration (they are trusted to be exactly the path family).
    """
    budget = max(subset_cap.bit_length() - 1, 0)
    paths = _resolve_paths(graph, paths, budget, subset_cap, sums=1)
    if not paths:
        return Fraction(0)
    m = graph.cell_count
    net = _signed_counts_by_union_size(paths, m)
    numerator = -sum(value << (m - c) for c, value in enumerate(net))
    return Fraction(numerator, 1 << m)


def triple_fluid_sum(graph: CellGraph, subset_cap: int = DEFAULT_SUBSET_CAP,
                     paths: Optional[Sequence[Sequence[int]]] = None) -> Fraction:
    """Exact probability that all three fluids of a parity-constrained
    3-coloring percolate, via the triple alternating sum.

    The naive triple walk touches 2**(3P) subsets; the cap applies to that
    count.  The implementation collapses each factor to net signed counts
    per union mask and sums over unordered mask triples.
    """
    budget = max((subset_cap.bit_length() - 1) // 3, 0)
    paths = _resolve_paths(graph, paths, budget, subset_cap, sums=3)
    if not paths:
        return Fraction(0)
    m = graph.cell_count
    net = _signed_counts_by_union_mask(paths, m)
    entries = sorted(net.items())
    total = 0
    for a in range(len(entries)):
        mask_a, net_a = entries[a]
        for b in range(a, len(entries)):
            mask_b, net_b = entries[b]
            ab_net = net_a * net_b
            ab_or = mask_a | mask_b
            ab_and = mask_a & mask_b
            for c in range(b, len(entries)):
                mask_c, net_c = entries[c]
                if a == b == c:
                    mult = 1
                elif a == b or b == c:
                    mult = 3
                else:
                    mult = 6
                twice = ab_and | (ab_or & mask_c)
                once = (ab_or | mask_c).bit_count() - twice.bit_count()
                weight = 2 * (m - twice.bit_count()) - once
                total += mult * ab_net * net_c << weight
    return Fraction(-total, 1 << (2 * m))


def partition_coverage(u1: int, u2: int, u3: int, cell_count: int) -> tuple[int, int, int]:
    """Split the cells into (uncovered, covered exactly once, covered at
    least twice) masks for three coverage masks."""
    full = (1 << cell_count) - 1
    at_least_two = (u1 & u2) | (u1 & u3) | (u2 & u3)
    any_cover = u1 | u2 | u3
    exactly_one = any_cover & ~at_least_two
    return full & ~any_cover, exactly_one, at_least_two


def brute_force_prob(graph: CellGraph, n: int, event: str = "one-fluid",
                     budget: int = DEFAULT_BRUTE_BUDGET) -> Fraction:
    """Oracle: enumerate every parity-constrained n-coloring of the graph's
    cells and count percolation events by reachability.

    ``event`` is "one-fluid" (fluid 0 percolates) or "all-fluids".
    """
    if n < 2:
        raise ValueError(f"need at least two fluids, got n={n}")
    if event not in ("one-fluid", "all-fluids"):
        raise ValueError(f"unknown event {event!r}")
    cells = graph.cell_count
    bits = (n - 1) * cells
    if bits > budget:
        raise StateSpaceError(
            f"refusing brute force over 2**{bits} colorings "
            f"((n-1)*cells = {bits} free bits exceeds budget {budget})"
        )
    nbr = graph.neighbor_masks
    smask = graph.source_mask
    tmask = graph.target_mask
    full = (1 << cells) - 1

    if cells > 22:
        raise StateSpaceError(
            f"refusing brute force: percolation table over 2**{cells} masks"
        )
    table = bytearray(1 << cells)
    for mask in range(1 << cells):
        if percolates_mask(nbr, smask, tmask, mask):
            table[mask] = 1

    hits = 0
    if event == "one-fluid":
        for packed in range(1 << bits):
            hits += table[packed & full]
    else:
        for packed in range(1 << bits):
            rem = packed
            acc = 0
            ok = True
            for _ in range(n - 1):
                plane = rem & full
                rem >>= cells
                acc ^= plane
                if not table[plane]:
                    ok = False
                    break
            if ok and table[acc ^ full]:
                hits += 1
    return Fraction(hits, 1 << bits)


def builtin_graph(name: str) -> CellGraph:
    """Small named graphs used in examples and cross-checks.

    cell1      one cell that is both source and target
    chain2     two cells in a row, source at one end, target at the other
    parallel2  two isolated cells, each source and target
    m2         the side-2 patch: a 6-ring where every cell is source and target
    """
    if name == "cell1":
        return CellGraph(1, (), frozenset({0}), frozenset({0}))
    if name == "chain2":
        return CellGraph(2, ((0, 1),), frozenset({0}), frozenset({1}))
    if name == "parallel2":
        return CellGraph(2, (), frozenset({0, 1}), frozenset({0, 1}))
    if name == "m2":
        return as_cell_graph(build_lattice(2))
    raise ValueError(f"unknown builtin graph {name!r}")


BUILTIN_GRAPH_NAMES = ("cell1", "chain2", "parallel2", "m2")
