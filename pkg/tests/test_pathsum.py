from collections import Counter
from fractions import Fraction
from math import comb

import numpy as np
import pytest

from hexperc.errors import PathCountExceeded, StateSpaceError, SubsetCapExceeded
from hexperc.lattice import CellGraph
from hexperc.pathsum import (
    BUILTIN_GRAPH_NAMES,
    brute_force_prob,
    builtin_graph,
    enumerate_paths,
    partition_coverage,
    single_fluid_sum,
    triple_fluid_sum,
)


def chain(k):
    return CellGraph(k, tuple((i, i + 1) for i in range(k - 1)),
                     frozenset({0}), frozenset({k - 1}))


def isolated(k):
    """k cells, no edges, every cell both source and target."""
    return CellGraph(k, (), frozenset(range(k)), frozenset(range(k)))


FORK = CellGraph(3, ((0, 1), (0, 2)), frozenset({0}), frozenset({1, 2}))
STAR3 = CellGraph(4, ((0, 1), (0, 2), (0, 3)), frozenset({0}), frozenset({1, 2, 3}))
DIAMOND = CellGraph(4, ((0, 1), (0, 2), (1, 3), (2, 3)), frozenset({0}), frozenset({3}))
CYCLE4 = CellGraph(4, ((0, 1), (1, 2), (2, 3), (0, 3)), frozenset({0}), frozenset({2}))
TRIANGLE = CellGraph(3, ((0, 1), (0, 2), (1, 2)), frozenset({0, 1, 2}), frozenset({0, 1, 2}))
# the 6-ring of the side-2 patch in sorted-cell indexing runs 0-1-3-5-4-2-0
RING6_ACROSS = CellGraph(6, ((0, 1), (0, 2), (1, 3), (2, 4), (3, 5), (4, 5)),
                         frozenset({0}), frozenset({5}))
MID_TARGET = CellGraph(3, ((0, 1), (1, 2)), frozenset({0}), frozenset({1}))
DISCONNECTED = CellGraph(2, (), frozenset({0}), frozenset({1}))

SINGLE_CASES = [
    (builtin_graph("cell1"), Fraction(1, 2)),
    (builtin_graph("chain2"), Fraction(1, 4)),
    (builtin_graph("parallel2"), Fraction(3, 4)),
    (chain(3), Fraction(1, 8)),
    (chain(4), Fraction(1, 16)),
    (isolated(3), Fraction(7, 8)),
    (FORK, Fraction(3, 8)),
    (STAR3, Fraction(7, 16)),
    (DIAMOND, Fraction(3, 16)),
    (CYCLE4, Fraction(3, 16)),
    (TRIANGLE, Fraction(7, 8)),
    (RING6_ACROSS, Fraction(7, 64)),
    (MID_TARGET, Fraction(1, 4)),
    (DISCONNECTED, Fraction(0)),
]

TRIPLE_CASES = [
    (builtin_graph("cell1"), Fraction(1, 4)),
    (builtin_graph("chain2"), Fraction(1, 16)),
    (builtin_graph("parallel2"), Fraction(7, 16)),
    (FORK, None),
    (STAR3, None),
    (DIAMOND, None),
    (CYCLE4, None),
    (RING6_ACROSS, None),
    (DISCONNECTED, Fraction(0)),
]


@pytest.mark.parametrize("graph, expected", SINGLE_CASES)
def test_single_sum_closed_forms(graph, expected):
    value = single_fluid_sum(graph)
    assert value == expected
    assert value == brute_force_prob(graph, 2, "one-fluid")


@pytest.mark.parametrize("graph, expected", TRIPLE_CASES)
def test_triple_sum_closed_forms(graph, expected):
    value = triple_fluid_sum(graph)
    if expected is not None:
        assert value == expected
    assert value == brute_force_prob(graph, 3, "all-fluids")


def test_triple_sum_triangle_needs_wider_cap():
    # all-source all-target triangle: 15 paths, past the default triple
    # budget, but fine once the cap admits 2**45 naive terms
    with pytest.raises(SubsetCapExceeded):
        triple_fluid_sum(TRIANGLE)
    value = triple_fluid_sum(TRIANGLE, subset_cap=1 << 45)
    assert value == brute_force_prob(TRIANGLE, 3, "all-fluids")


def random_graph(seed):
    rng = np.random.default_rng(seed)
    cells = int(rng.integers(3, 7))
    edges = tuple(
        (i, j)
        for i in range(cells)
        for j in range(i + 1, cells)
        if rng.random() < 0.5
    )
    sources = frozenset(int(i) for i in rng.choice(cells, rng.integers(1, 3), replace=False))
    targets = frozenset(int(i) for i in rng.choice(cells, rng.integers(1, 3), replace=False))
    return CellGraph(cells, edges, sources, targets)


def test_single_sum_random_graphs():
    checked = 0
    for seed in range(40):
        graph = random_graph(seed)
        paths = enumerate_paths(graph, cap=1000)
        if len(paths) > 14:
            continue
        assert single_fluid_sum(graph) == brute_force_prob(graph, 2, "one-fluid")
        checked += 1
        if checked == 10:
            return
    raise AssertionError("not enough small random graphs")


def test_triple_sum_random_graphs():
    checked = 0
    for seed in range(40):
        graph = random_graph(seed)
        paths = enumerate_paths(graph, cap=1000)
        if not 0 < len(paths) <= 8:
            continue
        assert triple_fluid_sum(graph) == brute_force_prob(graph, 3, "all-fluids")
        checked += 1
        if checked == 5:
            return
    raise AssertionError("not enough small random graphs")


def test_sums_accept_directed_duplicates():
    # the identities hold for any family of directed path sequences, so
    # listing a path in both orientations must not change the value
    chain2 = builtin_graph("chain2")
    both = [(0, 1), (1, 0)]
    assert single_fluid_sum(chain2, paths=both) == Fraction(1, 4)
    assert triple_fluid_sum(chain2, paths=both) == Fraction(1, 16)
    cell1 = builtin_graph("cell1")
    for k in range(1, 13):
        assert single_fluid_sum(cell1, paths=[(0,)] * k) == Fraction(1, 2)


@pytest.mark.parametrize("k", [1, 2, 5, 9, 14])
def test_isolated_cells_binomial_collapse(k):
    # k single-cell paths: the alternating sum telescopes to 1 - 2**-k
    assert single_fluid_sum(isolated(k)) == 1 - Fraction(1, 2**k)


@pytest.mark.parametrize("k", range(1, 21))
def test_binomial_cancellation_identity(k):
    assert sum((-1) ** l * comb(k, l) for l in range(1, k + 1)) == -1


def test_m2_path_family():
    paths = enumerate_paths(builtin_graph("m2"))
    assert len(paths) == 66
    assert Counter(len(p) for p in paths) == {1: 6, 2: 12, 3: 12, 4: 12, 5: 12, 6: 12}
    graph = builtin_graph("m2")
    for p in paths:
        assert p[0] in graph.sources and p[-1] in graph.targets
        assert len(set(p)) == len(p)
        for a, b in zip(p, p[1:]):
            assert b in graph.adjacency[a]
    assert paths == enumerate_paths(builtin_graph("m2"))


def test_enumerate_cap():
    with pytest.raises(PathCountExceeded, match="66"):
        enumerate_paths(builtin_graph("m2"), cap=65)
    exc = None
    try:
        enumerate_paths(builtin_graph("m2"), cap=10)
    except PathCountExceeded as e:
        exc = e
    assert exc is not None and exc.cap == 10 and exc.count == 11


def test_m2_sums_refuse_default_cap():
    m2 = builtin_graph("m2")
    paths = enumerate_paths(m2)
    # with the family in hand the refusal names the exact counts
    with pytest.raises(SubsetCapExceeded, match="66") as info:
        single_fluid_sum(m2, paths=paths)
    assert info.value.subsets_needed == 2**66
    assert not info.value.at_least
    with pytest.raises(SubsetCapExceeded, match="66") as info:
        triple_fluid_sum(m2, paths=paths)
    assert info.value.subsets_needed == 2**198
    # without the family, enumeration stops at the budget and the
    # refusal reports a lower bound
    with pytest.raises(SubsetCapExceeded, match="at least") as info:
        single_fluid_sum(m2)
    assert info.value.at_least


def test_triple_budget_is_a_third():
    # 9 single-cell paths fit the single budget but not the triple one
    nine = isolated(9)
    assert single_fluid_sum(nine) == 1 - Fraction(1, 512)
    with pytest.raises(SubsetCapExceeded):
        triple_fluid_sum(nine)
    eight = isolated(8)
    assert triple_fluid_sum(eight) == brute_force_prob(eight, 3, "all-fluids")


def test_raised_cap_allows_more():
    nine = isolated(9)
    value = triple_fluid_sum(nine, subset_cap=1 << 27)
    assert value == brute_force_prob(nine, 3, "all-fluids")


def test_partition_coverage():
    assert partition_coverage(0, 0, 0, 4) == (0b1111, 0, 0)
    assert partition_coverage(0b0011, 0b0101, 0b1000, 4) == (0, 0b1110, 0b0001)
    assert partition_coverage(0b111, 0b111, 0b111, 3) == (0, 0, 0b111)
    rng = np.random.default_rng(5)
    for _ in range(200):
        u1, u2, u3 = (int(x) for x in rng.integers(0, 1 << 10, size=3))
        t0, t1, t23 = partition_coverage(u1, u2, u3, 10)
        assert t0 | t1 | t23 == (1 << 10) - 1
        assert t0 & t1 == t0 & t23 == t1 & t23 == 0
        for c in range(10):
            hits = sum(1 for u in (u1, u2, u3) if (u >> c) & 1)
            expect = t0 if hits == 0 else t1 if hits == 1 else t23
            assert (expect >> c) & 1


def test_brute_force_guards():
    with pytest.raises(ValueError):
        brute_force_prob(builtin_graph("cell1"), 1)
    with pytest.raises(ValueError):
        brute_force_prob(builtin_graph("cell1"), 2, "no-such-event")
    with pytest.raises(StateSpaceError):
        brute_force_prob(builtin_graph("m2"), 7)  # 36 free bits


def test_builtin_names():
    assert set(BUILTIN_GRAPH_NAMES) == {"cell1", "chain2", "parallel2", "m2"}
    for name in BUILTIN_GRAPH_NAMES:
        graph = builtin_graph(name)
        assert graph.cell_count >= 1
    with pytest.raises(ValueError):
        builtin_graph("nope")
