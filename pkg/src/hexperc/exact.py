"""Exhaustive enumeration over every parity-constrained coloring.

All quantities here are exact rationals with denominator 2**((n-1) m).  The
enumeration walks the free planes in binary order, classifies each coloring
by its per-fluid percolation pattern, and everything else (exactly-k counts,
subset-joint counts, moments) is bookkeeping on the 2**n pattern counters.
Feasible only for tiny patches; that is the point, it is the ground truth
the sampling engine is checked against.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable

from .errors import StateSpaceError
from .lattice import Lattice
from .percolation import plane_percolates
from .sampling import DEFAULT_ENUM_BUDGET


@dataclass(frozen=True)
class ExactDistribution:
    """Percolation-pattern census over the full coloring set.

    ``pattern_counts[f]`` counts colorings whose percolation flags equal the
    bit pattern f (bit i = fluid i percolates); ``subset_counts[S]`` counts
    colorings where at least the fluids in S percolate (a superset sum over
    patterns); ``count_b[k]`` counts colorings with exactly k fluids flowing.
    """

    s: int
    n: int
    m: int
    total: int
    pattern_counts: tuple[int, ...]
    subset_counts: tuple[int, ...]
    count_b: tuple[int, ...]

    def prob_pattern(self, flags: int) -> Fraction:
        return Fraction(self.pattern_counts[flags], self.total)

    def prob_b(self, k: int) -> Fraction:
        """P(exactly k fluids percolate)."""
        return Fraction(self.count_b[k], self.total)

    def count_subset(self, fluids: Iterable[int]) -> int:
        """Colorings where every fluid in the given set percolates."""
        mask = 0
        for i in fluids:
            if not 0 <= i < self.n:
                raise ValueError(f"fluid index {i} out of range")
            mask |= 1 << i
        return self.subset_counts[mask]

    def prob_subset(self, fluids: Iterable[int]) -> Fraction:
        return Fraction(self.count_subset(fluids), self.total)

    def p(self) -> Fraction:
        """The common marginal percolation probability of a single fluid."""
        singles = {self.subset_counts[1 << i] for i in range(self.n)}
        if len(singles) != 1:
            raise AssertionError("marginals differ across fluids")
        return Fraction(singles.pop(), self.total)


def exact_distribution(lat: Lattice, n: int,
                       budget: int = DEFAULT_ENUM_BUDGET) -> ExactDistribution:
    """Enumerate all 2**((n-1) m) colorings and classify their outcomes."""
    if n < 2:
        raise ValueError(f"need at least two fluids, got n={n}")
    m = lat.m
    bits = (n - 1) * m
    if bits > budget:
        raise StateSpaceError(
            f"refusing exact distribution over 2**{bits} colorings "
            f"((n-1)*m = {bits} free bits exceeds budget {budget})"
        )

    # Percolation lookup for every single-plane mask.  Within the budget the
    # free bits bound m as well, so this table stays small.
    perc = bytearray(1 << m)
    for mask in range(1 << m):
        if plane_percolates(lat, mask):
            perc[mask] = 1

    full = lat.full_mask
    pattern_counts = [0] * (1 << n)
    last = n - 1
    for packed in range(1 << bits):
        rem = packed
        acc = 0
        pattern = 0
        for i in range(last):
            plane = rem & full
            rem >>= m
            acc ^= plane
            if perc[plane]:
                pattern |= 1 << i
        if perc[acc ^ full]:
            pattern |= 1 << last
        pattern_counts[pattern] += 1

    # Superset (zeta) transform: subset_counts[S] = sum over patterns ⊇ S.
    subset_counts = list(pattern_counts)
    for i in range(n):
        bit = 1 << i
        for mask in range(1 << n):
            if not mask & bit:
                subset_counts[mask] += subset_counts[mask | bit]

    count_b = [0] * (n + 1)
    for flags, c in enumerate(pattern_counts):
        count_b[flags.bit_count()] += c

    dist = ExactDistribution(
        s=lat.s, n=n, m=m, total=1 << bits,
        pattern_counts=tuple(pattern_counts),
        subset_counts=tuple(subset_counts),
        count_b=tuple(count_b),
    )
    assert sum(pattern_counts) == dist.total
    assert subset_counts[0] == dist.total
    return dist


@dataclass(frozen=True)
class IndependenceReport:
    """Whether joint percolation factorizes over fluid subsets.

    Proper subsets of the fluids always factorize exactly (the free planes
    are independent and any n - 1 planes are jointly uniform); the full set
    picks up an excess from the parity coupling.
    """

    n: int
    proper_subsets_checked: int
    proper_subsets_factorize: bool
    full_factorizes: bool
    full_excess: Fraction
    full_ratio: Fraction | None


def verify_independence(dist: ExactDistribution) -> IndependenceReport:
    n = dist.n
    total = dist.total
    checked = 0
    proper_ok = True
    for mask in range(1, 1 << n):
        size = mask.bit_count()
        if size < 2 or size == n:
            continue
        checked += 1
        prod = Fraction(1)
        for i in range(n):
            if mask & (1 << i):
                prod *= Fraction(dist.subset_counts[1 << i], total)
        if Fraction(dist.subset_counts[mask], total) != prod:
            proper_ok = False

    full = (1 << n) - 1
    joint = Fraction(dist.subset_counts[full], total)
    prod = Fraction(1)
    for i in range(n):
        prod *= Fraction(dist.subset_counts[1 << i], total)
    excess = joint - prod
    ratio = joint / prod if prod else None
    return IndependenceReport(
        n=n,
        proper_subsets_checked=checked,
        proper_subsets_factorize=proper_ok,
        full_factorizes=(excess == 0),
        full_excess=excess,
        full_ratio=ratio,
    )


@dataclass(frozen=True)
class Moments:
    """Exact moments of one fluid's centered percolation indicator."""

    p: Fraction
    variance: Fraction
    abs_third_central: Fraction


def moments(dist: ExactDistribution) -> Moments:
    """Mean, variance and absolute third central moment of Y = X - p."""
    p = dist.p()
    variance = p * (1 - p)
    abs_third = p * (1 - p) ** 3 + (1 - p) * p**3
    return Moments(p=p, variance=variance, abs_third_central=abs_third)


def embedding_bounds(dist: ExactDistribution) -> tuple[tuple[int, int], ...]:
    """Per-k pairs (count_b[k], bound) from embedding the exactly-k event
    into choices of k percolating planes and n - k arbitrary non-percolating
    ones; the bound is C(n, k) N1**k (2**m - N1)**(n-k) with N1 the number
    of percolating single-plane masks."""
    # N1 recovered exactly from the single-fluid marginal: P(fluid i flows)
    # equals N1 / 2**m because each plane alone is uniform.
    p = dist.p()
    n1 = p.numerator * ((1 << dist.m) // p.denominator) if p else 0
    out = []
    for k in range(dist.n + 1):
        bound = comb(dist.n, k) * n1**k * ((1 << dist.m) - n1) ** (dist.n - k)
        out.append((dist.count_b[k], bound))
    return tuple(out)
