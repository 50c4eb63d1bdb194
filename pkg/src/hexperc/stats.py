"""Distributional diagnostics: intervals, KS distances, normal-limit bounds.

The objects of interest are discrete: a campaign yields counts of how many
fluids percolated per sample, so every empirical CDF is a step function with
at most n + 1 jumps.  KS distances are therefore computed exactly on the
jump grid (checking both one-sided gaps at each jump), never by sampling a
dense x grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .montecarlo import Tally

#: Two-sided 95% normal quantile, to full double precision.
Z95 = 1.959963984540054


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a Bernoulli proportion."""
    if trials < 1:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes out of range")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(
        (phat * (1 - phat) + z * z / (4 * trials)) / trials
    )
    # the score equation has exact roots at the boundary for degenerate
    # counts; pin them so the interval always brackets the point estimate
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


@dataclass(frozen=True)
class StepCDF:
    """Right-continuous step CDF: ``levels[i]`` holds at and after ``xs[i]``."""

    xs: tuple[float, ...]
    levels: tuple[float, ...]

    def __post_init__(self):
        if len(self.xs) != len(self.levels):
            raise ValueError("xs and levels must align")
        if any(b <= a for a, b in zip(self.xs, self.xs[1:])):
            raise ValueError("jump locations must be strictly increasing")
        if self.levels and not math.isclose(self.levels[-1], 1.0, abs_tol=1e-12):
            raise ValueError("last level must be 1")


def step_cdf(atoms: Sequence[float], weights: Sequence[float]) -> StepCDF:
    """Build a StepCDF from atom locations and probability weights."""
    if len(atoms) != len(weights):
        raise ValueError("atoms and weights must align")
    total = math.fsum(weights)
    if not math.isclose(total, 1.0, abs_tol=1e-9):
        raise ValueError(f"weights sum to {total}, not 1")
    pairs = sorted(zip(atoms, weights))
    cum = 0.0
    xs, levels = [], []
    for x, w in pairs:
        cum += w
        xs.append(x)
        levels.append(cum)
    levels[-1] = 1.0
    return StepCDF(tuple(xs), tuple(levels))


def ks_to_continuous(cdf: StepCDF, reference: Callable[[float], float] = normal_cdf) -> float:
    """Exact sup distance between a step CDF and a continuous CDF.

    On a flat stretch the gap to a monotone continuous function is largest
    at the ends, so the sup is attained at a jump point, approached from the
    left or the right.
    """
    best = 0.0
    prev = 0.0
    for x, level in zip(cdf.xs, cdf.levels):
        ref = reference(x)
        best = max(best, abs(level - ref), abs(prev - ref))
        prev = level
    return best


def ks_between_steps(f: StepCDF, g: StepCDF) -> float:
    """Exact sup distance between two step CDFs (merged jump grid)."""
    best = 0.0
    fi = gi = 0
    flevel = glevel = 0.0
    while fi < len(f.xs) or gi < len(g.xs):
        fx = f.xs[fi] if fi < len(f.xs) else math.inf
        gx = g.xs[gi] if gi < len(g.xs) else math.inf
        x = min(fx, gx)
        if fx == x:
            flevel = f.levels[fi]
            fi += 1
        if gx == x:
            glevel = g.levels[gi]
            gi += 1
        best = max(best, abs(flevel - glevel))
    return best


def standardized_mean_cdf(counts: Sequence[int], trials: int, p: float) -> StepCDF:
    """Empirical CDF of (k/d - p) * sqrt(d) / sigma for counts over k = 0..d.

    ``counts[k]`` tallies samples whose per-fluid success count over d
    indicators was k; ``p`` calibrates the centering and the scale
    sigma = sqrt(p (1 - p)).
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    if trials < 1:
        raise ValueError("trials must be positive")
    if sum(counts) != trials:
        raise ValueError("counts must sum to trials")
    d = len(counts) - 1
    if d < 1:
        raise ValueError("need at least two count bins")
    sigma = math.sqrt(p * (1.0 - p))
    scale = math.sqrt(d) / sigma
    atoms = [(k / d - p) * scale for k in range(d + 1)]
    weights = [c / trials for c in counts]
    return step_cdf(atoms, weights)


def shifted_mean_cdf(counts: Sequence[int], trials: int, p: float) -> StepCDF:
    """Empirical CDF of (k/d - p), without rescaling."""
    if trials < 1 or sum(counts) != trials:
        raise ValueError("counts must sum to trials")
    d = len(counts) - 1
    atoms = [k / d - p for k in range(d + 1)]
    weights = [c / trials for c in counts]
    return step_cdf(atoms, weights)


def binomial_pmf(d: int, k: int, p: float) -> float:
    return math.comb(d, k) * p**k * (1.0 - p) ** (d - k)


def binomial_ks_reference(d: int, p: float) -> float:
    """KS distance between the standardized Binomial(d, p) law and the
    standard normal, computed exactly from the pmf."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    sigma = math.sqrt(p * (1.0 - p))
    scale = math.sqrt(d) / sigma
    atoms = [(k / d - p) * scale for k in range(d + 1)]
    weights = [binomial_pmf(d, k, p) for k in range(d + 1)]
    return ks_to_continuous(step_cdf(atoms, weights))


def berry_esseen_bound(p: float, n: int) -> float:
    """The classical normal-approximation bound 3 rho / (sigma^3 sqrt(n - 1))
    for the mean of the n - 1 independent per-fluid indicators, with
    sigma^2 = p(1-p) and rho = E|X - p|^3 = p(1-p)(1 - 2p + 2p^2)."""
    if n < 2:
        raise ValueError("need at least two fluids")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    sigma2 = p * (1.0 - p)
    rho = sigma2 * (1.0 - 2.0 * p + 2.0 * p * p)
    return 3.0 * rho / (sigma2**1.5 * math.sqrt(n - 1))


@dataclass(frozen=True)
class GapReport:
    """Coupling check: the all-fluids mean against the free-fluids mean."""

    sup_gap: float
    bound: float
    tolerance: float
    ok: bool


def coupling_gap(tally: Tally, p: float) -> GapReport:
    """Sup distance between the empirical CDFs of (X̄ - p) over all n fluids
    and (Z̄ - p) over the first n - 1, checked against the theoretical
    ceiling max_k P(exactly k percolate), plus 3/sqrt(N) sampling slack."""
    if tally.samples < 1:
        raise ValueError("tally is empty")
    f = shifted_mean_cdf(tally.exact_k, tally.samples, p)
    g = shifted_mean_cdf(tally.first_k, tally.samples, p)
    sup_gap = ks_between_steps(f, g)
    bound = max(tally.exact_k) / tally.samples
    tolerance = 3.0 / math.sqrt(tally.samples)
    return GapReport(
        sup_gap=sup_gap,
        bound=bound,
        tolerance=tolerance,
        ok=sup_gap <= bound + tolerance,
    )


@dataclass(frozen=True)
class OrderingStatus:
    """Whether the exactly-k probabilities decrease in k for one lattice."""

    s: int
    undetermined: bool
    ordered: Optional[bool]
    separated: Optional[bool]


@dataclass(frozen=True)
class OrderingRow:
    s: int
    k: int
    count: int
    b_hat: float
    b_lo: float
    b_hi: float


@dataclass(frozen=True)
class OrderingReport:
    n: int
    rows: tuple[OrderingRow, ...]
    statuses: tuple[OrderingStatus, ...]


def ordering_check(tallies: Sequence[Tally], z: float = Z95) -> OrderingReport:
    """For each tally, test whether P(exactly 1) > P(exactly 2) > ... >
    P(exactly n) holds in the point estimates, and whether consecutive
    Wilson intervals separate the claim.

    A tally with no percolating sample at all cannot witness the ordering
    and is flagged undetermined rather than pass or fail.
    """
    if len(tallies) < 2:
        raise ValueError("ordering check needs tallies for at least two sides")
    n = tallies[0].n
    if any(t.n != n for t in tallies):
        raise ValueError("tallies mix different fluid counts")
    ordered_tallies = sorted(tallies, key=lambda t: t.s)
    if len({t.s for t in ordered_tallies}) != len(ordered_tallies):
        raise ValueError("duplicate lattice side in tallies")

    rows: list[OrderingRow] = []
    statuses: list[OrderingStatus] = []
    for t in ordered_tallies:
        t.validate()
        bounds = [wilson_interval(c, t.samples, z) for c in t.exact_k]
        for k, c in enumerate(t.exact_k):
            rows.append(
                OrderingRow(
                    s=t.s, k=k, count=c, b_hat=c / t.samples,
                    b_lo=bounds[k][0], b_hi=bounds[k][1],
                )
            )
        if sum(t.exact_k[1:]) == 0:
            statuses.append(OrderingStatus(s=t.s, undetermined=True,
                                           ordered=None, separated=None))
            continue
        point = [c / t.samples for c in t.exact_k]
        ordered = all(point[k] > point[k + 1] for k in range(1, n))
        separated = all(bounds[k][0] > bounds[k + 1][1] for k in range(1, n))
        statuses.append(
            OrderingStatus(s=t.s, undetermined=False,
                           ordered=ordered, separated=separated)
        )
    return OrderingReport(n=n, rows=tuple(rows), statuses=tuple(statuses))
