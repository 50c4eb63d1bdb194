"""Monte Carlo campaigns over random colorings, with mergeable tallies.

A run is split into fixed-size blocks of samples.  Block b draws its
colorings from Philox stream (seed, stream_id=b), so the tally is a pure
function of (s, n, samples, seed): the worker count only decides which
thread happens to process a block, never what the block contains.  Counters
are exact integers, so merging blocks (or whole runs) is associative and
order-independent.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lattice import Lattice
from .percolation import BatchPercolator
from .sampling import RngStream

#: Samples per scheduling block.  Changing this changes which Philox words a
#: run consumes, hence the run's output; treat it as part of the format.
BLOCK_SAMPLES = 16384

_Z95 = 1.959963984540054


@dataclass(frozen=True)
class RunConfig:
    """Campaign parameters.  ``workers`` is scheduling only."""

    s: int
    n: int
    samples: int
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.s < 2:
            raise ValueError(f"side must be at least 2, got {self.s}")
        if self.n < 2:
            raise ValueError(f"need at least two fluids, got n={self.n}")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.workers < 1:
            raise ValueError("workers must be positive")


@dataclass
class Tally:
    """Exact integer counters from a campaign.

    ``per_fluid[i]``: samples where fluid i percolated.
    ``exact_k[k]``: samples where exactly k fluids percolated.
    ``first_k[j]``: samples where exactly j of the first n - 1 fluids
    percolated (the free planes; this drives the coupled-mean comparison).
    ``all_n``: samples where every fluid percolated.
    """

    s: int
    n: int
    samples: int
    seed: Optional[int]
    per_fluid: list[int] = field(default_factory=list)
    exact_k: list[int] = field(default_factory=list)
    first_k: list[int] = field(default_factory=list)
    all_n: int = 0

    @classmethod
    def empty(cls, s: int, n: int, seed: Optional[int]) -> "Tally":
        return cls(
            s=s, n=n, samples=0, seed=seed,
            per_fluid=[0] * n, exact_k=[0] * (n + 1), first_k=[0] * n, all_n=0,
        )

    def validate(self) -> None:
        n = self.n
        if len(self.per_fluid) != n or len(self.exact_k) != n + 1 or len(self.first_k) != n:
            raise ValueError("counter lengths inconsistent with n")
        if any(c < 0 for c in self.per_fluid + self.exact_k + self.first_k):
            raise ValueError("negative counter")
        if sum(self.exact_k) != self.samples:
            raise ValueError("exact_k does not partition the samples")
        if sum(self.first_k) != self.samples:
            raise ValueError("first_k does not partition the samples")
        if self.all_n != self.exact_k[n]:
            raise ValueError("all_n disagrees with exact_k[n]")
        if sum(self.per_fluid) != sum(k * c for k, c in enumerate(self.exact_k)):
            raise ValueError("per-fluid total disagrees with exact_k moments")
        if sum(self.per_fluid[: n - 1]) != sum(j * c for j, c in enumerate(self.first_k)):
            raise ValueError("first-fluid total disagrees with first_k moments")
        if self.per_fluid and self.all_n > min(self.per_fluid):
            raise ValueError("joint count exceeds a marginal count")

    def to_json(self) -> str:
        return json.dumps(self.payload(), sort_keys=True)

    def payload(self) -> dict:
        return {
            "s": self.s,
            "n": self.n,
            "samples": self.samples,
            "seed": self.seed,
            "per_fluid": list(self.per_fluid),
            "exact_k": list(self.exact_k),
            "first_k": list(self.first_k),
            "all_n": self.all_n,
        }

    @classmethod
    def from_json(cls, text: str) -> "Tally":
        d = json.loads(text)
        t = cls(
            s=d["s"], n=d["n"], samples=d["samples"], seed=d["seed"],
            per_fluid=[int(c) for c in d["per_fluid"]],
            exact_k=[int(c) for c in d["exact_k"]],
            first_k=[int(c) for c in d["first_k"]],
            all_n=int(d["all_n"]),
        )
        t.validate()
        return t


def merge(a: Tally, b: Tally) -> Tally:
    """Pool two tallies over the same (s, n)."""
    if (a.s, a.n) != (b.s, b.n):
        raise ValueError("cannot merge tallies for different (s, n)")
    return Tally(
        s=a.s,
        n=a.n,
        samples=a.samples + b.samples,
        seed=a.seed if a.seed == b.seed else None,
        per_fluid=[x + y for x, y in zip(a.per_fluid, b.per_fluid)],
        exact_k=[x + y for x, y in zip(a.exact_k, b.exact_k)],
        first_k=[x + y for x, y in zip(a.first_k, b.first_k)],
        all_n=a.all_n + b.all_n,
    )


def _tally_block(bp: BatchPercolator, n: int, seed: int, block_index: int,
                 count: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Counters for one block: (per_fluid, exact_k, first_k) arrays."""
    m = bp.lat.m
    width = (count + 63) // 64
    stream = RngStream(seed, stream_id=block_index)
    words = stream.words((n - 1) * m * width).reshape(n - 1, m, width)
    parity = np.bitwise_xor.reduce(words, axis=0) ^ np.uint64(0xFFFFFFFFFFFFFFFF)
    flags = np.empty((n, width), dtype=np.uint64)
    for i in range(n - 1):
        flags[i] = bp.percolate_words(words[i])
    flags[n - 1] = bp.percolate_words(parity)
    bits = np.unpackbits(
        flags.astype("<u8", copy=False).view(np.uint8), axis=1, bitorder="little"
    )[:, :count]
    per_fluid = bits.sum(axis=1, dtype=np.int64)
    k = bits.sum(axis=0, dtype=np.int64)
    exact_k = np.bincount(k, minlength=n + 1)
    kfirst = bits[: n - 1].sum(axis=0, dtype=np.int64)
    first_k = np.bincount(kfirst, minlength=n)
    return per_fluid, exact_k, first_k


def run(lat: Lattice, cfg: RunConfig) -> Tally:
    """Run a campaign.  Identical output for any worker count."""
    if lat.s != cfg.s:
        raise ValueError("lattice side disagrees with config")
    bp = BatchPercolator(lat)
    n = cfg.n
    blocks = []
    done = 0
    index = 0
    while done < cfg.samples:
        count = min(BLOCK_SAMPLES, cfg.samples - done)
        blocks.append((index, count))
        done += count
        index += 1

    per_fluid = np.zeros(n, dtype=np.int64)
    exact_k = np.zeros(n + 1, dtype=np.int64)
    first_k = np.zeros(n, dtype=np.int64)

    def work(block):
        block_index, count = block
        return _tally_block(bp, n, cfg.seed, block_index, count)

    if cfg.workers == 1 or len(blocks) == 1:
        results = map(work, blocks)
        for pf, ek, fk in results:
            per_fluid += pf
            exact_k += ek
            first_k += fk
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            for pf, ek, fk in pool.map(work, blocks):
                per_fluid += pf
                exact_k += ek
                first_k += fk

    tally = Tally(
        s=cfg.s,
        n=n,
        samples=cfg.samples,
        seed=cfg.seed,
        per_fluid=[int(c) for c in per_fluid],
        exact_k=[int(c) for c in exact_k],
        first_k=[int(c) for c in first_k],
        all_n=int(exact_k[n]),
    )
    tally.validate()
    return tally


@dataclass(frozen=True)
class Estimates:
    """Point estimates and intervals derived from one tally."""

    p_hat: float
    p_lo: float
    p_hi: float
    b_hat: tuple[float, ...]
    b_lo: tuple[float, ...]
    b_hi: tuple[float, ...]
    joint_hat: float
    ratio: Optional[float]
    ratio_lo: Optional[float]
    ratio_hi: Optional[float]
    note: str = ""


def _wilson(successes: int, trials: int, z: float) -> tuple[float, float]:
    # Local copy to keep this module free of a stats import cycle.
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = (z / denom) * ((phat * (1 - phat) + z * z / (4 * trials)) / trials) ** 0.5
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


def estimate(tally: Tally, z: float = _Z95) -> Estimates:
    """Estimates for p, the exactly-k probabilities and the independence ratio.

    p is pooled over fluids; since the per-sample fluid indicators are
    dependent, its interval uses the empirical variance of the per-sample
    mean k/n rather than a Bernoulli formula.  The ratio interval comes from
    the delta method applied to (joint frequency) / p**n with the empirical
    covariance of the two estimators.
    """
    tally.validate()
    if tally.samples < 1:
        raise ValueError("estimate needs at least one sample")
    n = tally.n
    size = tally.samples
    p_hat = sum(tally.per_fluid) / (n * size)

    # Variance of the per-sample mean k/n, then a CLT interval for its mean.
    second = sum(c * (k / n) ** 2 for k, c in enumerate(tally.exact_k)) / size
    var_mean = max(0.0, second - p_hat * p_hat)
    half = z * (var_mean / size) ** 0.5
    p_lo = max(0.0, p_hat - half)
    p_hi = min(1.0, p_hat + half)

    b_hat = tuple(c / size for c in tally.exact_k)
    b_bounds = [_wilson(c, size, z) for c in tally.exact_k]
    b_lo = tuple(lo for lo, _ in b_bounds)
    b_hi = tuple(hi for _, hi in b_bounds)

    q_hat = tally.all_n / size
    if p_hat in (0.0, 1.0):
        ratio = ratio_lo = ratio_hi = None
        note = "ratio undefined: marginal estimate is degenerate"
    else:
        denom = p_hat**n
        ratio = q_hat / denom
        var_q = q_hat * (1 - q_hat) / size
        var_p = var_mean / size
        cov = q_hat * (1 - p_hat) / size
        dq = 1.0 / denom
        dp = -n * q_hat / p_hat ** (n + 1)
        var_r = max(0.0, dq * dq * var_q + dp * dp * var_p + 2 * dq * dp * cov)
        half_r = z * var_r**0.5
        ratio_lo = ratio - half_r
        ratio_hi = ratio + half_r
        note = ""
    return Estimates(
        p_hat=p_hat, p_lo=p_lo, p_hi=p_hi,
        b_hat=b_hat, b_lo=b_lo, b_hi=b_hi,
        joint_hat=q_hat,
        ratio=ratio, ratio_lo=ratio_lo, ratio_hi=ratio_hi,
        note=note,
    )


def csv_header(n: int) -> list[str]:
    return (
        ["s", "n", "samples", "seed", "p_hat", "p_lo", "p_hi"]
        + [f"b{k}" for k in range(n + 1)]
        + ["ratio", "ratio_lo", "ratio_hi"]
    )


def csv_row(tally: Tally, est: Estimates) -> list:
    def opt(x):
        return "" if x is None else x

    return (
        [tally.s, tally.n, tally.samples, opt(tally.seed), est.p_hat, est.p_lo, est.p_hi]
        + [b for b in est.b_hat]
        + [opt(est.ratio), opt(est.ratio_lo), opt(est.ratio_hi)]
    )
