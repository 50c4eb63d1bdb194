"""Parity-constrained random colorings and the counter-based RNG behind them.

A coloring gives every cell an n-bit permeability vector, one bit per fluid
(bit set = the cell is open for that fluid), subject to one constraint: the
XOR of the n bits is 1 at every cell, i.e. each cell is open for an odd
number of fluids.  We store the transposed view, n bit planes over the m
cells, so the constraint reads "the XOR of the planes is the all-ones mask".

The first n - 1 planes determine the last, and conversely any choice of them
is admissible, so the coloring set has exactly 2**((n-1) m) elements and
sampling n - 1 uniform planes plus the forced completion is an exact uniform
sampler, not an approximation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import StateSpaceError
from .lattice import Lattice

#: Refuse exhaustive enumeration beyond this many free bits.
DEFAULT_ENUM_BUDGET = 30

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, salt: int) -> int:
    """Deterministically derive a sub-seed so that campaigns run under one
    master seed never share Philox keys."""
    return _splitmix64(seed ^ ((salt * _GOLDEN) & _MASK64))


class RngStream:
    """One Philox stream, addressed by (seed, stream_id, counter).

    ``counter`` counts 64-bit words drawn so far.  Two streams with different
    ids are statistically independent, and a stream can be reconstructed at
    any word offset, which is what makes worker scheduling irrelevant to the
    output of a run.
    """

    def __init__(self, seed: int, stream_id: int = 0, counter: int = 0):
        for name, value in (("seed", seed), ("stream_id", stream_id)):
            if not 0 <= value < 2**64:
                raise ValueError(f"{name} must fit in 64 bits, got {value}")
        if counter < 0:
            raise ValueError("counter must be nonnegative")
        self.seed = seed
        self.stream_id = stream_id
        self.counter = 0
        self._bitgen = np.random.Philox(
            key=np.array([seed, stream_id], dtype=np.uint64)
        )
        if counter:
            # Philox emits four 64-bit words per counter block, so advance()
            # moves in steps of four words; the remainder is drawn and dropped.
            self._bitgen.advance(counter // 4)
            rem = counter % 4
            if rem:
                self._bitgen.random_raw(rem)
            self.counter = counter

    def words(self, count: int) -> np.ndarray:
        """Draw ``count`` raw 64-bit words."""
        if count < 0:
            raise ValueError("count must be nonnegative")
        if count == 0:
            return np.empty(0, dtype=np.uint64)
        out = self._bitgen.random_raw(count)
        self.counter += count
        return out

    def spawn(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


@dataclass(frozen=True)
class Coloring:
    """n bit planes over m cells whose XOR is the all-ones mask."""

    n: int
    m: int
    planes: tuple[int, ...]

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least two fluids, got n={self.n}")
        if len(self.planes) != self.n:
            raise ValueError("plane count must equal n")
        full = (1 << self.m) - 1
        acc = 0
        for p in self.planes:
            if not 0 <= p <= full:
                raise ValueError("plane mask out of range")
            acc ^= p
        if acc != full:
            raise ValueError("planes violate the parity constraint")

    def fluid_of_closed_cell(self, cell: int) -> tuple[int, ...]:
        """Indices of fluids for which ``cell`` is closed."""
        return tuple(i for i, p in enumerate(self.planes) if not (p >> cell) & 1)

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n, "m": self.m, "planes": [format(p, "x") for p in self.planes]}
        )

    @classmethod
    def from_json(cls, text: str) -> "Coloring":
        payload = json.loads(text)
        return cls(
            n=int(payload["n"]),
            m=int(payload["m"]),
            planes=tuple(int(p, 16) for p in payload["planes"]),
        )


def sample_coloring(lat: Lattice, n: int, rng: RngStream) -> Coloring:
    """Draw one coloring uniformly from the parity-constrained set."""
    if n < 2:
        raise ValueError(f"need at least two fluids, got n={n}")
    w = (lat.m + 63) // 64
    full = lat.full_mask
    planes = []
    acc = 0
    for _ in range(n - 1):
        raw = rng.words(w).astype("<u8").tobytes()
        plane = int.from_bytes(raw, "little") & full
        planes.append(plane)
        acc ^= plane
    planes.append(acc ^ full)
    return Coloring(n=n, m=lat.m, planes=tuple(planes))


def enumerate_colorings(lat: Lattice, n: int, budget: int = DEFAULT_ENUM_BUDGET):
    """Iterate every coloring once, in the binary order of the free planes.

    Refuses up front when the free-bit count (n - 1) * m exceeds ``budget``.
    """
    if n < 2:
        raise ValueError(f"need at least two fluids, got n={n}")
    bits = (n - 1) * lat.m
    if bits > budget:
        raise StateSpaceError(
            f"refusing to enumerate 2**{bits} colorings "
            f"((n-1)*m = {bits} free bits exceeds budget {budget})"
        )

    def generate():
        m = lat.m
        full = lat.full_mask
        for packed in range(1 << bits):
            planes = []
            acc = 0
            for i in range(n - 1):
                plane = (packed >> (i * m)) & full
                planes.append(plane)
                acc ^= plane
            planes.append(acc ^ full)
            yield Coloring(n=n, m=m, planes=tuple(planes))

    return generate()
