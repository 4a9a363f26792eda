"""Unbiased bounded integers by rejection.

Draw just enough bits to cover {0, ..., m-1}; if the value lands at or
above m, throw it away and draw again. Given fair bits the result is
exactly uniform.

The bit count is the bit length of m-1, not ceil(log2(m-1)): the latter
gives 2 bits for m = 5, which cannot represent 4, and is undefined for
m <= 2.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .bitstream import BitSource
from .errors import ArgumentError

logger = logging.getLogger(__name__)


@dataclass
class DrawStats:
    """Discard accounting for one or more rejection draws."""
    draws_attempted: int = 0
    draws_rejected: int = 0
    bits_consumed: int = 0

    def __iadd__(self, other: "DrawStats") -> "DrawStats":
        self.draws_attempted += other.draws_attempted
        self.draws_rejected += other.draws_rejected
        self.bits_consumed += other.bits_consumed
        return self


class Draw(NamedTuple):
    value: int
    stats: DrawStats


def _check_population(m: int):
    if m < 1:
        raise ArgumentError(f"population size must be >= 1, got {m}")


def bits_needed(m: int) -> int:
    """Smallest b with 2**b >= m; 0 for m == 1."""
    _check_population(m)
    return (m - 1).bit_length()


def randbelow(source: BitSource, m: int) -> Draw:
    """Uniform integer in [0, m) from ``source`` by rejection.

    Args:
        source: Bit source
        m: Population size, m >= 1

    Returns:
        Draw: The accepted value and the draw accounting

    Raises:
        ArgumentError: If m < 1
        SourceExhaustedError: Propagated from a fixed source
    """
    b = bits_needed(m)
    stats = DrawStats()
    while True:
        value = source.next_bits(b)
        stats.draws_attempted += 1
        stats.bits_consumed += b
        if value < m:
            return Draw(value, stats)
        stats.draws_rejected += 1


def randint(source: BitSource, lo: int, hi: int) -> int:
    """Uniform integer in [lo, hi], inclusive."""
    if lo > hi:
        raise ArgumentError(f"empty range: lo={lo} > hi={hi}")
    return lo + randbelow(source, hi - lo + 1).value


def rejection_rate(m: int) -> Fraction:
    """Exact probability that one draw of bits_needed(m) bits is rejected.

    Zero for powers of two; just under one half for m = 2**p + 1.
    """
    b = bits_needed(m)
    return Fraction((1 << b) - m, 1 << b)
