"""Bit sources: the abstract supply of fair bits and a bit-exact MT19937.

Bits are handed out most-significant first. A word-backed source peels
bits off the top of each 32-bit word and buffers whatever is left for the
next call; words are concatenated in generation order when a request is
wider than the buffer. With ``discard_remainder=True`` every request starts
on a fresh word and the unused low bits are thrown away instead.

Usage:
    source = MT19937BitSource(5489)
    source.next_bits(32)    # 3499211612
    source.bits_consumed    # 32
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence

import numpy as np

from .errors import ArgumentError, SourceExhaustedError

logger = logging.getLogger(__name__)

WORD_BITS = 32
WORD_MASK = 0xFFFFFFFF

# MT19937 period and twist parameters
N = 624
M = 397
MATRIX_A = 0x9908B0DF
UPPER_MASK = 0x80000000
LOWER_MASK = 0x7FFFFFFF
INIT_MULTIPLIER = 1812433253

# Tempering
TEMPER_SHIFT_U = 11
TEMPER_SHIFT_S = 7
TEMPER_MASK_B = 0x9D2C5680
TEMPER_SHIFT_T = 15
TEMPER_MASK_C = 0xEFC60000
TEMPER_SHIFT_L = 18


@dataclass
class Mt19937State:
    """624-word MT19937 state plus read cursor.

    ``tempered`` holds the tempered outputs of the current block; it is
    refilled by every twist. ``index == N`` means the next read twists.
    """
    key: np.ndarray
    index: int = N
    tempered: np.ndarray = field(default_factory=lambda: np.zeros(N, dtype=np.uint32))
    twists: int = 0


def mt_seed(seed: int) -> Mt19937State:
    """Initialize with the 2002 reference recurrence (``init_genrand``).

    Args:
        seed: Any integer; only its low 32 bits are used

    Returns:
        Mt19937State: Fresh state whose cursor forces a twist on first read
    """
    words = [seed & WORD_MASK]
    for i in range(1, N):
        prev = words[-1]
        words.append((INIT_MULTIPLIER * (prev ^ (prev >> 30)) + i) & WORD_MASK)
    return Mt19937State(key=np.array(words, dtype=np.uint32))


def mt_seed_by_array(init_key: Sequence[int]) -> Mt19937State:
    """Initialize from a key of 32-bit words (reference ``init_by_array``).

    Args:
        init_key: Non-empty sequence of integers, each reduced to 32 bits

    Returns:
        Mt19937State: Fresh state

    Raises:
        ArgumentError: If the key is empty
    """
    key_words = [k & WORD_MASK for k in init_key]
    if not key_words:
        raise ArgumentError("init_key must contain at least one word")

    mt = mt_seed(19650218).key.tolist()
    i, j = 1, 0
    for _ in range(max(N, len(key_words))):
        mt[i] = ((mt[i] ^ ((mt[i - 1] ^ (mt[i - 1] >> 30)) * 1664525)) + key_words[j] + j) & WORD_MASK
        i += 1
        j += 1
        if i >= N:
            mt[0] = mt[N - 1]
            i = 1
        if j >= len(key_words):
            j = 0
    for _ in range(N - 1):
        mt[i] = ((mt[i] ^ ((mt[i - 1] ^ (mt[i - 1] >> 30)) * 1566083941)) - i) & WORD_MASK
        i += 1
        if i >= N:
            mt[0] = mt[N - 1]
            i = 1
    mt[0] = 0x80000000
    return Mt19937State(key=np.array(mt, dtype=np.uint32))


def _twist(state: Mt19937State):
    """Regenerate all N words in place and temper the new block.

    Word i reads words i+1 and i+M (mod N); the four slices below follow
    the order in which those neighbours get rewritten.
    """
    key = state.key
    mag01 = np.array([0, MATRIX_A], dtype=np.uint32)
    span = N - M
    for lo, hi, src in ((0, span, M), (span, 2 * span, 0), (2 * span, N - 1, span)):
        y = (key[lo:hi] & UPPER_MASK) | (key[lo + 1:hi + 1] & LOWER_MASK)
        key[lo:hi] = key[src:src + hi - lo] ^ (y >> 1) ^ mag01[y & 1]
    y = (int(key[N - 1]) & UPPER_MASK) | (int(key[0]) & LOWER_MASK)
    key[N - 1] = int(key[M - 1]) ^ (y >> 1) ^ (MATRIX_A if y & 1 else 0)

    t = key.copy()
    t ^= t >> TEMPER_SHIFT_U
    t ^= (t << TEMPER_SHIFT_S) & np.uint32(TEMPER_MASK_B)
    t ^= (t << TEMPER_SHIFT_T) & np.uint32(TEMPER_MASK_C)
    t ^= t >> TEMPER_SHIFT_L
    state.tempered = t
    state.index = 0
    state.twists += 1
    logger.debug(f"MT19937 twist #{state.twists}")


def mt_next_u32(state: Mt19937State) -> int:
    """Next tempered 32-bit output; twists when the block is used up."""
    if state.index >= N:
        _twist(state)
    value = int(state.tempered[state.index])
    state.index += 1
    return value


class BitSource(ABC):
    """Stateful stream of bits with exact consumption accounting.

    A source is sequential: it may be handed between threads but must
    never be read from two threads at once.
    """

    def __init__(self):
        self.bits_consumed = 0

    @abstractmethod
    def _take(self, k: int) -> int:
        """Return the next k > 0 bits, MSB first."""

    def next_bits(self, k: int) -> int:
        """Next k bits as an integer in [0, 2**k).

        Args:
            k: Bit count, k >= 0

        Returns:
            int: The bits read MSB first; 0 when k == 0

        Raises:
            ArgumentError: If k is negative
            SourceExhaustedError: If a fixed source runs out
        """
        if k < 0:
            raise ArgumentError(f"bit count must be non-negative, got {k}")
        if k == 0:
            return 0
        value = self._take(k)
        self.bits_consumed += k
        return value


class WordBitSource(BitSource):
    """Bit source backed by a generator of 32-bit words."""

    def __init__(self, discard_remainder: bool = False):
        super().__init__()
        self.discard_remainder = discard_remainder
        self.words_drawn = 0
        self._buffer = 0
        self._buffered = 0

    @abstractmethod
    def _next_word(self) -> int:
        """Return the next 32-bit word."""

    def _word(self) -> int:
        self.words_drawn += 1
        return self._next_word()

    def _take(self, k: int) -> int:
        if self.discard_remainder:
            nwords = -(-k // WORD_BITS)
            acc = 0
            for _ in range(nwords):
                acc = (acc << WORD_BITS) | self._word()
            return acc >> (nwords * WORD_BITS - k)

        while self._buffered < k:
            self._buffer = (self._buffer << WORD_BITS) | self._word()
            self._buffered += WORD_BITS
        shift = self._buffered - k
        value = self._buffer >> shift
        self._buffer &= (1 << shift) - 1
        self._buffered = shift
        return value


class MT19937BitSource(WordBitSource):
    """MT19937 words as a bit stream.

    Args:
        seed: Integer seed for ``mt_seed``, or a sequence of words for
            ``mt_seed_by_array``
        discard_remainder: Start every request on a fresh word
    """

    def __init__(self, seed, discard_remainder: bool = False):
        super().__init__(discard_remainder)
        if isinstance(seed, int):
            self.state = mt_seed(seed)
        else:
            self.state = mt_seed_by_array(list(seed))
        self.seed = seed

    def _next_word(self) -> int:
        return mt_next_u32(self.state)


class FixedBitSource(BitSource):
    """Replays an explicit bit vector and refuses to invent more.

    Usage:
        FixedBitSource([1, 0, 1]).next_bits(3)   # 5
    """

    def __init__(self, bits: Iterable[int]):
        super().__init__()
        self.bits: List[int] = [int(b) for b in bits]
        if any(b not in (0, 1) for b in self.bits):
            raise ArgumentError("FixedBitSource accepts only 0/1 bits")
        self.cursor = 0

    @classmethod
    def from_int(cls, value: int, width: int) -> "FixedBitSource":
        """Source replaying ``value`` as exactly ``width`` bits, MSB first."""
        return cls((value >> (width - 1 - i)) & 1 for i in range(width))

    @property
    def remaining(self) -> int:
        return len(self.bits) - self.cursor

    def _take(self, k: int) -> int:
        if k > self.remaining:
            raise SourceExhaustedError(k, self.remaining)
        value = 0
        for bit in self.bits[self.cursor:self.cursor + k]:
            value = (value << 1) | bit
        self.cursor += k
        return value
