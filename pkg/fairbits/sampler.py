"""Random sampling on top of the rejection generator.

All shuffling goes through one Fisher-Yates core: positions are visited
from n-1 down, and position i is swapped with a uniform draw from
[0, i]. The array is virtual; only displaced positions are stored, so
sampling k items from n costs O(k) memory for any n.

Samples come out in draw order: the value fixed at position n-1 first,
then n-2, and so on. A full sample (k = n) is therefore the reverse of
the array order that ``permutation`` returns for the same source.

Outputs are 1-based.
"""
import logging
from typing import Callable, Dict, List

from .bitstream import BitSource
from .errors import ArgumentError
from .randint import randbelow, randint

logger = logging.getLogger(__name__)

BoundedDraw = Callable[[int], int]


class VirtualFisherYates:
    """Fisher-Yates over the implicit array [0, 1, ..., n-1].

    ``position_map`` holds only the positions whose value has changed;
    its size never exceeds the number of steps taken.
    """

    def __init__(self, n: int):
        if n < 0:
            raise ArgumentError(f"population size must be >= 0, got {n}")
        self.n = n
        self.position_map: Dict[int, int] = {}
        self.next_position = n - 1

    def step(self, draw: BoundedDraw) -> int:
        """Fix the next position from the top and return its 0-based value."""
        i = self.next_position
        if i < 0:
            raise ArgumentError("all positions are already fixed")
        j = draw(i + 1)
        value_i = self.position_map.pop(i, i)
        if j == i:
            chosen = value_i
        else:
            chosen = self.position_map.get(j, j)
            self.position_map[j] = value_i
        self.next_position -= 1
        return chosen


def partial_shuffle(n: int, k: int, draw: BoundedDraw) -> List[int]:
    """The first k Fisher-Yates steps over 1..n, in draw order.

    Args:
        n: Population size
        k: Number of steps, 0 <= k <= n
        draw: Callable returning a uniform integer in [0, bound)

    Returns:
        List[int]: k distinct values from 1..n
    """
    if not 0 <= k <= n:
        raise ArgumentError(f"need 0 <= k <= n, got k={k}, n={n}")
    fy = VirtualFisherYates(n)
    return [fy.step(draw) + 1 for _ in range(k)]


def _source_draw(source: BitSource) -> BoundedDraw:
    return lambda bound: randbelow(source, bound).value


def permutation(source: BitSource, n: int) -> List[int]:
    """Uniform permutation of 1..n in array order.

    Uses the draws randbelow(n), randbelow(n-1), ..., randbelow(2).
    """
    if n < 0:
        raise ArgumentError(f"population size must be >= 0, got {n}")
    items = list(range(1, n + 1))
    for i in range(n - 1, 0, -1):
        j = randbelow(source, i + 1).value
        items[i], items[j] = items[j], items[i]
    return items


def sample_without_replacement(source: BitSource, n: int, k: int) -> List[int]:
    """k distinct values from 1..n, uniform over ordered k-subsets, in draw order.

    With k = n the result is ``permutation`` of the same source, reversed.
    """
    if k > n:
        raise ArgumentError(f"cannot draw k={k} distinct values from n={n}")
    result = partial_shuffle(n, k, _source_draw(source))
    logger.debug(f"Sampled {k} of {n} without replacement")
    return result


def sample_with_replacement(source: BitSource, n: int, k: int) -> List[int]:
    """k independent uniform draws from 1..n."""
    if n < 1:
        raise ArgumentError(f"population size must be >= 1, got {n}")
    if k < 0:
        raise ArgumentError(f"sample size must be >= 0, got {k}")
    return [randint(source, 1, n) for _ in range(k)]
