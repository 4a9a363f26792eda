"""Models of the biased floor-multiply integer schemes.

``floor_multiply_draw`` scales a w-bit lattice value j to X = j / 2**w and
returns Y = 1 + floor(m * X). ``ru_draw`` first composes two lattice
values into X = (floor(U * R1) + R2) / U with U = 2**u, then applies the
same floor. ``r_unif_index_model`` dispatches between the two the way R
3.5.1 does: the simple path up to m = 2**31, the composed one above.

Every scheme has two evaluation modes. EXACT uses unbounded integers and
rationals and is the ground truth for bias analysis. FLOAT performs each
step in binary64 in the order R does, so rounding effects show up.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Union

import numpy as np

from .bitstream import BitSource
from .errors import ArgumentError

logger = logging.getLogger(__name__)

# R converts an MT word with this multiplication; it equals 2**-32 exactly.
UNIF_RAND_SCALE = 2.3283064365386963e-10

R_WORD_BITS = 32
R_RU_SCALE_BITS = 25
R_RU_THRESHOLD = 1 << 31


class EvalMode(str, Enum):
    EXACT = "exact"
    FLOAT = "float"


def _lattice_scale(w: int) -> float:
    return UNIF_RAND_SCALE if w == R_WORD_BITS else 2.0 ** -w


@dataclass
class DrawAudit:
    """Counts outputs that float rounding pushed to m + 1 and were clamped to m."""
    clamp_events: int = 0
    draws: int = 0


@dataclass(frozen=True)
class FloorMultiplyModel:
    w: int = R_WORD_BITS
    eval_mode: EvalMode = EvalMode.EXACT

    def __post_init__(self):
        if not 1 <= self.w <= 64:
            raise ArgumentError(f"w must be in [1, 64], got {self.w}")
        object.__setattr__(self, 'eval_mode', EvalMode(self.eval_mode))


@dataclass(frozen=True)
class RuModel:
    """Two-float composition X = (floor(2**u * R1) + R2) / 2**u.

    R1 = j1 / 2**w and R2 = j2 / 2**r2_width. ``r2_width`` defaults to w;
    zero truncates R2 away entirely. R's own configuration is w=32, u=25.
    """
    w: int = R_WORD_BITS
    u: int = R_RU_SCALE_BITS
    eval_mode: EvalMode = EvalMode.EXACT
    r2_width: Optional[int] = None

    def __post_init__(self):
        if not 1 <= self.w <= 32:
            raise ArgumentError(f"w must be in [1, 32], got {self.w}")
        if not 1 <= self.u <= self.w:
            raise ArgumentError(f"u must be in [1, w={self.w}], got {self.u}")
        if self.r2_width is None:
            object.__setattr__(self, 'r2_width', self.w)
        if not 0 <= self.r2_width <= self.w:
            raise ArgumentError(f"r2_width must be in [0, w={self.w}], got {self.r2_width}")
        object.__setattr__(self, 'eval_mode', EvalMode(self.eval_mode))

    @property
    def lattice_bits(self) -> int:
        """Bits consumed per draw; the composed lattice has 2**lattice_bits points."""
        return self.w + self.r2_width


def _clamp(y: int, m: int, audit: Optional[DrawAudit]) -> int:
    if audit is not None:
        audit.draws += 1
    if y > m:
        if audit is not None:
            audit.clamp_events += 1
        logger.debug(f"Clamped output {y} to m={m}")
        return m
    return y


def floor_multiply_value(j, m: int, model: FloorMultiplyModel):
    """Map lattice value(s) j to Y = 1 + floor(m * j / 2**w), unclamped.

    Accepts a Python int or a numpy integer array. In EXACT mode with an
    array, m * j must fit in 64 bits.
    """
    w = model.w
    if model.eval_mode is EvalMode.EXACT:
        if isinstance(j, np.ndarray):
            return ((np.uint64(m) * j.astype(np.uint64)) >> np.uint64(w)).astype(np.int64) + 1
        return 1 + ((m * j) >> w)

    scale = _lattice_scale(w)
    if isinstance(j, np.ndarray):
        x = j.astype(np.float64) * scale
        return np.floor(np.float64(m) * x).astype(np.int64) + 1
    x = float(j) * scale
    return 1 + math.floor(float(m) * x)


def _check_floor_multiply(m: int, w: int):
    if m < 1:
        raise ArgumentError(f"population size must be >= 1, got {m}")
    if m > (1 << w):
        raise ArgumentError(f"m={m} exceeds the lattice size 2**{w}")


def floor_multiply_draw(source: BitSource, m: int, model: FloorMultiplyModel,
                        audit: Optional[DrawAudit] = None) -> int:
    """Draw w bits and return 1 + floor(m * X), X = j / 2**w.

    Args:
        source: Bit source; exactly w bits are consumed
        m: Population size, 1 <= m <= 2**w
        model: Width and evaluation mode
        audit: Optional clamp counter

    Returns:
        int: Y in [1, m]

    Raises:
        ArgumentError: If m is outside [1, 2**w]
    """
    _check_floor_multiply(m, model.w)
    j = source.next_bits(model.w)
    return _clamp(floor_multiply_value(j, m, model), m, audit)


def ru_compose(j1: int, j2: int, model: RuModel) -> Union[Fraction, float]:
    """Compose two lattice values into X = (floor(U * R1) + R2) / U.

    EXACT mode returns a Fraction; FLOAT mode scales, floors, adds and
    divides in binary64 in that order and returns the float.
    """
    w, u, r2w = model.w, model.u, model.r2_width
    if model.eval_mode is EvalMode.EXACT:
        return Fraction(((j1 >> (w - u)) << r2w) + j2, 1 << (u + r2w))

    scale_u = float(1 << u)
    r1 = float(j1) * _lattice_scale(w)
    r2 = float(j2) * _lattice_scale(r2w) if r2w else 0.0
    return (math.floor(scale_u * r1) + r2) / scale_u


def ru_value(j1: int, j2: int, m: int, model: RuModel) -> int:
    """Y = 1 + floor(m * X) for the composed X, unclamped."""
    if model.eval_mode is EvalMode.EXACT:
        num = ((j1 >> (model.w - model.u)) << model.r2_width) + j2
        return 1 + ((m * num) >> (model.u + model.r2_width))
    return 1 + math.floor(float(m) * ru_compose(j1, j2, model))


def ru_draw(source: BitSource, m: int, model: RuModel, audit: Optional[DrawAudit] = None) -> int:
    """Draw R1 then R2 and return 1 + floor(m * X), clamped to [1, m].

    Consumes w + r2_width bits (2w with the default model).
    """
    if m < 1:
        raise ArgumentError(f"population size must be >= 1, got {m}")
    j1 = source.next_bits(model.w)
    j2 = source.next_bits(model.r2_width)
    return _clamp(ru_value(j1, j2, m, model), m, audit)


def r_unif_index_model(source: BitSource, m: int, eval_mode: EvalMode = EvalMode.FLOAT,
                       audit: Optional[DrawAudit] = None) -> int:
    """R's index generator: floor-multiply on one 32-bit word for m <= 2**31,
    the ru composition (w=32, u=25) above that.
    """
    if m < 1:
        raise ArgumentError(f"population size must be >= 1, got {m}")
    if m <= R_RU_THRESHOLD:
        return floor_multiply_draw(source, m, FloorMultiplyModel(R_WORD_BITS, eval_mode), audit)
    return ru_draw(source, m, RuModel(R_WORD_BITS, R_RU_SCALE_BITS, eval_mode), audit)


@dataclass
class ModeDivergence:
    """Lattice points where EXACT and FLOAT floor-multiply disagree."""
    m: int
    w: int
    checked: int
    mismatches: int
    examples: List[int]

    @property
    def agree(self) -> bool:
        return self.mismatches == 0


def floor_multiply_divergence(m: int, w: int, j_values=None, chunk: int = 1 << 22,
                              max_examples: int = 100) -> ModeDivergence:
    """Compare both evaluation modes over the lattice (or over ``j_values``).

    Args:
        m: Population size
        w: Lattice width, at most 32 for full enumeration
        j_values: Optional iterable of lattice values to check instead
        chunk: Enumeration chunk size
        max_examples: How many diverging j values to keep

    Returns:
        ModeDivergence: Counts and the first diverging j values
    """
    _check_floor_multiply(m, w)
    exact = FloorMultiplyModel(w, EvalMode.EXACT)
    faithful = FloorMultiplyModel(w, EvalMode.FLOAT)

    if j_values is not None:
        js = [int(j) for j in j_values]
        bad = [j for j in js if floor_multiply_value(j, m, exact) != floor_multiply_value(j, m, faithful)]
        result = ModeDivergence(m, w, len(js), len(bad), bad[:max_examples])
    else:
        if m * (1 << w) >= 1 << 64:
            raise ArgumentError(f"full-lattice audit needs m * 2**w < 2**64 (m={m}, w={w})")
        checked = mismatches = 0
        examples: List[int] = []
        for start in range(0, 1 << w, chunk):
            j = np.arange(start, min(start + chunk, 1 << w), dtype=np.uint64)
            a = floor_multiply_value(j, m, exact)
            b = floor_multiply_value(j, m, faithful)
            diff = np.nonzero(a != b)[0]
            checked += j.size
            mismatches += int(diff.size)
            if diff.size and len(examples) < max_examples:
                examples.extend(int(x) for x in j[diff[:max_examples - len(examples)]])
        result = ModeDivergence(m, w, checked, mismatches, examples)

    if result.mismatches:
        logger.warning(f"floor-multiply modes diverge at {result.mismatches} of {result.checked} "
                       f"lattice points (m={m}, w={w})")
    return result
