"""Exact output laws of the floor-multiply schemes and their bias figures.

For the w-bit scheme, outcome k (1-based) is hit by
    ceil(k * 2**w / m) - ceil((k-1) * 2**w / m)
lattice points. Writing 2**w = q*m + r, exactly r outcomes get q + 1
points and the rest get q, so the exact ratio p+/p- is (q+1)/q whenever m
does not divide 2**w. The first-order figure 1 + m * 2**(1-w) is reported
next to it and labelled separately; the two are not the same number.

Counts are computed in chunks with int64 intermediates by splitting
k * 2**w / m into k*q + k*r/m, which keeps every product below m**2.
"""
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .biasedmodels import (DrawAudit, EvalMode, FloorMultiplyModel, RuModel,
                           floor_multiply_value, ru_draw)
from .bitstream import BitSource, MT19937BitSource
from .errors import ArgumentError, BudgetExceededError

logger = logging.getLogger(__name__)

BRUTEFORCE_MAX_W = 24
RU_EXACT_MAX_BITS = 26
COUNT_CHUNK = 1 << 22
BUCKET_CAP = 1024
DECIMAL_DIGITS = 12

_INT64_LIMIT = 1 << 63


def render_decimal(value: Fraction, digits: int = DECIMAL_DIGITS) -> str:
    """Render a rational to ``digits`` significant digits."""
    with localcontext() as ctx:
        ctx.prec = digits
        return str(+(Decimal(value.numerator) / Decimal(value.denominator)))


def render_fraction(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def count_spread(m: int, w: int) -> Tuple[int, int]:
    """(q, r) with 2**w = q*m + r: r outcomes get q+1 points, m-r get q."""
    _check_lattice(m, w)
    return divmod(1 << w, m)


def _check_lattice(m: int, w: int):
    if w < 1:
        raise ArgumentError(f"w must be >= 1, got {w}")
    if m < 1:
        raise ArgumentError(f"population size must be >= 1, got {m}")
    if m > (1 << w):
        raise ArgumentError(f"m={m} exceeds the lattice size 2**{w}")


def iter_bucket_counts(m: int, w: int, chunk: int = COUNT_CHUNK, start: int = 1) -> Iterator[np.ndarray]:
    """Yield the per-outcome lattice counts for k = start..m in chunks.

    Args:
        m: Population size, 1 <= m <= 2**w
        w: Lattice width
        chunk: Outcomes per yielded array
        start: First outcome (1-based)

    Yields:
        np.ndarray: Counts for consecutive outcomes; int64, or object when
        counts do not fit 63 bits
    """
    q, r = count_spread(m, w)
    wide = (m - 1) * (m - 1) + m >= _INT64_LIMIT
    for lo in range(start, m + 1, chunk):
        hi = min(lo + chunk, m + 1)
        if r == 0:
            extra = np.zeros(hi - lo, dtype=np.int64)
        elif not wide:
            k = np.arange(lo, hi, dtype=np.int64)
            extra = (k * r + (m - 1)) // m - ((k - 1) * r + (m - 1)) // m
        else:
            extra = np.array([-(-(k * r) // m) + (-((k - 1) * r)) // m for k in range(lo, hi)],
                             dtype=np.int64)
        if q + 1 < _INT64_LIMIT:
            yield extra + q
        else:
            yield extra.astype(object) + q


def bucket_counts(m: int, w: int, chunk: int = COUNT_CHUNK) -> np.ndarray:
    """Exact lattice count of every outcome 1..m, in O(m) without enumeration."""
    parts = list(iter_bucket_counts(m, w, chunk))
    return np.concatenate(parts) if len(parts) > 1 else parts[0]


def bucket_counts_bruteforce(m: int, w: int, max_w: int = BRUTEFORCE_MAX_W) -> np.ndarray:
    """Enumerate every j in [0, 2**w) through the exact floor-multiply map."""
    _check_lattice(m, w)
    if w > max_w:
        raise BudgetExceededError(f"brute-force enumeration over 2**{w} points exceeds the budget 2**{max_w}",
                                  guidance="use bucket_counts")
    j = np.arange(1 << w, dtype=np.uint64)
    ys = floor_multiply_value(j, m, FloorMultiplyModel(w, EvalMode.EXACT))
    return np.bincount(ys - 1, minlength=m).astype(np.int64)


@dataclass
class BiasReport:
    """Exact selection-probability summary of one scheme at one m.

    ``counts`` is None for streamed reports; ``count_histogram`` maps each
    distinct count to how many outcomes have it and is always present.
    ``ratio`` is None when some outcome is never produced.
    """
    m: int
    w: int
    lattice_bits: int
    count_histogram: Dict[int, int]
    p_plus: Fraction
    p_minus: Fraction
    ratio: Optional[Fraction]
    tv_distance: Fraction
    first_order_bound: Decimal
    argmax_k: int
    argmin_k: int
    counts: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def ratio_infinite(self) -> bool:
        return self.ratio is None

    def as_row(self, digits: int = DECIMAL_DIGITS) -> dict:
        """Flat row with exact fractions as "num/den" plus decimal renderings."""
        return {
            'm': self.m,
            'w': self.w,
            'p_plus': render_fraction(self.p_plus),
            'p_minus': render_fraction(self.p_minus),
            'exact_ratio': 'inf' if self.ratio is None else render_fraction(self.ratio),
            'exact_ratio_decimal': 'inf' if self.ratio is None else render_decimal(self.ratio, digits),
            'first_order_bound': render_decimal(Fraction(self.first_order_bound), digits),
            'tv_distance': render_fraction(self.tv_distance),
            'tv_distance_decimal': render_decimal(self.tv_distance, digits),
            'argmax_k': self.argmax_k,
            'argmin_k': self.argmin_k,
        }


def first_order_bound(m: int, w: int) -> Decimal:
    """1 + m * 2**(1-w), evaluated exactly."""
    if m < 1 or w < 1:
        raise ArgumentError(f"m and w must be >= 1, got m={m}, w={w}")
    value = Fraction(1) + Fraction(m * 2, 1 << w)
    with localcontext() as ctx:
        ctx.prec = max(28, w + len(str(m)) + 2)
        return Decimal(value.numerator) / Decimal(value.denominator)


def _report_from_histogram(m: int, w: int, lattice_bits: int, histogram: Dict[int, int],
                           argmax_k: int, argmin_k: int, counts=None) -> BiasReport:
    lattice = 1 << lattice_bits
    c_max, c_min = max(histogram), min(histogram)
    ratio = Fraction(c_max, c_min) if c_min > 0 else None
    if ratio is None:
        logger.warning(f"Outcome {argmin_k} has zero lattice count (m={m}); ratio is infinite")
    tv = Fraction(sum(f * abs(c * m - lattice) for c, f in histogram.items()), 2 * lattice * m)
    return BiasReport(
        m=m, w=w, lattice_bits=lattice_bits, count_histogram=dict(sorted(histogram.items())),
        p_plus=Fraction(c_max, lattice), p_minus=Fraction(c_min, lattice), ratio=ratio,
        tv_distance=tv, first_order_bound=first_order_bound(m, w),
        argmax_k=argmax_k, argmin_k=argmin_k, counts=counts,
    )


def bias_report(counts: Sequence[int], m: int, w: int, lattice_bits: Optional[int] = None) -> BiasReport:
    """Build the exact report from a full counts vector.

    Args:
        counts: Per-outcome lattice counts, length m
        m: Population size
        w: Word width used for the first-order bound
        lattice_bits: log2 of the lattice size; defaults to w (2w for ru)

    Raises:
        ArgumentError: If the length or total does not match
    """
    lattice_bits = w if lattice_bits is None else lattice_bits
    arr = np.asarray(counts)
    if arr.shape != (m,):
        raise ArgumentError(f"counts has length {arr.size}, expected m={m}")
    total = sum(int(c) for c in arr.tolist())
    if total != 1 << lattice_bits:
        raise ArgumentError(f"counts sum to {total}, expected 2**{lattice_bits}")

    values, freqs = np.unique(arr, return_counts=True)
    histogram = {int(v): int(f) for v, f in zip(values, freqs)}
    return _report_from_histogram(m, w, lattice_bits, histogram,
                                  int(np.argmax(arr)) + 1, int(np.argmin(arr)) + 1, counts=arr)


def bias_report_streaming(m: int, w: int, chunk: int = COUNT_CHUNK) -> BiasReport:
    """Exact floor-multiply report without holding all m counts in memory."""
    histogram: Counter = Counter()
    best_max = best_min = None
    argmax_k = argmin_k = 1
    total = 0
    offset = 1
    for block in iter_bucket_counts(m, w, chunk):
        values, freqs = np.unique(block, return_counts=True)
        histogram.update({int(v): int(f) for v, f in zip(values, freqs)})
        total += sum(int(v) * int(f) for v, f in zip(values, freqs))
        hi, lo = int(values[-1]), int(values[0])
        if best_max is None or hi > best_max:
            best_max, argmax_k = hi, offset + int(np.argmax(block))
        if best_min is None or lo < best_min:
            best_min, argmin_k = lo, offset + int(np.argmin(block))
        offset += block.size
        logger.debug(f"Counted outcomes up to {offset - 1} of {m}")

    if total != 1 << w:
        raise ArgumentError(f"internal count total {total} != 2**{w}")
    return _report_from_histogram(m, w, w, dict(histogram), argmax_k, argmin_k)


def ru_bucket_counts(m: int, model: RuModel, max_bits: int = RU_EXACT_MAX_BITS,
                     rows_per_chunk: int = 1 << 10) -> np.ndarray:
    """Enumerate every (j1, j2) pair of the ru lattice and tally Y.

    EXACT mode uses integer arithmetic equal to the exact rational
    composition; FLOAT mode repeats R's binary64 steps with numpy and
    clamps outputs that round up to m + 1.

    Raises:
        BudgetExceededError: If w + r2_width exceeds ``max_bits``
    """
    if m < 1:
        raise ArgumentError(f"population size must be >= 1, got {m}")
    bits = model.lattice_bits
    if bits > max_bits:
        raise BudgetExceededError(
            f"exact ru enumeration over 2**{bits} pairs exceeds the budget 2**{max_bits}",
            guidance="use the Monte Carlo estimate (ru_bias_montecarlo / --mc N --seed S)")

    w, u, r2w = model.w, model.u, model.r2_width
    j2 = np.arange(1 << r2w, dtype=np.int64)
    counts = np.zeros(m, dtype=np.int64)
    clamped = 0
    for lo in range(0, 1 << w, rows_per_chunk):
        j1 = np.arange(lo, min(lo + rows_per_chunk, 1 << w), dtype=np.int64)
        if model.eval_mode is EvalMode.EXACT:
            num = ((j1 >> (w - u)) << r2w)[:, None] + j2[None, :]
            ys = [(m * int(v)) >> (u + r2w) for v in num.ravel()] if m >= 1 << (63 - u - r2w) \
                else ((num * m) >> (u + r2w)).ravel()
            ys = np.asarray(ys, dtype=np.int64)
        else:
            scale_u = float(1 << u)
            r1 = j1.astype(np.float64) * (2.0 ** -w)
            r2 = j2.astype(np.float64) * (2.0 ** -r2w)
            x = (np.floor(scale_u * r1)[:, None] + r2[None, :]) / scale_u
            ys = np.floor(np.float64(m) * x).astype(np.int64).ravel()
            over = ys >= m
            clamped += int(over.sum())
            ys[over] = m - 1
        counts += np.bincount(ys, minlength=m)
    if clamped:
        logger.warning(f"{clamped} ru lattice points rounded up to m + 1 and were clamped (m={m})")
    return counts


@dataclass
class MonteCarloTally:
    """Sampled ru outcome frequencies over equal-width value cells."""
    m: int
    n: int
    cells: int
    counts: List[int]
    std_errors: List[float]
    clamp_events: int = 0
    seeds: List = field(default_factory=list)

    def cell_bounds(self, c: int) -> Tuple[int, int]:
        """Inclusive outcome range [lo, hi] of cell c."""
        return cell_bounds(self.m, self.cells, c)


def cell_index(y: int, m: int, cells: int) -> int:
    """Equal-width value cell of outcome y in [1, m]."""
    return ((y - 1) * cells) // m


def cell_bounds(m: int, cells: int, c: int) -> Tuple[int, int]:
    lo = -(-(c * m) // cells)
    hi = -(-((c + 1) * m) // cells) - 1
    return lo + 1, hi + 1


def _binomial_std_errors(counts: Sequence[int], n: int) -> List[float]:
    if n == 0:
        return [0.0] * len(counts)
    p = np.asarray(counts, dtype=np.float64) / n
    return np.sqrt(n * p * (1.0 - p)).tolist()


def ru_bias_montecarlo(m: int, model: RuModel, n: int, source: BitSource,
                       bucket_cap: int = BUCKET_CAP) -> MonteCarloTally:
    """Tally n ru draws into min(m, bucket_cap) equal-width cells.

    Args:
        m: Population size
        model: ru configuration, typically full scale (32, 25)
        n: Number of draws, n >= 0
        source: Bit source
        bucket_cap: Maximum number of cells

    Returns:
        MonteCarloTally: Counts with per-cell binomial standard errors
    """
    if n < 0:
        raise ArgumentError(f"sample count must be >= 0, got {n}")
    cells = min(m, bucket_cap)
    counts = [0] * cells
    audit = DrawAudit()
    for _ in range(n):
        counts[cell_index(ru_draw(source, m, model, audit), m, cells)] += 1
    logger.info(f"ru Monte Carlo: m={m}, n={n}, cells={cells}, clamps={audit.clamp_events}")
    seeds = [getattr(source, 'seed')] if hasattr(source, 'seed') else []
    return MonteCarloTally(m, n, cells, counts, _binomial_std_errors(counts, n), audit.clamp_events, seeds)


def derive_seed(seed: int, part: int) -> List[int]:
    """Key words for partition ``part`` of a run seeded with ``seed``."""
    return [seed & 0xFFFFFFFF, part]


def _montecarlo_part(args) -> MonteCarloTally:
    m, model, n, seed_words, bucket_cap = args
    return ru_bias_montecarlo(m, model, n, MT19937BitSource(seed_words), bucket_cap)


def ru_bias_montecarlo_partitioned(m: int, model: RuModel, n: int, seed: int, parts: int = 1,
                                   max_workers: Optional[int] = None,
                                   bucket_cap: int = BUCKET_CAP) -> MonteCarloTally:
    """Monte Carlo over ``parts`` independent sub-sources, merged in order.

    With parts == 1 the single source is seeded with ``mt_seed(seed)``.
    Otherwise part i uses ``mt_seed_by_array([seed, i])`` and draws its
    share of n; the merged tally depends only on (seed, parts).
    """
    if parts < 1:
        raise ArgumentError(f"parts must be >= 1, got {parts}")
    if parts == 1:
        return ru_bias_montecarlo(m, model, n, MT19937BitSource(seed), bucket_cap)

    shares = [n // parts + (1 if i < n % parts else 0) for i in range(parts)]
    jobs = [(m, model, shares[i], derive_seed(seed, i), bucket_cap) for i in range(parts)]
    if max_workers == 1:
        results = [_montecarlo_part(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_montecarlo_part, jobs))

    cells = results[0].cells
    counts = [sum(r.counts[c] for r in results) for c in range(cells)]
    return MonteCarloTally(m, n, cells, counts, _binomial_std_errors(counts, n),
                           sum(r.clamp_events for r in results), [job[3] for job in jobs])
