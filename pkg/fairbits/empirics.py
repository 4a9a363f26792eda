"""Chi-square uniformity experiments and rejection-rate measurements.

Experiments draw from one scheme on a seeded MT19937 source, tally into
equal-width value cells and test against either the uniform law or the
scheme's own exact law. Cell probabilities come from exact lattice
counts, so cells of unequal width are handled correctly.
"""
import logging
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaincc

from .biasedmodels import (R_RU_SCALE_BITS, R_RU_THRESHOLD, R_WORD_BITS, EvalMode,
                           FloorMultiplyModel, RuModel, floor_multiply_draw, r_unif_index_model,
                           ru_draw)
from .bitstream import BitSource, MT19937BitSource
from .errors import ArgumentError
from .exactbias import BUCKET_CAP, bucket_counts, cell_bounds, cell_index, ru_bucket_counts
from .randint import DrawStats, randbelow, rejection_rate

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.001
MIN_EXPECTED_PER_CELL = 10

SCHEMES = ('reject', 'floor', 'ru', 'r-index')
EXPECTATIONS = ('uniform', 'exact')


@dataclass(frozen=True)
class Scheme:
    """A generator under test.

    ``reject`` is the rejection method, ``floor`` floor-multiply on w bits,
    ``ru`` the (w, u) composition and ``r-index`` R's dispatch between
    floor-multiply(32) and ru(32, 25); w and u are ignored for the last.
    """
    kind: str
    w: int = 32
    u: int = 25
    eval_mode: EvalMode = EvalMode.EXACT

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise ArgumentError(f"unknown scheme '{self.kind}'; expected one of {', '.join(SCHEMES)}")
        object.__setattr__(self, 'eval_mode', EvalMode(self.eval_mode))

    @property
    def name(self) -> str:
        if self.kind == 'floor':
            return f"floor-multiply(w={self.w})"
        if self.kind == 'ru':
            return f"ru(w={self.w},u={self.u})"
        if self.kind == 'r-index':
            return "r-unif-index"
        return "unbiased-rejection"

    def drawer(self, m: int) -> Callable[[BitSource], int]:
        """Callable returning one draw in [1, m] from a source."""
        if self.kind == 'reject':
            return lambda source: 1 + randbelow(source, m).value
        if self.kind == 'floor':
            model = FloorMultiplyModel(self.w, self.eval_mode)
            return lambda source: floor_multiply_draw(source, m, model)
        if self.kind == 'r-index':
            return lambda source: r_unif_index_model(source, m, self.eval_mode)
        model = RuModel(self.w, self.u, self.eval_mode)
        return lambda source: ru_draw(source, m, model)

    def exact_cell_probabilities(self, m: int, cells: int) -> np.ndarray:
        """Exact probability of each equal-width cell under this scheme."""
        starts = [cell_bounds(m, cells, c)[0] - 1 for c in range(cells)]
        if self.kind == 'reject':
            return uniform_cell_probabilities(m, cells)
        if self.kind == 'floor' or (self.kind == 'r-index' and m <= R_RU_THRESHOLD):
            w = self.w if self.kind == 'floor' else R_WORD_BITS
            counts, lattice = bucket_counts(m, w), 1 << w
        else:
            model = (RuModel(self.w, self.u, self.eval_mode) if self.kind == 'ru'
                     else RuModel(R_WORD_BITS, R_RU_SCALE_BITS, self.eval_mode))
            counts, lattice = ru_bucket_counts(m, model), 1 << model.lattice_bits
        per_cell = np.add.reduceat(counts, starts)
        return np.array([float(Fraction(int(c), lattice)) for c in per_cell])


def uniform_cell_probabilities(m: int, cells: int) -> np.ndarray:
    sizes = [hi - lo + 1 for lo, hi in (cell_bounds(m, cells, c) for c in range(cells))]
    return np.asarray(sizes, dtype=np.float64) / m


@dataclass
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    n: int
    cells: int
    alpha: float
    verdict: str
    scheme: str = ""
    expectation: str = "uniform"
    m: int = 0
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return asdict(self)


def chisq_statistic(observed: Sequence[float], expected: Sequence[float]) -> float:
    """Pearson's statistic sum((O - E)**2 / E).

    Raises:
        ArgumentError: On length mismatch, a non-positive expected cell, or
            observed and expected totals that disagree
    """
    o = np.asarray(observed, dtype=np.float64)
    e = np.asarray(expected, dtype=np.float64)
    if o.shape != e.shape:
        raise ArgumentError(f"observed has {o.size} cells, expected has {e.size}")
    if np.any(e <= 0):
        raise ArgumentError("every expected cell count must be positive")
    if round(o.sum()) != round(e.sum()):
        raise ArgumentError(f"observed total {o.sum()} does not match expected total {e.sum()}")
    return float(np.sum((o - e) ** 2 / e))


def chisq_pvalue(statistic: float, dof: int) -> float:
    """Upper-tail chi-square probability Q(dof/2, statistic/2)."""
    if not (math.isfinite(statistic) and math.isfinite(dof)):
        raise ArgumentError(f"non-finite input: statistic={statistic}, dof={dof}")
    if statistic < 0 or dof < 1:
        raise ArgumentError(f"need statistic >= 0 and dof >= 1, got {statistic}, {dof}")
    if statistic == 0:
        return 1.0
    return float(min(1.0, max(0.0, gammaincc(dof / 2.0, statistic / 2.0))))


def tally(draw: Callable[[BitSource], int], source: BitSource, m: int, n: int, cells: int) -> np.ndarray:
    """Draw n values and count them per equal-width cell."""
    ids = np.fromiter((cell_index(draw(source), m, cells) for _ in range(n)), dtype=np.int64, count=n)
    return np.bincount(ids, minlength=cells)


def run_uniformity_experiment(scheme: Scheme, m: int, n: int, seed: int, cells: Optional[int] = None,
                              alpha: float = DEFAULT_ALPHA, expectation: str = 'uniform',
                              bucket_cap: int = BUCKET_CAP) -> ChiSquareResult:
    """Draw n values from ``scheme`` on an MT source and chi-square test them.

    Args:
        scheme: Generator under test
        m: Population size
        n: Number of draws; at least 10 per cell
        seed: MT19937 seed
        cells: Equal-width value cells, 2 <= cells <= m; default min(m, bucket_cap)
        alpha: Significance level for the verdict
        expectation: 'uniform' (null test) or 'exact' (the scheme's own law)

    Returns:
        ChiSquareResult: Statistic, p-value and verdict

    Raises:
        ArgumentError: On inadequate n, bad cell count or unknown expectation
    """
    if expectation not in EXPECTATIONS:
        raise ArgumentError(f"unknown expectation '{expectation}'; expected one of {', '.join(EXPECTATIONS)}")
    cells = min(m, bucket_cap) if cells is None else cells
    if not 2 <= cells <= m:
        raise ArgumentError(f"cells must be in [2, m={m}], got {cells}")
    if n < MIN_EXPECTED_PER_CELL * cells:
        raise ArgumentError(f"n={n} is too small for {cells} cells; need n >= {MIN_EXPECTED_PER_CELL * cells}")

    observed = tally(scheme.drawer(m), MT19937BitSource(seed), m, n, cells)
    if expectation == 'exact':
        probs = scheme.exact_cell_probabilities(m, cells)
    else:
        probs = uniform_cell_probabilities(m, cells)

    statistic = chisq_statistic(observed, n * probs)
    dof = cells - 1
    p_value = chisq_pvalue(statistic, dof)
    verdict = 'reject' if p_value < alpha else 'fail-to-reject'
    logger.info(f"{scheme.name} m={m} n={n} seed={seed} vs {expectation}: "
                f"chi2={statistic:.4f} dof={dof} p={p_value:.6g} -> {verdict}")
    return ChiSquareResult(statistic, dof, p_value, n, cells, alpha, verdict,
                           scheme=scheme.name, expectation=expectation, m=m, seed=seed)


@dataclass
class RejectionMeasurement:
    m: int
    n: int
    stats: DrawStats
    observed_rate: float
    expected_rate: Fraction
    z_score: float

    def to_dict(self) -> dict:
        return {
            'm': self.m,
            'n': self.n,
            'draws_attempted': self.stats.draws_attempted,
            'draws_rejected': self.stats.draws_rejected,
            'bits_consumed': self.stats.bits_consumed,
            'observed_rate': self.observed_rate,
            'expected_rate': f"{self.expected_rate.numerator}/{self.expected_rate.denominator}",
            'z_score': self.z_score,
        }


def measure_rejection(source: BitSource, m: int, n: int) -> RejectionMeasurement:
    """Run n rejection draws and compare the discard frequency with the exact rate."""
    if n < 1:
        raise ArgumentError(f"n must be >= 1, got {n}")
    totals = DrawStats()
    for _ in range(n):
        totals += randbelow(source, m).stats

    p = rejection_rate(m)
    attempted = totals.draws_attempted
    observed = totals.draws_rejected / attempted
    if p == 0:
        z = 0.0
    else:
        z = (totals.draws_rejected - attempted * float(p)) / math.sqrt(attempted * float(p) * float(1 - p))
    logger.info(f"Rejection rate m={m}: observed={observed:.7f} expected={float(p):.7f} z={z:.3f}")
    return RejectionMeasurement(m, n, totals, observed, p, z)
