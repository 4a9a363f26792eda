import random
from decimal import Decimal
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairbits.biasedmodels import EvalMode, RuModel, ru_value
from fairbits.errors import ArgumentError, BudgetExceededError
from fairbits.exactbias import (bias_report, bias_report_streaming, bucket_counts,
                                bucket_counts_bruteforce, cell_bounds, cell_index, count_spread,
                                first_order_bound, iter_bucket_counts, ru_bias_montecarlo,
                                ru_bias_montecarlo_partitioned, ru_bucket_counts)
from fairbits.bitstream import MT19937BitSource


def test_bucket_counts_examples():
    assert bucket_counts(3, 3).tolist() == [3, 3, 2]
    assert bucket_counts(4, 3).tolist() == [2, 2, 2, 2]
    counts = bucket_counts(5, 4)
    assert counts.sum() == 16
    assert set(counts.tolist()) == {3, 4}


def test_bruteforce_examples():
    assert bucket_counts_bruteforce(3, 3).tolist() == [3, 3, 2]
    assert bucket_counts_bruteforce(1, 5).tolist() == [32]
    assert bucket_counts_bruteforce(64, 6).tolist() == [1] * 64


def test_bruteforce_budget():
    with pytest.raises(BudgetExceededError):
        bucket_counts_bruteforce(3, 25)


def test_counts_reject_oversized_population():
    with pytest.raises(ArgumentError):
        bucket_counts(9, 3)
    with pytest.raises(ArgumentError):
        bucket_counts(0, 3)


@pytest.mark.parametrize("w", range(1, 13))
def test_counts_match_enumeration_for_every_m(w):
    for m in range(1, 2 ** w + 1):
        assert np.array_equal(bucket_counts(m, w), bucket_counts_bruteforce(m, w)), (m, w)


@given(st.integers(min_value=13, max_value=20).flatmap(
    lambda w: st.tuples(st.integers(min_value=1, max_value=2 ** w), st.just(w))))
@settings(max_examples=100, deadline=None)
def test_counts_match_enumeration_random_cases(case):
    m, w = case
    assert np.array_equal(bucket_counts(m, w), bucket_counts_bruteforce(m, w))


@pytest.mark.slow
def test_counts_match_enumeration_thousand_cases():
    rng = random.Random(20180802)
    for _ in range(1000):
        w = rng.randint(1, 24)
        m = rng.randint(1, 2 ** w)
        assert np.array_equal(bucket_counts(m, w), bucket_counts_bruteforce(m, w)), (m, w)


@pytest.mark.parametrize("m,w", [(3, 3), (5, 4), (7, 10), (1000, 16), (10 ** 6, 32)])
def test_counts_take_two_adjacent_values(m, w):
    q, r = count_spread(m, w)
    counts = bucket_counts(m, w)
    assert int(counts.sum()) == 2 ** w
    assert set(counts.tolist()) <= {q, q + 1}
    assert int((counts == q + 1).sum()) == r
    report = bias_report(counts, m, w)
    assert report.ratio == (Fraction(q + 1, q) if r else 1)


def test_report_example():
    report = bias_report([3, 3, 2], 3, 3)
    assert report.p_plus == Fraction(3, 8)
    assert report.p_minus == Fraction(1, 4)
    assert report.ratio == Fraction(3, 2)
    assert report.tv_distance == Fraction(1, 12)
    assert report.argmax_k == 1
    assert report.argmin_k == 3
    assert report.count_histogram == {2: 1, 3: 2}


def test_report_row_rendering():
    row = bias_report([3, 3, 2], 3, 3).as_row()
    assert row['exact_ratio'] == '3/2'
    assert row['exact_ratio_decimal'] == '1.5'
    assert row['tv_distance'] == '1/12'
    assert row['first_order_bound'] == '1.75'


def test_equal_counts_are_uniform():
    report = bias_report([2, 2, 2, 2], 4, 3)
    assert report.ratio == 1
    assert report.tv_distance == 0


def test_zero_count_gives_infinite_ratio():
    report = bias_report([4, 0], 2, 2)
    assert report.ratio_infinite
    assert report.p_minus == 0
    assert report.as_row()['exact_ratio'] == 'inf'


def test_report_validates_counts():
    with pytest.raises(ArgumentError):
        bias_report([3, 3], 3, 3)
    with pytest.raises(ArgumentError):
        bias_report([3, 3, 3], 3, 3)


def test_uniform_exactly_when_m_divides_lattice():
    w = 12
    for m in range(1, 2 ** w + 1):
        report = bias_report(bucket_counts(m, w), m, w)
        assert (report.ratio == 1) == (2 ** w % m == 0), m


def test_severity_grows_toward_lattice_size():
    w = 16
    ratios = [bias_report_streaming(2 ** k + 1, w).ratio for k in range(1, w)]
    assert all(a <= b for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] == 2


def test_first_order_bound_headlines():
    assert abs(first_order_bound(10 ** 6, 32) - Decimal("1.000465661")) < Decimal("1e-9")
    assert first_order_bound(2 ** 31, 32) == 2
    assert Fraction(first_order_bound(1, 32)) == 1 + Fraction(1, 2 ** 31)


def test_bound_and_exact_ratio_differ_at_a_million():
    report = bias_report_streaming(10 ** 6, 32)
    q = 2 ** 32 // 10 ** 6
    assert report.ratio == Fraction(q + 1, q)
    assert Fraction(report.first_order_bound) > report.ratio


@pytest.mark.parametrize("m,w", [(3, 3), (1000, 16), (12345, 20), (2 ** 20 - 1, 20)])
def test_streaming_matches_full_report(m, w):
    full = bias_report(bucket_counts(m, w), m, w)
    streamed = bias_report_streaming(m, w, chunk=1000)
    assert streamed.count_histogram == full.count_histogram
    assert (streamed.ratio, streamed.tv_distance) == (full.ratio, full.tv_distance)
    assert (streamed.argmax_k, streamed.argmin_k) == (full.argmax_k, full.argmin_k)
    assert streamed.counts is None


def test_chunks_at_full_scale_power_of_two():
    m = 2 ** 31
    assert next(iter_bucket_counts(m, 32, chunk=8)).tolist() == [2] * 8
    assert next(iter_bucket_counts(m, 32, chunk=8, start=m - 7)).tolist() == [2] * 8


def test_chunks_just_below_full_scale():
    m = 2 ** 31 - 1
    assert next(iter_bucket_counts(m, 32, chunk=4)).tolist() == [3, 2, 2, 2]
    assert next(iter_bucket_counts(m, 32, chunk=4, start=2 ** 30 - 1)).tolist() == [2, 3, 2, 2]
    assert next(iter_bucket_counts(m, 32, chunk=4, start=m - 3)).tolist() == [2, 2, 2, 2]


def test_chunks_with_largest_products():
    m = 2 ** 31 + 1
    tail = next(iter_bucket_counts(m, 32, chunk=1000, start=m - 999))
    assert set(tail.tolist()) <= {1, 2}
    # products beyond 63 bits take the unbounded-integer path
    m = 2 ** 32 - 1
    assert next(iter_bucket_counts(m, 32, chunk=4)).tolist() == [2, 1, 1, 1]
    assert next(iter_bucket_counts(m, 32, chunk=4, start=m - 3)).tolist() == [1, 1, 1, 1]


@pytest.mark.slow
def test_full_scale_report_just_below_two_to_31():
    m = 2 ** 31 - 1
    report = bias_report_streaming(m, 32)
    assert report.ratio == Fraction(3, 2)
    assert report.count_histogram == {2: m - 2, 3: 2}
    assert Fraction(report.first_order_bound) == 1 + Fraction(2 * m, 2 ** 32)


def test_ru_counts_examples():
    assert ru_bucket_counts(1, RuModel(3, 2)).tolist() == [64]
    counts = ru_bucket_counts(5, RuModel(4, 2))
    assert counts.sum() == 2 ** 8
    assert len(set(counts.tolist())) > 1


def test_ru_with_full_scale_u_is_the_doubled_lattice():
    assert np.array_equal(ru_bucket_counts(8, RuModel(3, 3)), bucket_counts(8, 6))
    for m in range(1, 17):
        assert np.array_equal(ru_bucket_counts(m, RuModel(4, 4)), bucket_counts(m, 8))


def test_ru_with_truncated_r2_is_floor_multiply():
    for m in range(1, 17):
        assert np.array_equal(ru_bucket_counts(m, RuModel(4, 4, r2_width=0)), bucket_counts(m, 4))


@pytest.mark.parametrize("mode", [EvalMode.EXACT, EvalMode.FLOAT])
def test_ru_counts_match_pairwise_enumeration(mode):
    model = RuModel(4, 2, mode)
    for m in range(1, 17):
        expected = np.zeros(m, dtype=np.int64)
        for j1 in range(16):
            for j2 in range(16):
                expected[ru_value(j1, j2, m, model) - 1] += 1
        counts = ru_bucket_counts(m, model)
        assert counts.sum() == 2 ** 8
        assert np.array_equal(counts, expected)


def test_ru_exact_enumeration_budget():
    with pytest.raises(BudgetExceededError) as err:
        ru_bucket_counts(5, RuModel(16, 8))
    assert err.value.guidance


def test_cells_partition_the_outcomes():
    for m, cells in [(10, 3), (200, 200), (2 ** 31 + 1, 1024), (1025, 1024)]:
        bounds = [cell_bounds(m, cells, c) for c in range(cells)]
        assert bounds[0][0] == 1 and bounds[-1][1] == m
        assert all(a[1] + 1 == b[0] for a, b in zip(bounds, bounds[1:]))
        for c in (0, cells // 2, cells - 1):
            lo, hi = bounds[c]
            assert cell_index(lo, m, cells) == c == cell_index(hi, m, cells)


def test_montecarlo_without_draws_is_empty():
    tally = ru_bias_montecarlo(10, RuModel(), 0, MT19937BitSource(1))
    assert tally.counts == [0] * 10
    assert tally.std_errors == [0.0] * 10


def test_montecarlo_two_outcomes_balanced():
    n = 200_000
    tally = ru_bias_montecarlo(2, RuModel(), n, MT19937BitSource(2018))
    sigma = (n * 0.25) ** 0.5
    assert all(abs(c - n / 2) < 5 * sigma for c in tally.counts)
    assert tally.seeds == [2018]


def test_montecarlo_is_reproducible():
    m = 2 ** 31 + 1
    a = ru_bias_montecarlo(m, RuModel(), 3000, MT19937BitSource(9))
    b = ru_bias_montecarlo(m, RuModel(), 3000, MT19937BitSource(9))
    assert a.cells == 1024
    assert a.counts == b.counts
    assert sum(a.counts) == 3000


def test_partitioned_montecarlo_merges_in_order():
    model = RuModel(eval_mode=EvalMode.FLOAT)
    a = ru_bias_montecarlo_partitioned(1000, model, 1001, seed=5, parts=3, max_workers=1)
    b = ru_bias_montecarlo_partitioned(1000, model, 1001, seed=5, parts=3, max_workers=1)
    assert sum(a.counts) == 1001
    assert a.counts == b.counts
    assert a.seeds == [[5, 0], [5, 1], [5, 2]]


def test_single_part_uses_plain_seed():
    single = ru_bias_montecarlo_partitioned(50, RuModel(), 500, seed=8, parts=1)
    direct = ru_bias_montecarlo(50, RuModel(), 500, MT19937BitSource(8))
    assert single.counts == direct.counts


@pytest.mark.parametrize("m,w", [(2, 63), (3, 64), (5, 64)])
def test_report_totals_beyond_63_bits(m, w):
    counts = bucket_counts(m, w)
    q, r = count_spread(m, w)
    report = bias_report(counts, m, w)
    assert sum(report.count_histogram.values()) == m
    assert report.ratio == (Fraction(q + 1, q) if r else 1)
    assert sum(c * f for c, f in report.count_histogram.items()) == 2 ** w
