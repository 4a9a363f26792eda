import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairbits.bitstream import (N, FixedBitSource, MT19937BitSource, mt_next_u32, mt_seed,
                                mt_seed_by_array)
from fairbits.errors import ArgumentError, SourceExhaustedError

from conftest import reference_mt_outputs

MT5489_FIRST_TEN = [3499211612, 581869302, 3890346734, 3586334585, 545404204,
                    4161255391, 3922919429, 949333985, 2715962298, 1323567403]


def test_seed_leaves_cursor_at_end_of_block():
    state = mt_seed(5489)
    assert state.index == N
    assert state.key[0] == 5489
    assert state.key.size == 624


def test_first_outputs_for_default_seed():
    state = mt_seed(5489)
    assert [mt_next_u32(state) for _ in range(10)] == MT5489_FIRST_TEN


def test_ten_thousandth_output_for_default_seed():
    state = mt_seed(5489)
    for _ in range(9999):
        mt_next_u32(state)
    assert mt_next_u32(state) == 4123659995


@pytest.mark.parametrize("seed", [0, 1, 5489, 4357])
def test_first_thousand_outputs_match_reference(seed):
    state = mt_seed(seed)
    assert [mt_next_u32(state) for _ in range(1000)] == reference_mt_outputs(seed, 1000)


def test_twist_happens_once_per_block():
    state = mt_seed(5489)
    expected = reference_mt_outputs(5489, 625)
    outputs = [mt_next_u32(state) for _ in range(624)]
    assert state.twists == 1
    outputs.append(mt_next_u32(state))
    assert state.twists == 2
    assert outputs == expected


def test_same_seed_same_stream():
    a, b = mt_seed(0), mt_seed(0)
    assert [mt_next_u32(a) for _ in range(100)] == [mt_next_u32(b) for _ in range(100)]


def test_outputs_are_32_bit():
    state = mt_seed(12345)
    assert all(0 <= mt_next_u32(state) < 2 ** 32 for _ in range(2000))


@pytest.mark.parametrize("seed", [0, 5489, 2 ** 32 - 1])
def test_seed_by_array_matches_cpython_int_seeding(seed):
    # random.seed(int) runs init_by_array on the 32-bit chunks of the seed
    ours = mt_seed_by_array([seed])
    theirs = random.Random(seed)
    assert [mt_next_u32(ours) for _ in range(700)] == [theirs.getrandbits(32) for _ in range(700)]


def test_seed_by_array_rejects_empty_key():
    with pytest.raises(ArgumentError):
        mt_seed_by_array([])


def test_fixed_source_reads_msb_first():
    source = FixedBitSource([1, 0, 1])
    assert source.next_bits(3) == 5
    assert source.bits_consumed == 3


def test_zero_bits_consume_nothing():
    for source in (FixedBitSource([]), MT19937BitSource(1)):
        assert source.next_bits(0) == 0
        assert source.bits_consumed == 0


def test_negative_bit_count_is_an_error():
    with pytest.raises(ArgumentError):
        FixedBitSource([1]).next_bits(-1)


def test_fixed_source_signals_exhaustion():
    source = FixedBitSource([1, 1])
    with pytest.raises(SourceExhaustedError):
        source.next_bits(3)
    assert source.bits_consumed == 0
    assert source.next_bits(2) == 3


def test_fixed_source_rejects_non_bits():
    with pytest.raises(ArgumentError):
        FixedBitSource([0, 2])


def test_from_int_round_trips_width():
    assert FixedBitSource.from_int(5, 4).bits == [0, 1, 0, 1]
    assert FixedBitSource.from_int(0, 0).bits == []


def test_mt_source_whole_word():
    assert MT19937BitSource(5489).next_bits(32) == 3499211612


def test_buffered_bits_span_words():
    words = reference_mt_outputs(5489, 2)
    source = MT19937BitSource(5489)
    assert source.next_bits(20) == words[0] >> 12
    assert source.next_bits(20) == ((words[0] & 0xFFF) << 8) | (words[1] >> 24)
    assert source.words_drawn == 2


def test_discard_remainder_starts_each_request_on_a_new_word():
    words = reference_mt_outputs(5489, 4)
    source = MT19937BitSource(5489, discard_remainder=True)
    assert source.next_bits(3) == words[0] >> 29
    assert source.next_bits(40) == ((words[1] << 32) | words[2]) >> 24
    assert source.words_drawn == 3
    assert source.bits_consumed == 43


@given(st.lists(st.integers(min_value=0, max_value=100), max_size=30))
@settings(max_examples=50, deadline=None)
def test_bits_consumed_is_the_sum_of_requests(ks):
    source = MT19937BitSource(7)
    for k in ks:
        assert 0 <= source.next_bits(k) < 2 ** k
    assert source.bits_consumed == sum(ks)


@given(st.integers(min_value=0, max_value=90), st.integers(min_value=0, max_value=90),
       st.integers(min_value=0, max_value=2 ** 32 - 1))
@settings(max_examples=100, deadline=None)
def test_split_reads_splice_into_one_read(a, b, seed):
    split, whole = MT19937BitSource(seed), MT19937BitSource(seed)
    x = split.next_bits(a)
    y = split.next_bits(b)
    assert (x << b) | y == whole.next_bits(a + b)
