import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmemcheck.bits import (
    as_bits,
    bits_to_int,
    bits_to_str,
    hamming_distance,
    int_to_bits,
    random_bits,
)


class TestAsBits:
    def test_from_string(self):
        got = as_bits("0101")
        assert got.dtype == np.uint8
        assert got.tolist() == [0, 1, 0, 1]

    def test_from_list_and_array(self):
        assert as_bits([1, 0, 1]).tolist() == [1, 0, 1]
        arr = np.array([1, 0], dtype=np.int64)
        assert as_bits(arr).tolist() == [1, 0]

    def test_from_bool_array(self):
        assert as_bits(np.array([True, False])).tolist() == [1, 0]

    def test_returns_fresh_copy(self):
        src = np.array([1, 0, 1], dtype=np.uint8)
        out = as_bits(src)
        out[0] = 0
        assert src[0] == 1

    @pytest.mark.parametrize("bad", ["", "012", "ab"])
    def test_rejects_bad_strings(self, bad):
        with pytest.raises(ValueError):
            as_bits(bad)

    @pytest.mark.parametrize("bad", [[], [2], [0, -1], [[0, 1]], [0.5]])
    def test_rejects_bad_sequences(self, bad):
        with pytest.raises(ValueError):
            as_bits(bad)

    def test_rejects_uint8_out_of_range(self):
        with pytest.raises(ValueError):
            as_bits(np.array([0, 7], dtype=np.uint8))

    def test_error_mentions_name(self):
        with pytest.raises(ValueError, match="message"):
            as_bits("21", name="message")


class TestIntConversions:
    def test_msb_first(self):
        # first entry is the most significant bit
        assert bits_to_int(as_bits("101")) == 5
        assert int_to_bits(5, 3).tolist() == [1, 0, 1]

    def test_width_bounds(self):
        with pytest.raises(ValueError):
            int_to_bits(8, 3)
        with pytest.raises(ValueError):
            int_to_bits(-1, 3)

    @given(st.integers(min_value=0, max_value=2**12 - 1))
    def test_round_trip(self, value):
        assert bits_to_int(int_to_bits(value, 12)) == value

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=16))
    def test_str_round_trip(self, bits):
        s = bits_to_str(as_bits(bits))
        assert as_bits(s).tolist() == bits


class TestHamming:
    def test_known_distance(self):
        assert hamming_distance(as_bits("0101"), as_bits("0110")) == 2

    def test_zero_on_equal(self):
        a = as_bits("110")
        assert hamming_distance(a, a) == 0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            hamming_distance(as_bits("01"), as_bits("011"))

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=32))
    def test_complement_is_full_length(self, bits):
        a = as_bits(bits)
        assert hamming_distance(a, 1 - a) == len(bits)


def test_random_bits_shape_and_range(rng):
    out = random_bits(17, rng)
    assert out.shape == (17,)
    assert out.dtype == np.uint8
    assert set(np.unique(out)) <= {0, 1}


def test_random_bits_deterministic():
    a = random_bits(64, np.random.default_rng(3))
    b = random_bits(64, np.random.default_rng(3))
    assert np.array_equal(a, b)
