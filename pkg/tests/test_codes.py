import numpy as np
import pytest
from hypothesis import given, strategies as st

from src.exception import CodeParseError, RadiusError
from src.components.codes import (
    LONG_BITS,
    MASK64,
    LongCode,
    ShortCode,
    ball_size,
    check_radius,
    decompose_short,
    enumerate_neighbors,
    format_hex,
    hamming16,
    hamming64,
    hamming256,
    hamming_rows,
    long_subcodes16,
    pack_short,
    parse_hex,
    recompose_short,
    subcode_score,
    words_from_hex,
)

from tests.conftest import random_long, random_words

long_ints = st.integers(min_value=0, max_value=2**256 - 1)
short_ints = st.integers(min_value=0, max_value=2**64 - 1)


def test_bit_zero_is_most_significant_hex_bit():
    code = LongCode.from_hex("8" + "0" * 63)
    assert code.bit(0) == 1
    assert code.words == (1 << 63, 0, 0, 0)
    assert all(code.bit(p) == 0 for p in range(1, LONG_BITS))


def test_word_and_subcode_layout():
    code = LongCode.from_hex("0123456789abcdef" + "f" * 16 + "0" * 16 + "fedcba9876543210")
    assert code.words == (0x0123456789ABCDEF, MASK64, 0, 0xFEDCBA9876543210)
    assert code.subcodes16()[:4] == (0x0123, 0x4567, 0x89AB, 0xCDEF)
    short = ShortCode.from_hex("0123456789ABCDEF")
    assert decompose_short(short) == (0x0123, 0x4567, 0x89AB, 0xCDEF)
    assert recompose_short((0x0123, 0x4567, 0x89AB, 0xCDEF)) == short


def test_format_hex_is_lowercase_and_padded():
    assert format_hex(LongCode.from_int(1)) == "0" * 63 + "1"
    assert ShortCode.from_hex("ABCDEF0123456789").to_hex() == "abcdef0123456789"


def test_parse_hex_dispatches_on_length():
    assert isinstance(parse_hex("0" * 64), LongCode)
    assert isinstance(parse_hex("0" * 16), ShortCode)


def test_parse_hex_reports_non_hex_position():
    with pytest.raises(CodeParseError) as err:
        parse_hex("0" * 10 + "g" + "0" * 53)
    assert err.value.position == 10


def test_parse_hex_reports_wrong_length():
    with pytest.raises(CodeParseError) as err:
        parse_hex("0" * 63)
    assert err.value.position == 63
    with pytest.raises(CodeParseError) as err:
        parse_hex("0" * 65)
    assert err.value.position == 64


def test_from_hex_rejects_the_other_code_length():
    with pytest.raises(CodeParseError):
        LongCode.from_hex("0" * 16)
    with pytest.raises(CodeParseError):
        ShortCode.from_hex("0" * 64)


@given(long_ints)
def test_hex_text_round_trip(value):
    code = LongCode.from_int(value)
    assert LongCode.from_hex(code.to_hex()) == code
    assert code.to_int() == value


def test_code_constructors_validate_ranges():
    with pytest.raises(ValueError):
        LongCode((0, 0, 0))
    with pytest.raises(ValueError):
        ShortCode((0, 0, 0, 1 << 16))


@given(long_ints, long_ints)
def test_hamming256_matches_popcount_of_xor(a, b):
    assert hamming256(LongCode.from_int(a), LongCode.from_int(b)) == bin(a ^ b).count("1")


@given(long_ints)
def test_hamming_identities(value):
    code = LongCode.from_int(value)
    assert hamming256(code, code) == 0
    assert hamming256(code, code.complement()) == LONG_BITS
    assert hamming256(code, code.flip(0, 17, 255)) == 3


@given(long_ints, long_ints, long_ints)
def test_hamming256_is_a_metric(a, b, c):
    x, y, z = LongCode.from_int(a), LongCode.from_int(b), LongCode.from_int(c)
    assert hamming256(x, y) == hamming256(y, x) >= 0
    assert (hamming256(x, y) == 0) == (a == b)
    assert hamming256(x, z) <= hamming256(x, y) + hamming256(y, z)


def test_triangle_inequality_on_nearby_triples(rng):
    for _ in range(2_000):
        x = random_long(rng)
        y = x.flip(*(int(p) for p in rng.choice(LONG_BITS, size=int(rng.integers(0, 20)), replace=False)))
        z = y.flip(*(int(p) for p in rng.choice(LONG_BITS, size=int(rng.integers(0, 20)), replace=False)))
        assert hamming256(x, z) <= hamming256(x, y) + hamming256(y, z)


@given(short_ints, short_ints)
def test_hamming64_is_sum_of_subcode_distances(a, b):
    x, y = ShortCode.from_int(a), ShortCode.from_int(b)
    assert hamming64(x, y) == sum(hamming16(s, t) for s, t in zip(x.subcodes, y.subcodes))


def test_word_scores_sum_to_long_similarity(rng):
    a, b = random_words(rng, 10_000), random_words(rng, 10_000)
    for row in range(0, 10_000, 97):
        x = LongCode(tuple(int(w) for w in a[row]))
        y = LongCode(tuple(int(w) for w in b[row]))
        assert sum(subcode_score(p, q) for p, q in zip(x.words, y.words)) == LONG_BITS - hamming256(x, y)
    scores = (64 - np.bitwise_count(a ^ b).astype(np.int64)).sum(axis=1)
    distances = np.array([hamming_rows(a[row], b[row]).sum() for row in range(0, 10_000, 101)])
    assert np.array_equal(scores[::101], LONG_BITS - distances)


def test_check_radius_bounds():
    assert check_radius(0) == 0
    assert check_radius(16) == 16
    for bad in (-1, 17, 2.0, True):
        with pytest.raises(RadiusError):
            check_radius(bad)


def test_ball_sizes():
    assert ball_size(0) == 1
    assert ball_size(1) == 17
    assert ball_size(2) == 137
    assert ball_size(16) == 65_536


@given(st.integers(min_value=0, max_value=0xFFFF), st.integers(min_value=0, max_value=4))
def test_enumerate_neighbors_is_the_hamming_ball(c, d):
    neighbors = enumerate_neighbors(c, d)
    assert neighbors == sorted(neighbors)
    assert len(neighbors) == ball_size(d)
    assert c in neighbors
    assert all(hamming16(c, v) <= d for v in neighbors)


def test_enumerate_neighbors_is_symmetric():
    for c in (0, 1, 0xBEEF, 0xFFFF):
        for v in enumerate_neighbors(c, 2):
            assert c in enumerate_neighbors(v, 2)


def test_hamming_rows_matches_scalar_kernel(rng):
    words = random_words(rng, 200)
    query = random_words(rng, 1)[0]
    q_code = LongCode(tuple(int(w) for w in query))
    distances = hamming_rows(words, query)
    for row in range(200):
        assert distances[row] == hamming256(LongCode(tuple(int(w) for w in words[row])), q_code)


def test_pack_short_and_long_subcodes16(rng):
    words = random_words(rng, 20)
    slices = long_subcodes16(words)
    assert slices.shape == (20, 16)
    for row in range(20):
        code = LongCode(tuple(int(w) for w in words[row]))
        assert tuple(int(s) for s in slices[row]) == code.subcodes16()
        assert int(pack_short(slices[row:row + 1, :4])[0]) == code.words[0]


def test_words_from_hex_matches_scalar_parse():
    texts = ["0123456789abcdef" * 4, "f" * 64]
    words = words_from_hex(texts)
    assert [tuple(int(w) for w in row) for row in words] == [LongCode.from_hex(t).words for t in texts]
