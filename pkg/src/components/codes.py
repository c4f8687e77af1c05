"""
Binary code representations and Hamming kernels.

Bit numbering is shared by every other module:
    - bit 0 is the most significant bit of the canonical hex rendering
    - LongCode word j holds bits [64j, 64j+64), ShortCode subcode j holds bits [16j, 16j+16)

Scalar kernels work on python ints (`int.bit_count`) and are the reference.
The `*_rows` helpers are the numpy versions the index runs on whole corpora.
"""

import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Sequence, Tuple, Union

import numpy as np

from src.exception import CodeParseError, RadiusError


LONG_BITS = 256
SHORT_BITS = 64
WORD_BITS = 64
SUBCODE_BITS = 16
NUM_WORDS = LONG_BITS // WORD_BITS          # 4 re-ranking words r_0..r_3
NUM_SUBCODES = SHORT_BITS // SUBCODE_BITS   # 4 filtering subcodes f_0..f_3
NUM_LONG_SUBCODES = LONG_BITS // SUBCODE_BITS
SUBCODE_SPACE = 1 << SUBCODE_BITS
MAX_RADIUS = SUBCODE_BITS

MASK64 = (1 << 64) - 1
MASK16 = (1 << 16) - 1

LONG_HEX_LEN = LONG_BITS // 4
SHORT_HEX_LEN = SHORT_BITS // 4

Subcode16 = int
HammingDistance = int

_HEX_CHAR = re.compile(r"[^0-9a-fA-F]")


@dataclass(frozen=True)
class LongCode:
    """256-bit re-ranking code held as four unsigned 64-bit words."""

    words: Tuple[int, int, int, int]

    def __post_init__(self) -> None:
        words = tuple(int(w) for w in self.words)
        if len(words) != NUM_WORDS or any(w < 0 or w > MASK64 for w in words):
            raise ValueError("LongCode needs exactly four unsigned 64-bit words")
        object.__setattr__(self, "words", words)

    @classmethod
    def from_int(cls, value: int) -> "LongCode":
        return cls(tuple((value >> (WORD_BITS * (NUM_WORDS - 1 - j))) & MASK64 for j in range(NUM_WORDS)))

    @classmethod
    def from_hex(cls, text: str) -> "LongCode":
        return _expect(parse_hex(text), cls, LONG_HEX_LEN)

    def to_int(self) -> int:
        value = 0
        for w in self.words:
            value = (value << WORD_BITS) | w
        return value

    def to_hex(self) -> str:
        return format_hex(self)

    def bit(self, position: int) -> int:
        return (self.to_int() >> (LONG_BITS - 1 - position)) & 1

    def flip(self, *positions: int) -> "LongCode":
        value = self.to_int()
        for p in positions:
            value ^= 1 << (LONG_BITS - 1 - p)
        return LongCode.from_int(value)

    def complement(self) -> "LongCode":
        return LongCode(tuple(w ^ MASK64 for w in self.words))

    def subcodes16(self) -> Tuple[int, ...]:
        """The sixteen 16-bit slices used by the long-code filter."""
        value = self.to_int()
        return tuple(
            (value >> (LONG_BITS - SUBCODE_BITS * (k + 1))) & MASK16 for k in range(NUM_LONG_SUBCODES)
        )


@dataclass(frozen=True)
class ShortCode:
    """64-bit filtering code held as four unsigned 16-bit subcodes."""

    subcodes: Tuple[int, int, int, int]

    def __post_init__(self) -> None:
        subcodes = tuple(int(s) for s in self.subcodes)
        if len(subcodes) != NUM_SUBCODES or any(s < 0 or s > MASK16 for s in subcodes):
            raise ValueError("ShortCode needs exactly four unsigned 16-bit subcodes")
        object.__setattr__(self, "subcodes", subcodes)

    @classmethod
    def from_int(cls, value: int) -> "ShortCode":
        return recompose_short(
            tuple((value >> (SUBCODE_BITS * (NUM_SUBCODES - 1 - j))) & MASK16 for j in range(NUM_SUBCODES))
        )

    @classmethod
    def from_hex(cls, text: str) -> "ShortCode":
        return _expect(parse_hex(text), cls, SHORT_HEX_LEN)

    def to_int(self) -> int:
        value = 0
        for s in self.subcodes:
            value = (value << SUBCODE_BITS) | s
        return value

    def to_hex(self) -> str:
        return format_hex(self)

    def bit(self, position: int) -> int:
        return (self.to_int() >> (SHORT_BITS - 1 - position)) & 1

    def flip(self, *positions: int) -> "ShortCode":
        value = self.to_int()
        for p in positions:
            value ^= 1 << (SHORT_BITS - 1 - p)
        return ShortCode.from_int(value)


Code = Union[LongCode, ShortCode]


# ===== DISTANCE KERNELS =====#

def hamming16(a: Subcode16, b: Subcode16) -> HammingDistance:
    return (a ^ b).bit_count()


def hamming64(a: ShortCode, b: ShortCode) -> HammingDistance:
    return sum(hamming16(x, y) for x, y in zip(a.subcodes, b.subcodes))


def hamming256(a: LongCode, b: LongCode) -> HammingDistance:
    return sum((x ^ y).bit_count() for x, y in zip(a.words, b.words))


def subcode_score(query_word: int, doc_word: int) -> int:
    """Per-word score of the stored `hd64` script: 64 minus the word distance."""
    return WORD_BITS - ((query_word ^ doc_word) & MASK64).bit_count()


# ===== HAMMING BALLS =====#

def check_radius(d: int) -> int:
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or not 0 <= d <= MAX_RADIUS:
        raise RadiusError(f"radius must be an integer in [0, {MAX_RADIUS}], got {d!r}")
    return int(d)


@lru_cache(maxsize=None)
def hamming_ball_masks(d: int, bits: int = SUBCODE_BITS) -> Tuple[int, ...]:
    """All `bits`-wide XOR masks of weight <= d, ascending."""
    check_radius(d)
    masks = [0]
    for weight in range(1, min(d, bits) + 1):
        for flips in combinations(range(bits), weight):
            masks.append(sum(1 << f for f in flips))
    return tuple(sorted(masks))


def ball_size(d: int) -> int:
    return len(hamming_ball_masks(d))


def enumerate_neighbors(c: Subcode16, d: int) -> list:
    """Every 16-bit value within Hamming distance d of c (c included), ascending."""
    check_radius(d)
    if not 0 <= c <= MASK16:
        raise ValueError(f"subcode out of range: {c}")
    return sorted(c ^ m for m in hamming_ball_masks(d))


# ===== SUBCODE DECOMPOSITION =====#

def decompose_short(c: ShortCode) -> Tuple[int, int, int, int]:
    return c.subcodes


def recompose_short(subcodes: Sequence[int]) -> ShortCode:
    return ShortCode(tuple(subcodes))


# ===== HEX TEXT FORMS =====#

def parse_hex(text: str) -> Code:
    """64 hex chars parse to a LongCode, 16 to a ShortCode; case-insensitive."""
    bad = _HEX_CHAR.search(text)
    if bad is not None:
        raise CodeParseError(f"non-hex character {bad.group()!r}", bad.start())
    if len(text) == LONG_HEX_LEN:
        return LongCode.from_int(int(text, 16))
    if len(text) == SHORT_HEX_LEN:
        return ShortCode.from_int(int(text, 16))
    position = min(len(text), LONG_HEX_LEN)
    raise CodeParseError(
        f"expected {SHORT_HEX_LEN} or {LONG_HEX_LEN} hex characters, got {len(text)}", position
    )


def format_hex(code: Code) -> str:
    if isinstance(code, LongCode):
        return f"{code.to_int():0{LONG_HEX_LEN}x}"
    return f"{code.to_int():0{SHORT_HEX_LEN}x}"


def _expect(code: Code, kind: type, length: int) -> Code:
    if not isinstance(code, kind):
        raise CodeParseError(f"expected {length} hex characters for a {kind.__name__}", length)
    return code


# ===== VECTORISED KERNELS =====#

def long_words_array(codes: Sequence[LongCode]) -> np.ndarray:
    """(n, 4) uint64 matrix of long-code words."""
    return np.array([c.words for c in codes], dtype=np.uint64).reshape(-1, NUM_WORDS)


def short_subcodes_array(codes: Sequence[ShortCode]) -> np.ndarray:
    return np.array([c.subcodes for c in codes], dtype=np.uint16).reshape(-1, NUM_SUBCODES)


def words_from_hex(hex_codes: Sequence[str]) -> np.ndarray:
    """Already-validated 64-char hex strings to an (n, 4) uint64 matrix."""
    raw = bytes.fromhex("".join(hex_codes))
    return np.frombuffer(raw, dtype=">u8").astype(np.uint64).reshape(-1, NUM_WORDS)


def hamming_rows(rows: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Row-wise Hamming distance of an (n, w) uint64 matrix to a (w,) query."""
    rows = np.asarray(rows, dtype=np.uint64)
    if rows.ndim == 1:
        return np.bitwise_count(rows ^ np.uint64(query)).astype(np.int64)
    return np.bitwise_count(rows ^ np.asarray(query, dtype=np.uint64)).sum(axis=1, dtype=np.int64)


def pack_short(subcodes: np.ndarray) -> np.ndarray:
    """(n, 4) uint16 subcodes to (n,) uint64 words, subcode 0 in the high bits."""
    subcodes = np.asarray(subcodes, dtype=np.uint64).reshape(-1, NUM_SUBCODES)
    packed = np.zeros(len(subcodes), dtype=np.uint64)
    for j in range(NUM_SUBCODES):
        packed |= subcodes[:, j] << np.uint64(SUBCODE_BITS * (NUM_SUBCODES - 1 - j))
    return packed


def long_subcodes16(words: np.ndarray) -> np.ndarray:
    """(n, 4) uint64 words to their (n, 16) uint16 slices, slice k = bits [16k, 16k+16)."""
    words = np.ascontiguousarray(words, dtype=np.uint64).reshape(-1, NUM_WORDS)
    return words.astype(">u8").view(">u2").astype(np.uint16).reshape(-1, NUM_LONG_SUBCODES)
