"""
Module for deriving the 64-bit filtering code from the 256-bit code.

Steps (ShortCodePartitioning):
    1. load_sample: read a codes file of long codes
    2. compute_correlations: |Pearson| correlation between every pair of bit positions
    3. partition: Kernighan-Lin bisection, 256 -> 2 x 128 -> 4 x 64
    4. save_extractor: the 16 lowest positions of each group, written as `positions=...`

Minimising the cut weight keeps correlated bits inside one group, so the four
subcodes built from different groups are as independent as the sample allows.
"""

import io
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import FrozenSet, Iterable, List, Sequence, Tuple, Union

import numpy as np
from dotenv import dotenv_values

from src.logger import logging
from src.exception import CustomException, HamSearchError, PartitionError, SampleError
from src.components.codes import (
    LONG_BITS,
    NUM_SUBCODES,
    SHORT_BITS,
    SUBCODE_BITS,
    WORD_BITS,
    LongCode,
    ShortCode,
    long_words_array,
)
from src.components.documents import read_codes_file


GROUP_SIZE = LONG_BITS // NUM_SUBCODES
KL_TOLERANCE = 1e-9
CORRELATION_CHUNK_ROWS = 65_536

Seed = Union[int, np.random.SeedSequence, None]


@dataclass(frozen=True)
class CorrelationGraph:
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("correlation weights must be a square matrix")
        if not np.allclose(w, w.T):
            raise ValueError("correlation weights must be symmetric")
        if (w < 0).any() or (w > 1).any():
            raise ValueError("correlation weights must lie in [0, 1]")
        w = w.copy()
        np.fill_diagonal(w, 0.0)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def zeros(cls, size: int = LONG_BITS) -> "CorrelationGraph":
        return cls(np.zeros((size, size)))


@dataclass(frozen=True)
class BitPartition:
    groups: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        groups = tuple(tuple(sorted(int(p) for p in g)) for g in self.groups)
        members = [p for g in groups for p in g]
        if len(groups) != NUM_SUBCODES or any(len(g) != GROUP_SIZE for g in groups):
            raise PartitionError(f"a bit partition needs {NUM_SUBCODES} groups of {GROUP_SIZE} positions")
        if sorted(members) != list(range(LONG_BITS)):
            raise PartitionError("partition groups must be disjoint and cover every bit position")
        object.__setattr__(self, "groups", groups)


@dataclass(frozen=True)
class ShortCodeExtractor:
    """Short-code bit i is long-code bit positions[i]."""

    positions: Tuple[int, ...]

    def __post_init__(self) -> None:
        positions = tuple(int(p) for p in self.positions)
        if len(positions) != SHORT_BITS:
            raise PartitionError(f"an extractor needs {SHORT_BITS} positions, got {len(positions)}")
        if len(set(positions)) != SHORT_BITS or any(not 0 <= p < LONG_BITS for p in positions):
            raise PartitionError(f"extractor positions must be distinct and within [0, {LONG_BITS})")
        object.__setattr__(self, "positions", positions)

    @classmethod
    def prefix(cls) -> "ShortCodeExtractor":
        """Takes long-code bits 0..63 unchanged."""
        return cls(tuple(range(SHORT_BITS)))

    def extract(self, code: LongCode) -> ShortCode:
        return extract_short(self, code)

    def extract_rows(self, long_words: np.ndarray) -> np.ndarray:
        """(n, 4) uint64 long words to (n, 4) uint16 short subcodes."""
        words = np.asarray(long_words, dtype=np.uint64).reshape(-1, LONG_BITS // WORD_BITS)
        out = np.zeros((len(words), NUM_SUBCODES), dtype=np.uint16)
        one = np.uint64(1)
        for i, p in enumerate(self.positions):
            w, offset = divmod(p, WORD_BITS)
            bit = (words[:, w] >> np.uint64(WORD_BITS - 1 - offset)) & one
            out[:, i // SUBCODE_BITS] |= (bit << np.uint64(SUBCODE_BITS - 1 - i % SUBCODE_BITS)).astype(np.uint16)
        return out

    def to_text(self) -> str:
        return "positions=" + ",".join(str(p) for p in self.positions) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ShortCodeExtractor":
        values = dotenv_values(stream=io.StringIO(text))
        raw = values.get("positions")
        if not raw:
            raise PartitionError("extractor file has no `positions=` line")
        try:
            return cls(tuple(int(p) for p in raw.split(",")))
        except ValueError as e:
            raise PartitionError(f"extractor positions must be decimal integers: {e}") from e

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ShortCodeExtractor":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


# ===== CORRELATIONS =====#

def unpack_bits(long_words: np.ndarray) -> np.ndarray:
    """(n, 4) uint64 words to an (n, 256) uint8 bit matrix, column p = bit position p."""
    words = np.ascontiguousarray(long_words, dtype=np.uint64).reshape(-1, LONG_BITS // WORD_BITS)
    return np.unpackbits(words.astype(">u8").view(np.uint8), axis=1)


def compute_bit_correlations(
    sample: Union[Sequence[LongCode], np.ndarray], chunk_rows: int = CORRELATION_CHUNK_ROWS
) -> CorrelationGraph:
    words = sample if isinstance(sample, np.ndarray) else long_words_array(sample)
    n = len(words)
    if n < 2:
        raise SampleError(f"bit correlations need at least 2 codes, got {n}")

    # float32 sums of 0/1 bits stay exact within one chunk
    ones = np.zeros(LONG_BITS, dtype=np.float64)
    gram = np.zeros((LONG_BITS, LONG_BITS), dtype=np.float64)
    for start in range(0, n, chunk_rows):
        bits = unpack_bits(words[start:start + chunk_rows]).astype(np.float32)
        ones += bits.sum(axis=0, dtype=np.float64)
        gram += bits.T @ bits

    mean = ones / n
    cov = gram / n - np.outer(mean, mean)
    std = np.sqrt(np.clip(mean - mean * mean, 0.0, None))
    denom = np.outer(std, std)
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.where(denom > 0, cov / denom, 0.0)

    constant = int((std == 0).sum())
    if constant:
        logging.warning(f"{constant} bit positions are constant across the sample; their weights are 0")

    weights = np.clip(np.abs(corr), 0.0, 1.0)
    weights = (weights + weights.T) / 2
    np.fill_diagonal(weights, 0.0)
    return CorrelationGraph(weights)


# ===== KERNIGHAN-LIN =====#

def cut_weight(graph: CorrelationGraph, set_a: Iterable[int], set_b: Iterable[int]) -> float:
    a, b = list(set_a), list(set_b)
    if not a or not b:
        return 0.0
    return float(graph.weights[np.ix_(a, b)].sum())


def _side_cut(weights: np.ndarray, side: np.ndarray) -> float:
    return float(weights[np.ix_(~side, side)].sum())


def kl_refine(weights: np.ndarray, side: np.ndarray, max_passes: int = 100) -> Tuple[np.ndarray, List[float]]:
    """
    Kernighan-Lin passes over a two-way split.

    `side` marks set B with True. Each pass swaps every pair once (best gain first,
    swapped nodes locked) and keeps the prefix of swaps with the largest cumulative gain.
    Stops when a pass gains nothing. Returns the final side vector and the cut weight
    before the first pass and after every applied pass.
    """
    w = np.asarray(weights, dtype=np.float64)
    side = np.asarray(side, dtype=bool).copy()
    history = [_side_cut(w, side)]
    half = int(side.sum())
    if half == 0 or half == len(side):
        return side, history

    for _ in range(max_passes):
        a_nodes = np.flatnonzero(~side)
        b_nodes = np.flatnonzero(side)
        same = side[:, None] == side[None, :]
        d = np.where(same, -w, w).sum(axis=1)
        w_ab = w[np.ix_(a_nodes, b_nodes)]
        a_free = np.ones(len(a_nodes), dtype=bool)
        b_free = np.ones(len(b_nodes), dtype=bool)

        gains, swaps = [], []
        for _ in range(min(len(a_nodes), len(b_nodes))):
            g = d[a_nodes][:, None] + d[b_nodes][None, :] - 2 * w_ab
            g = np.where(a_free[:, None] & b_free[None, :], g, -np.inf)
            i, j = np.unravel_index(int(np.argmax(g)), g.shape)
            a, b = a_nodes[i], b_nodes[j]
            gains.append(g[i, j])
            swaps.append((a, b))
            a_free[i] = False
            b_free[j] = False
            d[a_nodes] += 2 * w[a_nodes, a] - 2 * w[a_nodes, b]
            d[b_nodes] += 2 * w[b_nodes, b] - 2 * w[b_nodes, a]

        cumulative = np.cumsum(gains)
        best = int(np.argmax(cumulative))
        if cumulative[best] <= KL_TOLERANCE:
            break
        for a, b in swaps[: best + 1]:
            side[a] = True
            side[b] = False
        history.append(_side_cut(w, side))
    return side, history


def random_equal_split(n: int, rng: np.random.Generator) -> np.ndarray:
    side = np.zeros(n, dtype=bool)
    side[rng.permutation(n)[n // 2:]] = True
    return side


def kl_bipartition(
    graph: CorrelationGraph, positions: Iterable[int], seed: Seed = 0, restarts: int = 1
) -> Tuple[FrozenSet[int], FrozenSet[int]]:
    """Equal-size bipartition of `positions` minimising cut weight; the set holding the lowest position comes first."""
    nodes = np.array(sorted(set(int(p) for p in positions)), dtype=np.int64)
    if len(nodes) % 2:
        raise PartitionError(f"Kernighan-Lin needs an even number of positions, got {len(nodes)}")
    if len(nodes) == 0:
        return frozenset(), frozenset()

    sub = graph.weights[np.ix_(nodes, nodes)]
    best_side, best_cut = None, np.inf
    for child in _seed_sequence(seed).spawn(max(1, restarts)):
        side, history = kl_refine(sub, random_equal_split(len(nodes), np.random.default_rng(child)))
        if history[-1] < best_cut - KL_TOLERANCE:
            best_side, best_cut = side, history[-1]

    set_a = frozenset(int(p) for p in nodes[~best_side])
    set_b = frozenset(int(p) for p in nodes[best_side])
    return (set_a, set_b) if min(set_a) < min(set_b) else (set_b, set_a)


def partition_bits(graph: CorrelationGraph, seed: Seed = 0, restarts: int = 1) -> BitPartition:
    """Recursive bisection: 256 -> 128 + 128 -> four groups of 64, ordered by lowest position."""
    if graph.size != LONG_BITS:
        raise PartitionError(f"expected a {LONG_BITS}-node correlation graph, got {graph.size}")
    top, left, right = _seed_sequence(seed).spawn(3)
    half_a, half_b = kl_bipartition(graph, range(LONG_BITS), top, restarts)
    groups = [*kl_bipartition(graph, half_a, left, restarts), *kl_bipartition(graph, half_b, right, restarts)]
    groups.sort(key=min)
    partition = BitPartition(tuple(tuple(sorted(g)) for g in groups))
    cross = sum(
        cut_weight(graph, partition.groups[i], partition.groups[j])
        for i in range(NUM_SUBCODES) for j in range(i + 1, NUM_SUBCODES)
    )
    logging.info(f"Bit partition computed: cross-group correlation weight {cross:.4f}")
    return partition


def _seed_sequence(seed: Seed) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


# ===== EXTRACTION =====#

def build_extractor(partition: BitPartition) -> ShortCodeExtractor:
    per_group = SHORT_BITS // NUM_SUBCODES
    return ShortCodeExtractor(tuple(p for group in partition.groups for p in sorted(group)[:per_group]))


def extract_short(extractor: ShortCodeExtractor, code: LongCode) -> ShortCode:
    value = code.to_int()
    short = 0
    for p in extractor.positions:
        short = (short << 1) | ((value >> (LONG_BITS - 1 - p)) & 1)
    return ShortCode.from_int(short)


# ===== PIPELINE =====#

@dataclass
class PartitioningConfig:
    """
    Attributes:
        sample_path: codes file whose long codes are the correlation sample
        out_path: where the extractor file is written
        seed: seed for the initial Kernighan-Lin splits
        restarts: random initial splits tried per bisection (best cut kept)
    """

    sample_path: Path = None
    out_path: Path = None
    seed: int = 0
    restarts: int = 1

    def __post_init__(self) -> None:
        self.sample_path = Path(self.sample_path) if self.sample_path is not None else None
        self.out_path = Path(self.out_path) if self.out_path is not None else None
        if self.restarts < 1:
            raise PartitionError("restarts must be at least 1")


class ShortCodePartitioning:
    def __init__(self, config: PartitioningConfig) -> None:
        self.config = config

    def load_sample(self) -> np.ndarray:
        logging.info("Partitioning Step 1: loading the correlation sample.....")
        try:
            batch = read_codes_file(self.config.sample_path)
        except (HamSearchError, FileNotFoundError):
            raise
        except Exception as e:
            raise CustomException(e, sys) from e
        logging.info(f"Partitioning Step 1: {len(batch)} codes loaded. STEP COMPLETED")
        return batch.long_words

    def compute_correlations(self, long_words: np.ndarray) -> CorrelationGraph:
        logging.info("Partitioning Step 2: computing bit correlations.....")
        graph = compute_bit_correlations(long_words)
        off_diag = graph.weights[~np.eye(graph.size, dtype=bool)]
        logging.info(f"Partitioning Step 2: mean |corr| {off_diag.mean():.4f}, max {off_diag.max():.4f}. STEP COMPLETED")
        return graph

    def partition(self, graph: CorrelationGraph) -> ShortCodeExtractor:
        logging.info("Partitioning Step 3: Kernighan-Lin bisection 256 -> 4 x 64.....")
        extractor = build_extractor(partition_bits(graph, self.config.seed, self.config.restarts))
        logging.info("Partitioning Step 3: extractor built. STEP COMPLETED")
        return extractor

    def save_extractor(self, extractor: ShortCodeExtractor) -> Path:
        try:
            extractor.save(self.config.out_path)
        except Exception as e:
            raise CustomException(e, sys) from e
        logging.info(f"Partitioning Step 4: extractor saved to {self.config.out_path}")
        return self.config.out_path

    def run(self) -> ShortCodeExtractor:
        graph = self.compute_correlations(self.load_sample())
        extractor = self.partition(graph)
        if self.config.out_path is not None:
            self.save_extractor(extractor)
        return extractor
