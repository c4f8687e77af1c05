"""
Seeded synthetic corpus standing in for the outputs of a trained hashing model.

Each class gets a random 256-bit centroid; every member flips each centroid bit
independently with probability p. Two members of one class therefore sit about
2*256*p*(1-p) bits apart, members of different classes about 128.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from src.logger import logging
from src.exception import ConfigError
from src.components.codes import LONG_BITS, NUM_WORDS
from src.components.documents import DocumentBatch, Labels


@dataclass
class SyntheticConfig:
    """
    Attributes:
        num_classes: number of class centroids
        codes_per_class: indexed documents drawn per class
        flip_probability: per-bit flip probability p, 0 <= p < 0.5
        queries_per_class: held-out queries drawn per class (never indexed)
        extra_labels_max: each code also gets a uniform 0..extra_labels_max random extra class labels
        seed: rng seed; identical configs give identical corpora
    """

    num_classes: int = 100
    codes_per_class: int = 1000
    flip_probability: float = 0.05
    queries_per_class: int = 0
    extra_labels_max: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.flip_probability < 0.5:
            raise ConfigError(f"flip probability must lie in [0, 0.5), got {self.flip_probability}")
        if self.num_classes < 1 or self.codes_per_class < 0 or self.queries_per_class < 0:
            raise ConfigError("class count must be positive and per-class counts non-negative")
        if self.extra_labels_max < 0:
            raise ConfigError("extra_labels_max must be non-negative")


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """(n, 256) {0,1} matrix to (n, 4) uint64 words, column 0 is the most significant bit."""
    packed = np.ascontiguousarray(np.packbits(bits.astype(np.uint8), axis=1))
    return packed.view(">u8").astype(np.uint64).reshape(-1, NUM_WORDS)


def generate_synthetic(config: SyntheticConfig) -> Tuple[DocumentBatch, DocumentBatch]:
    """Returns (documents, queries). Document ids run 0..n-1, query ids continue after them."""
    rng = np.random.default_rng(config.seed)
    p = config.flip_probability
    per_class = config.codes_per_class + config.queries_per_class
    centroids = rng.integers(0, 2, size=(config.num_classes, LONG_BITS), dtype=np.uint8)
    class_labels = [frozenset({str(c)}) for c in range(config.num_classes)]

    doc_words, query_words = [], []
    doc_labels: List[Labels] = []
    query_labels: List[Labels] = []
    for c in range(config.num_classes):
        flips = rng.random((per_class, LONG_BITS)) < p
        words = pack_bits(centroids[c] ^ flips)
        labels = _labels_for_class(c, per_class, class_labels, config, rng)
        doc_words.append(words[: config.codes_per_class])
        query_words.append(words[config.codes_per_class:])
        doc_labels.extend(labels[: config.codes_per_class])
        query_labels.extend(labels[config.codes_per_class:])

    n_docs = config.num_classes * config.codes_per_class
    n_queries = config.num_classes * config.queries_per_class
    documents = DocumentBatch(
        ids=np.arange(n_docs, dtype=np.uint64),
        long_words=np.concatenate(doc_words),
        labels=doc_labels,
    )
    queries = DocumentBatch(
        ids=np.arange(n_docs, n_docs + n_queries, dtype=np.uint64),
        long_words=np.concatenate(query_words),
        labels=query_labels,
    )
    logging.info(
        f"Synthetic corpus: {config.num_classes} classes, {n_docs} documents, {n_queries} queries, "
        f"p={p}, seed={config.seed}"
    )
    return documents, queries


def _labels_for_class(c: int, count: int, class_labels: List[Labels], config: SyntheticConfig, rng: np.random.Generator) -> List[Labels]:
    if config.extra_labels_max == 0:
        return [class_labels[c]] * count
    extras = rng.integers(0, config.extra_labels_max + 1, size=count)
    return [
        class_labels[c] | frozenset(str(x) for x in rng.choice(config.num_classes, size=min(n, config.num_classes), replace=False))
        if n else class_labels[c]
        for n in extras
    ]
