"""
Module for the two-stage Hamming search index.

Stage 1 (coarse filter): multi-index hashing over 16-bit subcodes. A document is a
candidate when at least one of its subcodes lies inside the neighbor-table entry of the
query's subcode in the same field. With m fields and radius d every document within
m*(d+1)-1 bits of the query is a candidate.
Stage 2 (re-rank): exact Hamming distance on the re-ranking code, ascending distance,
ties by ascending document id.

Search modes:
    short: 4 x 16-bit filter on the short code, re-rank on the 64-bit short code
    twostage: 4 x 16-bit filter on the short code, re-rank on the 256-bit long code
    long: 16 x 16-bit filter on the long code, re-rank on the 256-bit long code

Ingestion builds a complete new snapshot under a write lock and publishes it with a
single reference swap. A search reads one snapshot from start to finish, so it never
sees part of a batch.
"""

import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from src.logger import logging
from src.exception import (
    CodeMismatchError,
    DuplicateDocumentError,
    InvalidQueryError,
    ModeUnavailableError,
)
from src.components.codes import (
    LONG_BITS,
    NUM_SUBCODES,
    NUM_WORDS,
    SHORT_BITS,
    SUBCODE_SPACE,
    LongCode,
    ShortCode,
    check_radius,
    hamming_rows,
    long_subcodes16,
    pack_short,
    parse_hex,
)
from src.components.documents import DocumentBatch, DocumentRecord, Labels
from src.components.neighbors import NeighborTable, build_neighbor_table
from src.components.partitioning import ShortCodeExtractor


class SearchMode(str, Enum):
    SHORT = "short"
    LONG = "long"
    TWO_STAGE = "twostage"

    @classmethod
    def parse(cls, value: Union["SearchMode", str]) -> "SearchMode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        if key == "elastichash":
            key = cls.TWO_STAGE.value
        for mode in cls:
            if mode.value == key:
                return mode
        raise InvalidQueryError(f"unknown search mode {value!r}; expected one of short, long, twostage")


@dataclass(frozen=True)
class RankedResult:
    id: int
    distance: int
    score: int

    def to_dict(self) -> Dict[str, int]:
        return {"id": self.id, "distance": self.distance, "score": self.score}


@dataclass
class IndexConfig:
    """
    Attributes:
        radius: neighbor-table radius d used by every filter field
        extractor: long-code bit positions forming the short code
        default_mode: mode used when a search does not name one
        long_postings: build the sixteen long-code posting maps that `long` mode needs
    """

    radius: int = 2
    extractor: ShortCodeExtractor = field(default_factory=ShortCodeExtractor.prefix)
    default_mode: SearchMode = SearchMode.TWO_STAGE
    long_postings: bool = False

    def __post_init__(self) -> None:
        self.radius = check_radius(self.radius)
        self.default_mode = SearchMode.parse(self.default_mode)


class PostingLists:
    """
    Inverted lists for m subcode fields in compressed form.

    For field f, `orders[f]` holds document rows grouped by subcode value (rows ascending
    inside a group) and `offsets[f][v]:offsets[f][v+1]` is the slice for value v.
    """

    def __init__(self, keys: np.ndarray) -> None:
        keys = np.asarray(keys, dtype=np.uint16)
        n, self.fields = keys.shape
        row_dtype = np.int32 if n < 2**31 else np.int64
        self.orders = np.empty((self.fields, n), dtype=row_dtype)
        self.offsets = np.zeros((self.fields, SUBCODE_SPACE + 1), dtype=np.int64)
        for f in range(self.fields):
            self.orders[f] = np.argsort(keys[:, f], kind="stable")
            np.cumsum(np.bincount(keys[:, f], minlength=SUBCODE_SPACE), out=self.offsets[f, 1:])

    def posting(self, field_no: int, value: int) -> np.ndarray:
        start, end = self.offsets[field_no, value], self.offsets[field_no, value + 1]
        return self.orders[field_no, start:end]

    def gather(self, field_no: int, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.int64)
        starts = self.offsets[field_no, values]
        lengths = self.offsets[field_no, values + 1] - starts
        total = int(lengths.sum())
        if total == 0:
            return np.empty(0, dtype=self.orders.dtype)
        idx = np.repeat(starts - (np.cumsum(lengths) - lengths), lengths) + np.arange(total)
        return self.orders[field_no, idx]

    def match(self, query_subcodes: Sequence[int], table: NeighborTable) -> np.ndarray:
        """Rows with at least one field inside the query subcode's neighbor entry, ascending."""
        parts = [self.gather(f, table[q]) for f, q in enumerate(query_subcodes)]
        return np.unique(np.concatenate(parts))


@dataclass(frozen=True)
class IndexSnapshot:
    ids: np.ndarray
    long_words: np.ndarray
    short_subcodes: np.ndarray
    short_words: np.ndarray
    labels: Optional[List[Labels]]
    short_postings: PostingLists
    long_postings: Optional[PostingLists]
    generation: int = 0

    @classmethod
    def build(
        cls,
        ids: np.ndarray,
        long_words: np.ndarray,
        short_subcodes: np.ndarray,
        labels: Optional[List[Labels]],
        long_postings: bool,
        generation: int = 0,
    ) -> "IndexSnapshot":
        order = np.argsort(ids, kind="stable")
        ids, long_words, short_subcodes = ids[order], long_words[order], short_subcodes[order]
        if labels is not None:
            labels = [labels[i] for i in order]
        return cls(
            ids=ids,
            long_words=long_words,
            short_subcodes=short_subcodes,
            short_words=pack_short(short_subcodes),
            labels=labels,
            short_postings=PostingLists(short_subcodes),
            long_postings=PostingLists(long_subcodes16(long_words)) if long_postings else None,
            generation=generation,
        )

    @classmethod
    def empty(cls, long_postings: bool) -> "IndexSnapshot":
        return cls.build(
            np.zeros(0, dtype=np.uint64),
            np.zeros((0, NUM_WORDS), dtype=np.uint64),
            np.zeros((0, NUM_SUBCODES), dtype=np.uint16),
            None,
            long_postings,
        )

    def __len__(self) -> int:
        return len(self.ids)

    def rows_of(self, doc_ids: Iterable[int]) -> np.ndarray:
        """Rows of the given ids; KeyError on the first id that is not indexed."""
        if not isinstance(doc_ids, np.ndarray):
            doc_ids = list(doc_ids)
        doc_ids = np.asarray(doc_ids, dtype=np.uint64).reshape(-1)
        rows = np.searchsorted(self.ids, doc_ids)
        found = rows < len(self.ids)
        found[found] = self.ids[rows[found]] == doc_ids[found]
        if not found.all():
            raise KeyError(int(doc_ids[np.argmin(found)]))
        return rows

    def merged(self, batch: DocumentBatch, short_subcodes: np.ndarray, long_postings: bool) -> "IndexSnapshot":
        labels = None
        if self.labels is not None or batch.labels is not None:
            old = self.labels if self.labels is not None else [frozenset()] * len(self)
            new = batch.labels if batch.labels is not None else [frozenset()] * len(batch)
            labels = list(old) + list(new)
        return IndexSnapshot.build(
            np.concatenate([self.ids, batch.ids]),
            np.concatenate([self.long_words, batch.long_words]),
            np.concatenate([self.short_subcodes, short_subcodes]),
            labels,
            long_postings,
            self.generation + 1,
        )


class SearchIndex:
    def __init__(self, config: Optional[IndexConfig] = None, neighbor_table: Optional[NeighborTable] = None) -> None:
        self.config = config or IndexConfig()
        if neighbor_table is not None and neighbor_table.radius != self.config.radius:
            raise ValueError("neighbor table radius does not match the index radius")
        self.neighbor_table = neighbor_table or build_neighbor_table(self.config.radius)
        self._state = IndexSnapshot.empty(self.config.long_postings)
        self._write_lock = threading.Lock()

    # ===== PROPERTIES =====#

    @property
    def radius(self) -> int:
        return self.config.radius

    @property
    def extractor(self) -> ShortCodeExtractor:
        return self.config.extractor

    @property
    def has_long_postings(self) -> bool:
        return self.config.long_postings

    def __len__(self) -> int:
        return len(self._state)

    def snapshot(self) -> IndexSnapshot:
        return self._state

    # ===== INGESTION =====#

    def index_documents(self, documents: Union[DocumentBatch, Sequence[DocumentRecord]]) -> int:
        batch = documents if isinstance(documents, DocumentBatch) else DocumentBatch.from_records(list(documents))
        if len(batch) == 0:
            return 0

        started = time.perf_counter()
        derived = self.extractor.extract_rows(batch.long_words)
        if batch.short_subcodes is not None:
            mismatched = np.flatnonzero((batch.short_subcodes != derived).any(axis=1))
            if len(mismatched):
                raise CodeMismatchError(int(batch.ids[mismatched[0]]))

        unique_ids, counts = np.unique(batch.ids, return_counts=True)
        if (counts > 1).any():
            raise DuplicateDocumentError(int(unique_ids[np.argmax(counts > 1)]))

        with self._write_lock:
            state = self._state
            clash = np.intersect1d(state.ids, unique_ids)
            if len(clash):
                raise DuplicateDocumentError(int(clash[0]))
            self._state = state.merged(batch, derived, self.config.long_postings)

        logging.info(
            f"Indexed {len(batch)} documents in {time.perf_counter() - started:.3f}s "
            f"(total {len(self._state)}, generation {self._state.generation})"
        )
        return len(batch)

    # ===== LOOKUPS =====#

    def get_document(self, doc_id: int) -> DocumentRecord:
        state = self._state
        row = int(state.rows_of([doc_id])[0])
        return DocumentRecord(
            id=int(state.ids[row]),
            long_code=LongCode(tuple(int(w) for w in state.long_words[row])),
            short_code=ShortCode(tuple(int(s) for s in state.short_subcodes[row])),
            labels=state.labels[row] if state.labels is not None else None,
        )

    def labels_for(self, doc_ids: Sequence[int]) -> List[Labels]:
        state = self._state
        if state.labels is None:
            return [frozenset()] * len(doc_ids)
        return [state.labels[int(r)] for r in state.rows_of(doc_ids)]

    def posting_list(self, field_no: int, value: int, long: bool = False) -> List[int]:
        """Ascending ids whose subcode in field f_<field_no> (or the long field) equals value."""
        state = self._state
        postings = state.long_postings if long else state.short_postings
        if postings is None:
            raise ModeUnavailableError("this index was built without long-code postings")
        return [int(i) for i in state.ids[np.sort(postings.posting(field_no, value))]]

    def stats(self) -> Dict[str, object]:
        state = self._state
        labeled = sum(1 for l in state.labels if l) if state.labels is not None else 0
        return {
            "documents": len(state),
            "radius": self.radius,
            "neighbors_per_subcode": self.neighbor_table.entry_length,
            "default_mode": self.config.default_mode.value,
            "modes": {
                SearchMode.SHORT.value: True,
                SearchMode.TWO_STAGE.value: True,
                SearchMode.LONG.value: state.long_postings is not None,
            },
            "labeled_documents": labeled,
            "generation": state.generation,
        }

    # ===== SEARCH =====#

    def coarse_filter(self, q: ShortCode) -> np.ndarray:
        """Ascending ids of every document sharing a field within radius d of q's subcode."""
        state = self._state
        return state.ids[state.short_postings.match(q.subcodes, self.neighbor_table)]

    def rerank(self, candidates: Iterable[int], q_long: LongCode, k: int) -> List[RankedResult]:
        _check_k(k)
        state = self._state
        rows = np.unique(state.rows_of(candidates))
        distances = hamming_rows(state.long_words[rows], np.array(q_long.words, dtype=np.uint64))
        return _top_k(state, rows, distances, k, LONG_BITS)

    def search(self, query: Union[LongCode, ShortCode], k: int, mode: Union[SearchMode, str, None] = None) -> List[RankedResult]:
        _check_k(k)
        mode = SearchMode.parse(mode if mode is not None else self.config.default_mode)
        state = self._state

        if mode is SearchMode.SHORT:
            q_short = query if isinstance(query, ShortCode) else self.extractor.extract(query)
            rows = state.short_postings.match(q_short.subcodes, self.neighbor_table)
            distances = hamming_rows(state.short_words[rows], q_short.to_int())
            return _top_k(state, rows, distances, k, SHORT_BITS)

        if not isinstance(query, LongCode):
            raise InvalidQueryError(f"{mode.value} mode needs a {LONG_BITS}-bit long code")
        q_words = np.array(query.words, dtype=np.uint64)

        if mode is SearchMode.TWO_STAGE:
            rows = state.short_postings.match(self.extractor.extract(query).subcodes, self.neighbor_table)
        else:
            if state.long_postings is None:
                raise ModeUnavailableError("long mode needs an index built with long-code postings")
            rows = state.long_postings.match(query.subcodes16(), self.neighbor_table)
        distances = hamming_rows(state.long_words[rows], q_words)
        return _top_k(state, rows, distances, k, LONG_BITS)


def _check_k(k: int) -> None:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise InvalidQueryError(f"k must be a positive integer, got {k!r}")


def _top_k(state: IndexSnapshot, rows: np.ndarray, distances: np.ndarray, k: int, length: int) -> List[RankedResult]:
    """Rows arrive ascending, which is ascending id, so a stable sort on distance breaks ties by id."""
    if len(rows) > k:
        kth = np.partition(distances, k - 1)[k - 1]
        keep = distances <= kth
        rows, distances = rows[keep], distances[keep]
    order = np.argsort(distances, kind="stable")[:k]
    ids = state.ids[rows[order]]
    return [
        RankedResult(id=int(i), distance=int(d), score=length - int(d))
        for i, d in zip(ids, distances[order])
    ]


def query_response(index: "SearchIndex", code_text: str, k: int, mode: Union[SearchMode, str, None] = None) -> Dict[str, object]:
    """The body `POST /search` returns and `query --json` prints: echoed mode and k, then the ranked hits."""
    mode = SearchMode.parse(mode if mode is not None else index.config.default_mode)
    query = parse_hex(code_text)
    results = index.search(query, k, mode)
    return {"mode": mode.value, "k": int(k), "results": [r.to_dict() for r in results]}
