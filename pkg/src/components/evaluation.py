"""
Module for retrieval quality and latency evaluation.

    1. average_precision: AP over the top-N of one ranked list
    2. mean_ap: mean AP (percent) per cut-off k for one search mode
    3. benchmark_latency: per-k mean and standard deviation of single-query wall time
    4. EvalReport / LatencyStats render as aligned text tables (modes x k) and JSON

A result is relevant when it shares at least one label with the query. A query that is
itself indexed, under the same id with the same long code, is removed from its own ranked list.
"""

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.logger import logging
from src.exception import EvaluationError, ModeUnavailableError
from src.components.codes import LongCode
from src.components.documents import DocumentBatch
from src.components.search_index import SearchIndex, SearchMode


K_VALUES: Tuple[int, ...] = (10, 25, 50, 100, 250, 500, 1000)
REPORT_MODE_ORDER = (SearchMode.SHORT, SearchMode.LONG, SearchMode.TWO_STAGE)
LATENCY_SCOPE = "wall-clock per query, one query at a time, covering search through ranked-list materialisation"


@dataclass(frozen=True)
class LabeledQuery:
    long_code: LongCode
    labels: FrozenSet[str]
    doc_id: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.labels:
            raise EvaluationError("a labeled query needs at least one label")
        object.__setattr__(self, "labels", frozenset(self.labels))


def queries_from_batch(batch: DocumentBatch) -> List[LabeledQuery]:
    if batch.labels is None:
        raise EvaluationError("query set carries no labels")
    return [
        LabeledQuery(batch.long_code(row), batch.labels[row], int(batch.ids[row]))
        for row in range(len(batch))
    ]


def resolve_modes(modes: Union[str, Sequence[Union[str, SearchMode]]], index: SearchIndex) -> List[SearchMode]:
    """`all` expands to every mode the index can serve, in report order."""
    if isinstance(modes, str) and modes.strip().lower() == "all":
        available = [m for m in REPORT_MODE_ORDER if m is not SearchMode.LONG or index.has_long_postings]
        if not index.has_long_postings:
            logging.warning("Index has no long-code postings; long mode left out of the report")
        return available
    if isinstance(modes, str):
        modes = [m for m in modes.split(",") if m.strip()]
    return [SearchMode.parse(m) for m in modes]


# ===== AVERAGE PRECISION =====#

def average_precision(ranked: Sequence[Hashable], relevant: Callable[[Hashable], bool], n: int) -> float:
    """
    AP of a ranked list cut at N: the mean of precision@k over the ranks k of relevant items.
    0 when no relevant item appears in the top N.
    """
    if n < 1:
        raise EvaluationError(f"N must be at least 1, got {n}")
    if len(ranked) > n:
        raise EvaluationError(f"ranked list has {len(ranked)} entries, more than N={n}")
    hits = 0
    total = 0.0
    for k, item in enumerate(ranked, start=1):
        if relevant(item):
            hits += 1
            total += hits / k
    return total / hits if hits else 0.0


@dataclass
class EvalReport:
    k_values: Tuple[int, ...]
    map_by_mode: Dict[str, Dict[int, float]] = field(default_factory=dict)
    num_queries: int = 0

    def merge(self, other: "EvalReport") -> "EvalReport":
        return EvalReport(self.k_values, {**self.map_by_mode, **other.map_by_mode}, max(self.num_queries, other.num_queries))

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame.from_dict(self.map_by_mode, orient="index", columns=list(self.k_values))
        frame.index.name = "top k"
        return frame

    def to_text(self) -> str:
        title = f"Retrieval quality: mean AP (%) at top k over {self.num_queries} queries"
        return title + "\n" + self.to_frame().to_string(float_format=lambda v: f"{v:.2f}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "metric": "mAP",
                "unit": "percent",
                "queries": self.num_queries,
                "k": list(self.k_values),
                "modes": {m: {str(k): v for k, v in row.items()} for m, row in self.map_by_mode.items()},
            },
            indent=2,
        )


def _own_document(index: SearchIndex, query: LabeledQuery) -> Optional[int]:
    """The query's id when the index holds that id with the same long code."""
    if query.doc_id is None:
        return None
    try:
        stored = index.get_document(query.doc_id)
    except KeyError:
        return None
    return query.doc_id if stored.long_code == query.long_code else None


def _query_average_precisions(
    index: SearchIndex, query: LabeledQuery, mode: SearchMode, k_values: Sequence[int]
) -> List[float]:
    k_max = max(k_values)
    own_id = _own_document(index, query)
    search_k = k_max + (1 if own_id is not None else 0)
    ranked = [r.id for r in index.search(query.long_code, search_k, mode) if r.id != own_id][:k_max]
    labels_by_id = dict(zip(ranked, index.labels_for(ranked)))

    def relevant(doc_id: int) -> bool:
        return bool(labels_by_id[doc_id] & query.labels)

    return [average_precision(ranked[:k], relevant, k) for k in k_values]


def mean_ap(
    index: SearchIndex,
    queries: Sequence[LabeledQuery],
    mode: Union[SearchMode, str],
    k_values: Sequence[int] = K_VALUES,
    workers: int = 1,
) -> EvalReport:
    mode = SearchMode.parse(mode)
    k_values = tuple(sorted(set(int(k) for k in k_values)))
    if not k_values or k_values[0] < 1:
        raise EvaluationError("k values must be positive")
    if index.stats()["labeled_documents"] == 0:
        raise EvaluationError("the index holds no labeled documents")
    if not queries:
        raise EvaluationError("the query set is empty")

    logging.info(f"mAP evaluation: mode={mode.value}, {len(queries)} queries, k={list(k_values)}, workers={workers}")
    started = time.perf_counter()

    def run(q: LabeledQuery) -> List[float]:
        return _query_average_precisions(index, q, mode, k_values)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, queries))
    else:
        rows = [run(q) for q in queries]

    means = np.asarray(rows, dtype=np.float64).mean(axis=0) * 100.0
    logging.info(f"mAP evaluation for {mode.value} finished in {time.perf_counter() - started:.2f}s")
    return EvalReport(k_values, {mode.value: dict(zip(k_values, means.tolist()))}, len(queries))


def evaluate_modes(
    index: SearchIndex,
    queries: Sequence[LabeledQuery],
    modes: Iterable[SearchMode],
    k_values: Sequence[int] = K_VALUES,
    workers: int = 1,
) -> EvalReport:
    report = None
    for mode in modes:
        part = mean_ap(index, queries, mode, k_values, workers)
        report = part if report is None else report.merge(part)
    if report is None:
        raise EvaluationError("no search modes to evaluate")
    return report


# ===== LATENCY =====#

@dataclass
class LatencyStats:
    k_values: Tuple[int, ...]
    mean_ms: Dict[str, Dict[int, float]] = field(default_factory=dict)
    std_ms: Dict[str, Dict[int, float]] = field(default_factory=dict)
    num_queries: int = 0

    def merge(self, other: "LatencyStats") -> "LatencyStats":
        return LatencyStats(
            self.k_values,
            {**self.mean_ms, **other.mean_ms},
            {**self.std_ms, **other.std_ms},
            max(self.num_queries, other.num_queries),
        )

    def to_frame(self) -> pd.DataFrame:
        rows = {}
        for mode in self.mean_ms:
            rows[(mode, "μ")] = [self.mean_ms[mode][k] for k in self.k_values]
            rows[(mode, "σ")] = [self.std_ms[mode][k] for k in self.k_values]
        frame = pd.DataFrame.from_dict(rows, orient="index", columns=list(self.k_values))
        frame.index = pd.MultiIndex.from_tuples(frame.index, names=["top k", ""])
        return frame

    def to_text(self) -> str:
        title = f"Search latency (ms) over {self.num_queries} queries; {LATENCY_SCOPE}"
        return title + "\n" + self.to_frame().to_string(float_format=lambda v: f"{v:.2f}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "metric": "latency",
                "unit": "ms",
                "scope": LATENCY_SCOPE,
                "queries": self.num_queries,
                "k": list(self.k_values),
                "modes": {
                    m: {str(k): {"mean": self.mean_ms[m][k], "std": self.std_ms[m][k]} for k in self.k_values}
                    for m in self.mean_ms
                },
            },
            indent=2,
        )


def benchmark_latency(
    index: SearchIndex,
    queries: Sequence[Union[LabeledQuery, LongCode]],
    mode: Union[SearchMode, str],
    k_values: Sequence[int] = K_VALUES,
    warmup_count: int = 10,
) -> LatencyStats:
    """
    For every k, runs the first `warmup_count` queries unmeasured, then times each remaining
    query on its own. Sequential by construction.
    """
    mode = SearchMode.parse(mode)
    if mode is SearchMode.LONG and not index.has_long_postings:
        raise ModeUnavailableError("long mode needs an index built with long-code postings")
    codes = [q.long_code if isinstance(q, LabeledQuery) else q for q in queries]
    if not codes:
        raise EvaluationError("the query set is empty")
    warmup_count = max(0, int(warmup_count))
    if warmup_count >= len(codes):
        raise EvaluationError(f"warmup_count={warmup_count} leaves no queries to measure out of {len(codes)}")
    k_values = tuple(sorted(set(int(k) for k in k_values)))

    logging.info(f"Latency benchmark: mode={mode.value}, {len(codes) - warmup_count} measured queries, k={list(k_values)}")
    mean_ms: Dict[int, float] = {}
    std_ms: Dict[int, float] = {}
    for k in k_values:
        for code in codes[:warmup_count]:
            index.search(code, k, mode)
        timings = np.empty(len(codes) - warmup_count, dtype=np.float64)
        for i, code in enumerate(codes[warmup_count:]):
            started = time.perf_counter()
            index.search(code, k, mode)
            timings[i] = (time.perf_counter() - started) * 1000.0
        mean_ms[k] = float(timings.mean())
        std_ms[k] = float(timings.std())
        logging.info(f"  {mode.value} k={k}: mean {mean_ms[k]:.3f} ms, std {std_ms[k]:.3f} ms")
    return LatencyStats(k_values, {mode.value: mean_ms}, {mode.value: std_ms}, len(codes) - warmup_count)


def benchmark_modes(
    index: SearchIndex,
    queries: Sequence[Union[LabeledQuery, LongCode]],
    modes: Iterable[SearchMode],
    k_values: Sequence[int] = K_VALUES,
    warmup_count: int = 10,
) -> LatencyStats:
    stats = None
    for mode in modes:
        part = benchmark_latency(index, queries, mode, k_values, warmup_count)
        stats = part if stats is None else stats.merge(part)
    if stats is None:
        raise EvaluationError("no search modes to benchmark")
    return stats
