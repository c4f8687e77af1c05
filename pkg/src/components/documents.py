"""
Documents and the codes file format.

A codes file is UTF-8 text with one document per line:

    doc_id<TAB>64-hex-char long code<TAB>optional comma-separated labels

Lines starting with `#` and blank lines are skipped. Parsing is all-or-nothing: every
malformed line is collected and reported together with its 1-based line number.

`DocumentBatch` is the column form (numpy arrays) the index ingests; `DocumentRecord`
is the per-document view handed out by lookups.
"""

import re
from dataclasses import dataclass
from pathlib import Path
from typing import FrozenSet, Iterable, Iterator, List, Optional, Sequence, Union

import numpy as np

from src.logger import logging
from src.exception import CodesFileError
from src.components.codes import (
    LONG_HEX_LEN,
    NUM_SUBCODES,
    NUM_WORDS,
    LongCode,
    ShortCode,
    long_words_array,
    short_subcodes_array,
    words_from_hex,
)


MAX_DOC_ID = (1 << 64) - 1

_LONG_HEX = re.compile(rf"[0-9a-fA-F]{{{LONG_HEX_LEN}}}")
_DOC_ID = re.compile(r"[0-9]{1,20}")

Labels = FrozenSet[str]


@dataclass(frozen=True)
class DocumentRecord:
    id: int
    long_code: LongCode
    short_code: ShortCode
    labels: Optional[Labels] = None


@dataclass
class DocumentBatch:
    """
    Column view of a set of documents.

    Attributes:
        ids: (n,) uint64 document ids
        long_words: (n, 4) uint64 long-code words
        labels: per-document label sets, or None when no document carries labels
        short_subcodes: (n, 4) uint16 short codes when supplied by the caller; the index
            derives them from the extractor otherwise and checks them when present
    """

    ids: np.ndarray
    long_words: np.ndarray
    labels: Optional[List[Labels]] = None
    short_subcodes: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.ids = np.asarray(self.ids, dtype=np.uint64).reshape(-1)
        self.long_words = np.asarray(self.long_words, dtype=np.uint64).reshape(-1, NUM_WORDS)
        if len(self.long_words) != len(self.ids):
            raise ValueError("ids and long_words must have the same length")
        if self.short_subcodes is not None:
            self.short_subcodes = np.asarray(self.short_subcodes, dtype=np.uint16).reshape(-1, NUM_SUBCODES)
            if len(self.short_subcodes) != len(self.ids):
                raise ValueError("ids and short_subcodes must have the same length")
        if self.labels is not None:
            self.labels = [frozenset(l) for l in self.labels]
            if len(self.labels) != len(self.ids):
                raise ValueError("ids and labels must have the same length")

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def empty(cls) -> "DocumentBatch":
        return cls(ids=np.zeros(0, dtype=np.uint64), long_words=np.zeros((0, NUM_WORDS), dtype=np.uint64))

    @classmethod
    def from_records(cls, records: Sequence[DocumentRecord]) -> "DocumentBatch":
        if not records:
            return cls.empty()
        has_labels = any(r.labels is not None for r in records)
        return cls(
            ids=np.array([r.id for r in records], dtype=np.uint64),
            long_words=long_words_array([r.long_code for r in records]),
            labels=[r.labels or frozenset() for r in records] if has_labels else None,
            short_subcodes=short_subcodes_array([r.short_code for r in records]),
        )

    def long_code(self, row: int) -> LongCode:
        return LongCode(tuple(int(w) for w in self.long_words[row]))

    def take(self, rows: np.ndarray) -> "DocumentBatch":
        rows = np.asarray(rows, dtype=np.int64)
        return DocumentBatch(
            ids=self.ids[rows],
            long_words=self.long_words[rows],
            labels=[self.labels[i] for i in rows] if self.labels is not None else None,
            short_subcodes=self.short_subcodes[rows] if self.short_subcodes is not None else None,
        )


# ===== CODES FILE =====#

def parse_codes(lines: Iterable[str], require_labels: bool = False) -> DocumentBatch:
    ids: List[int] = []
    hexes: List[str] = []
    labels: List[Labels] = []
    any_labels = False
    bad_lines: List[int] = []
    reasons: List[str] = []

    def reject(lineno: int, reason: str) -> None:
        bad_lines.append(lineno)
        if len(reasons) < 10:
            reasons.append(f"line {lineno}: {reason}")

    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            reject(lineno, f"expected 2 or 3 tab-separated fields, got {len(parts)}")
            continue
        doc_id, code = parts[0].strip(), parts[1].strip()
        if not _DOC_ID.fullmatch(doc_id) or int(doc_id) > MAX_DOC_ID:
            reject(lineno, f"invalid document id {doc_id!r}")
            continue
        if not _LONG_HEX.fullmatch(code):
            reject(lineno, f"long code must be {LONG_HEX_LEN} hex characters")
            continue
        line_labels = frozenset()
        if len(parts) == 3:
            line_labels = frozenset(l.strip() for l in parts[2].split(",") if l.strip())
            any_labels = any_labels or bool(line_labels)
        if require_labels and not line_labels:
            reject(lineno, "labels are required")
            continue
        ids.append(int(doc_id))
        hexes.append(code)
        labels.append(line_labels)

    if bad_lines:
        raise CodesFileError(bad_lines, reasons)
    if not ids:
        return DocumentBatch.empty()
    return DocumentBatch(
        ids=np.array(ids, dtype=np.uint64),
        long_words=words_from_hex(hexes),
        labels=labels if any_labels else None,
    )


def read_codes_file(path: Union[str, Path], require_labels: bool = False) -> DocumentBatch:
    path = Path(path)
    with path.open("r", encoding="utf-8") as f:
        batch = parse_codes(f, require_labels=require_labels)
    logging.info(f"Read {len(batch)} documents from {path}")
    return batch


def format_codes(batch: DocumentBatch) -> Iterator[str]:
    for row in range(len(batch)):
        code = "".join(f"{int(w):016x}" for w in batch.long_words[row])
        line = f"{int(batch.ids[row])}\t{code}"
        if batch.labels is not None and batch.labels[row]:
            line += "\t" + ",".join(sorted(batch.labels[row]))
        yield line + "\n"


def write_codes_file(path: Union[str, Path], batch: DocumentBatch, header: Optional[str] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        if header:
            f.write(f"# {header}\n")
        f.writelines(format_codes(batch))
    logging.info(f"Wrote {len(batch)} documents to {path}")
