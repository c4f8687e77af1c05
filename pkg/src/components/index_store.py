"""
Index persistence.

File layout (big-endian):

    magic             9 bytes   b"HAMSEARCH"
    version           uint16
    payload length    uint64    bytes from the start of the file up to the checksum
    preamble check    8 bytes   blake2b(digest_size=8) of magic, version and payload length
    radius            uint8
    default mode      uint8     0 short, 1 long, 2 twostage
    flags             uint8     bit 0: long-code postings enabled
    extractor         64 x uint8 bit positions
    document count    uint64
    records           id uint64, long code 32 bytes, short code 8 bytes,
                      label count uint16, then per label: uint16 byte length + UTF-8
    checksum          8 bytes   blake2b(digest_size=8) of everything before it

Posting lists and the neighbor table are rebuilt on load.
"""

import hashlib
import os
import struct
import sys
from pathlib import Path
from typing import List, Union

import numpy as np

from src.logger import logging
from src.exception import (
    CustomException,
    HamSearchError,
    IndexChecksumError,
    IndexFormatError,
    IndexTruncatedError,
    IndexVersionError,
)
from src.components.codes import NUM_SUBCODES, NUM_WORDS, SHORT_BITS
from src.components.documents import DocumentBatch, Labels
from src.components.partitioning import ShortCodeExtractor
from src.components.search_index import IndexConfig, SearchIndex, SearchMode


MAGIC = b"HAMSEARCH"
FORMAT_VERSION = 1
CHECKSUM_SIZE = 8

_PREAMBLE_FIELDS = struct.Struct(">9sHQ")
_PREAMBLE = struct.Struct(f">9sHQ{CHECKSUM_SIZE}s")
_SETTINGS = struct.Struct(f">BBB{SHORT_BITS}BQ")
_RECORD = struct.Struct(f">Q{NUM_WORDS}Q{NUM_SUBCODES}HH")
_LABEL_LEN = struct.Struct(">H")
PREAMBLE_SIZE = _PREAMBLE.size
HEADER_SIZE = PREAMBLE_SIZE + _SETTINGS.size

_MODE_CODES = {SearchMode.SHORT: 0, SearchMode.LONG: 1, SearchMode.TWO_STAGE: 2}
_MODES_BY_CODE = {v: k for k, v in _MODE_CODES.items()}
_FLAG_LONG_POSTINGS = 0x01


def _checksum(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=CHECKSUM_SIZE).digest()


def serialize_index(index: SearchIndex) -> bytes:
    state = index.snapshot()
    config = index.config
    body = bytearray()
    body += _SETTINGS.pack(
        config.radius,
        _MODE_CODES[config.default_mode],
        _FLAG_LONG_POSTINGS if config.long_postings else 0,
        *config.extractor.positions,
        len(state),
    )
    for row in range(len(state)):
        labels = sorted(state.labels[row]) if state.labels is not None else []
        body += _RECORD.pack(
            int(state.ids[row]),
            *(int(w) for w in state.long_words[row]),
            *(int(s) for s in state.short_subcodes[row]),
            len(labels),
        )
        for label in labels:
            raw = label.encode("utf-8")
            body += _LABEL_LEN.pack(len(raw)) + raw

    payload = pack_preamble(FORMAT_VERSION, _PREAMBLE.size + len(body)) + bytes(body)
    return payload + _checksum(payload)


def pack_preamble(version: int, payload_length: int) -> bytes:
    head = _PREAMBLE_FIELDS.pack(MAGIC, version, payload_length)
    return head + _checksum(head)


def deserialize_index(data: bytes) -> SearchIndex:
    if len(data) < _PREAMBLE.size:
        if not data.startswith(MAGIC[: len(data)]):
            raise IndexFormatError("not an index file (bad magic)")
        raise IndexTruncatedError(f"index file is truncated: {len(data)} bytes, the preamble alone needs {_PREAMBLE.size}")

    magic, version, payload_length, header_check = _PREAMBLE.unpack_from(data, 0)
    if magic != MAGIC:
        raise IndexFormatError("not an index file (bad magic)")
    if _checksum(data[:_PREAMBLE_FIELDS.size]) != header_check:
        raise IndexChecksumError("index file preamble checksum mismatch; the file is corrupted")
    if version != FORMAT_VERSION:
        raise IndexVersionError(f"unsupported index format version {version}; this build reads version {FORMAT_VERSION}")
    if payload_length < HEADER_SIZE:
        raise IndexFormatError(f"payload length {payload_length} is shorter than the header")
    if len(data) < payload_length + CHECKSUM_SIZE:
        raise IndexTruncatedError(f"index file is truncated: {len(data)} bytes, expected {payload_length + CHECKSUM_SIZE}")
    if len(data) > payload_length + CHECKSUM_SIZE:
        raise IndexFormatError(f"{len(data) - payload_length - CHECKSUM_SIZE} unexpected bytes after the checksum")

    payload = data[:payload_length]
    if _checksum(payload) != data[payload_length:]:
        raise IndexChecksumError("index file checksum mismatch; the file is corrupted")

    settings = _SETTINGS.unpack_from(payload, _PREAMBLE.size)
    radius, mode_code, flags = settings[:3]
    positions = settings[3:3 + SHORT_BITS]
    count = settings[-1]
    if mode_code not in _MODES_BY_CODE:
        raise IndexFormatError(f"unknown default mode code {mode_code}")

    ids = np.empty(count, dtype=np.uint64)
    long_words = np.empty((count, NUM_WORDS), dtype=np.uint64)
    short_subcodes = np.empty((count, NUM_SUBCODES), dtype=np.uint16)
    labels: List[Labels] = []
    offset = HEADER_SIZE
    try:
        for row in range(count):
            record = _RECORD.unpack_from(payload, offset)
            offset += _RECORD.size
            ids[row] = record[0]
            long_words[row] = record[1:1 + NUM_WORDS]
            short_subcodes[row] = record[1 + NUM_WORDS:1 + NUM_WORDS + NUM_SUBCODES]
            row_labels = []
            for _ in range(record[-1]):
                (length,) = _LABEL_LEN.unpack_from(payload, offset)
                offset += _LABEL_LEN.size
                row_labels.append(payload[offset:offset + length].decode("utf-8"))
                offset += length
            labels.append(frozenset(row_labels))
    except (struct.error, UnicodeDecodeError) as e:
        raise IndexFormatError(f"malformed record section: {e}") from e
    if offset != payload_length:
        raise IndexFormatError("record section length does not match the header")

    index = SearchIndex(
        IndexConfig(
            radius=radius,
            extractor=ShortCodeExtractor(positions),
            default_mode=_MODES_BY_CODE[mode_code],
            long_postings=bool(flags & _FLAG_LONG_POSTINGS),
        )
    )
    index.index_documents(
        DocumentBatch(
            ids=ids,
            long_words=long_words,
            labels=labels if any(labels) else None,
            short_subcodes=short_subcodes,
        )
    )
    return index


def save_index(index: SearchIndex, path: Union[str, Path]) -> Path:
    path = Path(path)
    logging.info(f"Saving index ({len(index)} documents) to {path}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(serialize_index(index))
        os.replace(tmp, path)
    except Exception as e:
        raise CustomException(e, sys) from e
    logging.info(f"Index saved: {path.stat().st_size} bytes")
    return path


def load_index(path: Union[str, Path]) -> SearchIndex:
    path = Path(path)
    logging.info(f"Loading index from {path}")
    try:
        data = path.read_bytes()
        index = deserialize_index(data)
    except (HamSearchError, FileNotFoundError):
        raise
    except Exception as e:
        raise CustomException(e, sys) from e
    logging.info(f"Index loaded: {len(index)} documents, d={index.radius}")
    return index
