"""
Elasticsearch request artifacts for running the same two-stage search inside an ES cluster.

    neighbor docs   POST /nbs-d<d>/_doc/<subcode>     {"nbs": [...]}           (2^16 of them)
    stored script   POST /_scripts/hd64                painless: 64 - popcount(subcode ^ r_i)
    mappings        PUT  /<index>                      f_0..f_3 keyword, r_0..r_3 long
    documents       POST /<index>/_doc/<id>            f_j as decimal strings, r_i as signed longs
    search query    GET  /<index>/_search              function_score over a terms-lookup filter

ES longs are signed, so 64-bit words with the top bit set go out as negative
two's-complement integers. Nothing here talks to a cluster; artifacts are written as
NDJSON or as a directory tree mirroring the request paths.
"""

import json
import sys
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, Optional, TextIO, Union

from src.logger import logging
from src.exception import CustomException, HamSearchError, InvalidQueryError
from src.components.codes import (
    NUM_SUBCODES,
    NUM_WORDS,
    SUBCODE_SPACE,
    LongCode,
    ShortCode,
    check_radius,
    enumerate_neighbors,
)
from src.components.documents import DocumentBatch
from src.components.partitioning import ShortCodeExtractor


SCRIPT_ID = "hd64"
SCRIPT_SOURCE = "64-Long.bitCount(params.subcode^doc[params.field].value)"
RETRIEVAL_INDEX = "es-retrieval"
NEIGHBORS_FIELD = "nbs"


class ArtifactKind(str, Enum):
    NEIGHBOR_DOC = "neighbor_doc"
    STORED_SCRIPT = "stored_script"
    MAPPINGS = "mappings"
    SEARCH_QUERY = "search_query"
    DOCUMENT = "document"


@dataclass(frozen=True)
class EsArtifact:
    kind: ArtifactKind
    method: str
    target_path: str
    body: str

    def __post_init__(self) -> None:
        if not self.target_path:
            raise ValueError("artifact target path must not be empty")
        json.loads(self.body)

    def parsed_body(self) -> Dict[str, Any]:
        return json.loads(self.body)

    def to_ndjson(self) -> str:
        return json.dumps({"method": self.method, "path": self.target_path, "body": self.parsed_body()}, separators=(",", ":"))


def neighbor_index_name(d: int) -> str:
    return f"nbs-d{d}"


def to_signed64(word: int) -> int:
    return word - (1 << 64) if word >= 1 << 63 else word


def _dump(body: Dict[str, Any]) -> str:
    return json.dumps(body, separators=(",", ":"))


# ===== ARTIFACTS =====#

def emit_neighbor_doc(v: int, d: int) -> EsArtifact:
    d = check_radius(d)
    return EsArtifact(
        kind=ArtifactKind.NEIGHBOR_DOC,
        method="POST",
        target_path=f"/{neighbor_index_name(d)}/_doc/{int(v)}",
        body=_dump({NEIGHBORS_FIELD: enumerate_neighbors(int(v), d)}),
    )


def emit_neighbor_docs(d: int) -> Iterator[EsArtifact]:
    for v in range(SUBCODE_SPACE):
        yield emit_neighbor_doc(v, d)


def emit_script() -> EsArtifact:
    return EsArtifact(
        kind=ArtifactKind.STORED_SCRIPT,
        method="POST",
        target_path=f"/_scripts/{SCRIPT_ID}",
        body=_dump({"script": {"lang": "painless", "source": SCRIPT_SOURCE}}),
    )


def emit_mappings(index_name: str = RETRIEVAL_INDEX) -> EsArtifact:
    properties = {f"f_{j}": {"type": "keyword"} for j in range(NUM_SUBCODES)}
    properties.update({f"r_{i}": {"type": "long"} for i in range(NUM_WORDS)})
    return EsArtifact(
        kind=ArtifactKind.MAPPINGS,
        method="PUT",
        target_path=f"/{index_name}",
        body=_dump({"mappings": {"properties": properties}}),
    )


def emit_document(doc_id: int, long_code: LongCode, short_code: ShortCode, index_name: str = RETRIEVAL_INDEX) -> EsArtifact:
    fields: Dict[str, Any] = {f"f_{j}": str(s) for j, s in enumerate(short_code.subcodes)}
    fields.update({f"r_{i}": to_signed64(w) for i, w in enumerate(long_code.words)})
    return EsArtifact(
        kind=ArtifactKind.DOCUMENT,
        method="POST",
        target_path=f"/{index_name}/_doc/{int(doc_id)}",
        body=_dump(fields),
    )


def emit_search_query(q_long: LongCode, q_short: ShortCode, k: int, d: int, index_name: str = RETRIEVAL_INDEX) -> EsArtifact:
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise InvalidQueryError(f"k must be a positive integer, got {k!r}")
    d = check_radius(d)
    functions = [
        {
            "script_score": {
                "script": {
                    "id": SCRIPT_ID,
                    "params": {"field": f"r_{i}", "subcode": to_signed64(word)},
                }
            },
            "weight": 1,
        }
        for i, word in enumerate(q_long.words)
    ]
    should = [
        {
            "terms": {
                f"f_{j}": {
                    "id": str(subcode),
                    "index": neighbor_index_name(d),
                    "path": NEIGHBORS_FIELD,
                }
            }
        }
        for j, subcode in enumerate(q_short.subcodes)
    ]
    body = {
        "size": k,
        "query": {
            "function_score": {
                "boost_mode": "sum",
                "score_mode": "sum",
                "functions": functions,
                "query": {
                    "constant_score": {
                        "boost": 0.0,
                        "filter": {"bool": {"minimum_should_match": 1, "should": should}},
                    }
                },
            }
        },
    }
    return EsArtifact(
        kind=ArtifactKind.SEARCH_QUERY,
        method="GET",
        target_path=f"/{index_name}/_search",
        body=_dump(body),
    )


def emit_all(
    d: int,
    documents: Optional[DocumentBatch] = None,
    extractor: Optional[ShortCodeExtractor] = None,
    index_name: str = RETRIEVAL_INDEX,
) -> Iterator[EsArtifact]:
    """Script, mappings, every neighbor doc, then one document artifact per indexed code."""
    yield emit_script()
    yield emit_mappings(index_name)
    yield from emit_neighbor_docs(d)
    if documents is not None:
        extractor = extractor or ShortCodeExtractor.prefix()
        for row in range(len(documents)):
            code = documents.long_code(row)
            yield emit_document(int(documents.ids[row]), code, extractor.extract(code), index_name)


# ===== WRITERS =====#

def write_ndjson(artifacts: Iterable[EsArtifact], stream: TextIO) -> int:
    count = 0
    for artifact in artifacts:
        stream.write(artifact.to_ndjson() + "\n")
        count += 1
    return count


def write_tree(artifacts: Iterable[EsArtifact], out_dir: Union[str, Path]) -> int:
    """One JSON file per artifact at <out_dir>/<request path>.json."""
    out_dir = Path(out_dir)
    count = 0
    try:
        for artifact in artifacts:
            target = out_dir / (artifact.target_path.strip("/") + ".json")
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(artifact.body, encoding="utf-8")
            count += 1
    except HamSearchError:
        raise
    except Exception as e:
        raise CustomException(e, sys) from e
    logging.info(f"Wrote {count} ES artifacts under {out_dir}")
    return count
