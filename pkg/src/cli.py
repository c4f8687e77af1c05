"""
Command-line surface.

    python -m src.cli partition --sample codes.tsv --out extractor.txt [--seed S]
    python -m src.cli build     --input codes.tsv --extractor extractor.txt --out index.bin [--d 2]
    python -m src.cli query     --index index.bin --code <hex> [--k 10] [--mode twostage] [--json]
    python -m src.cli serve     --config service.conf
    python -m src.cli export-es --extractor extractor.txt [--d 2] [--out dir | --ndjson file] [--codes codes.tsv]
    python -m src.cli eval      --index index.bin --queries queries.tsv --modes all
    python -m src.cli bench     --index index.bin --queries queries.tsv --modes all
    python -m src.cli synth     --classes C --per-class N --flip-p P --seed S --out codes.tsv

Exit codes: 0 ok, 1 unexpected, 2 usage, 3 missing path, 4 invalid value,
5 conflicting flags, 6 corrupt index file, 7 mode unavailable, 8 duplicate document.
"""

import argparse
import json
import sys
from enum import IntEnum
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

from src.logger import logging
from src.exception import (
    ConflictingFlagsError,
    DuplicateDocumentError,
    HamSearchError,
    IndexFormatError,
    InvalidQueryError,
    ModeUnavailableError,
)
from src.components.codes import MAX_RADIUS
from src.components.documents import read_codes_file, write_codes_file
from src.components.es_export import RETRIEVAL_INDEX, emit_all, write_ndjson, write_tree
from src.components.evaluation import (
    K_VALUES,
    benchmark_modes,
    evaluate_modes,
    queries_from_batch,
    resolve_modes,
)
from src.components.index_store import load_index, save_index
from src.components.partitioning import PartitioningConfig, ShortCodeExtractor, ShortCodePartitioning
from src.components.search_index import IndexConfig, SearchIndex, SearchMode, query_response
from src.components.synthetic import SyntheticConfig, generate_synthetic


class ExitCode(IntEnum):
    OK = 0
    UNEXPECTED = 1
    USAGE = 2
    MISSING_PATH = 3
    INVALID_VALUE = 4
    CONFLICTING_FLAGS = 5
    CORRUPT_INDEX = 6
    MODE_UNAVAILABLE = 7
    DUPLICATE_DOCUMENT = 8


def exit_code_for(error: BaseException) -> ExitCode:
    if isinstance(error, FileNotFoundError):
        return ExitCode.MISSING_PATH
    if isinstance(error, ConflictingFlagsError):
        return ExitCode.CONFLICTING_FLAGS
    if isinstance(error, IndexFormatError):
        return ExitCode.CORRUPT_INDEX
    if isinstance(error, ModeUnavailableError):
        return ExitCode.MODE_UNAVAILABLE
    if isinstance(error, DuplicateDocumentError):
        return ExitCode.DUPLICATE_DOCUMENT
    if isinstance(error, HamSearchError):
        return ExitCode.INVALID_VALUE
    return ExitCode.UNEXPECTED


def render_json(payload) -> str:
    """Compact form, identical to the HTTP response body."""
    return json.dumps(payload, ensure_ascii=False, allow_nan=False, separators=(",", ":"))


def _existing(path: Optional[str], what: str) -> Optional[Path]:
    if path is None:
        return None
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{what} not found: {path}")
    return path


def _k_list(text: Optional[str]) -> List[int]:
    if not text:
        return list(K_VALUES)
    try:
        return [int(k) for k in text.split(",") if k.strip()]
    except ValueError as e:
        raise InvalidQueryError(f"--k expects comma-separated integers: {e}") from e


# ===== COMMANDS =====#

def cmd_partition(args: argparse.Namespace) -> int:
    config = PartitioningConfig(
        sample_path=_existing(args.sample, "sample codes file"),
        out_path=args.out,
        seed=args.seed,
        restarts=args.restarts,
    )
    extractor = ShortCodePartitioning(config).run()
    print(f"extractor written to {config.out_path} ({len(extractor.positions)} positions)")
    return ExitCode.OK


def cmd_build(args: argparse.Namespace) -> int:
    codes_path = _existing(args.input, "codes file")
    extractor_path = _existing(args.extractor, "extractor file")
    extractor = ShortCodeExtractor.load(extractor_path) if extractor_path else ShortCodeExtractor.prefix()
    index = SearchIndex(
        IndexConfig(
            radius=args.d,
            extractor=extractor,
            default_mode=args.default_mode,
            long_postings=args.long_postings,
        )
    )
    index.index_documents(read_codes_file(codes_path))
    save_index(index, args.out)
    print(f"indexed {len(index)} documents into {args.out}")
    return ExitCode.OK


def cmd_query(args: argparse.Namespace) -> int:
    index = load_index(_existing(args.index, "index file"))
    payload = query_response(index, args.code.strip(), args.k, args.mode)
    if args.json:
        print(render_json(payload))
        return ExitCode.OK
    frame = pd.DataFrame(payload["results"], columns=["id", "distance", "score"])
    frame.index = pd.RangeIndex(1, len(frame) + 1, name="rank")
    print(f"mode={payload['mode']} k={payload['k']} results={len(frame)}")
    if len(frame):
        print(frame.to_string())
    return ExitCode.OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from api.main import create_app
    from src.config import ServiceConfig

    config = ServiceConfig.load(_existing(args.config, "config file"))
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    uvicorn.run(create_app(config), host=config.host, port=config.port)
    return ExitCode.OK


def cmd_export_es(args: argparse.Namespace) -> int:
    if args.out and args.ndjson:
        raise ConflictingFlagsError("--out and --ndjson are mutually exclusive")
    extractor_path = _existing(args.extractor, "extractor file")
    extractor = ShortCodeExtractor.load(extractor_path)
    documents = read_codes_file(_existing(args.codes, "codes file")) if args.codes else None
    artifacts = emit_all(args.d, documents, extractor, args.index_name)
    if args.out:
        count = write_tree(artifacts, args.out)
    elif args.ndjson:
        path = Path(args.ndjson)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as f:
            count = write_ndjson(artifacts, f)
    else:
        count = write_ndjson(artifacts, sys.stdout)
    logging.info(f"export-es: {count} artifacts")
    print(f"{count} artifacts", file=sys.stderr)
    return ExitCode.OK


def cmd_eval(args: argparse.Namespace) -> int:
    index = load_index(_existing(args.index, "index file"))
    queries = queries_from_batch(read_codes_file(_existing(args.queries, "queries file"), require_labels=True))
    report = evaluate_modes(index, queries, resolve_modes(args.modes, index), _k_list(args.k), args.workers)
    print(report.to_json() if args.json else report.to_text())
    return ExitCode.OK


def cmd_bench(args: argparse.Namespace) -> int:
    index = load_index(_existing(args.index, "index file"))
    batch = read_codes_file(_existing(args.queries, "queries file"))
    queries = [batch.long_code(row) for row in range(len(batch))]
    stats = benchmark_modes(index, queries, resolve_modes(args.modes, index), _k_list(args.k), args.warmup)
    print(stats.to_json() if args.json else stats.to_text())
    return ExitCode.OK


def cmd_synth(args: argparse.Namespace) -> int:
    if args.queries_per_class and not args.queries_out:
        raise ConflictingFlagsError("--queries-per-class needs --queries-out")
    if args.queries_out and not args.queries_per_class:
        raise ConflictingFlagsError("--queries-out needs --queries-per-class > 0")
    config = SyntheticConfig(
        num_classes=args.classes,
        codes_per_class=args.per_class,
        flip_probability=args.flip_p,
        queries_per_class=args.queries_per_class,
        extra_labels_max=args.extra_labels_max,
        seed=args.seed,
    )
    documents, queries = generate_synthetic(config)
    header = f"synthetic classes={args.classes} per_class={args.per_class} p={args.flip_p} seed={args.seed}"
    write_codes_file(args.out, documents, header)
    if args.queries_out:
        write_codes_file(args.queries_out, queries, header + " queries")
    print(f"wrote {len(documents)} documents to {args.out}")
    return ExitCode.OK


# ===== PARSER =====#

def _radius(text: str) -> int:
    value = int(text)
    if not 0 <= value <= MAX_RADIUS:
        raise argparse.ArgumentTypeError(f"radius must lie in [0, {MAX_RADIUS}]")
    return value


def _mode(text: str) -> SearchMode:
    try:
        return SearchMode.parse(text)
    except HamSearchError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hamsearch", description="Two-stage Hamming similarity search")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="compute a decorrelated short-code extractor from a code sample")
    p.add_argument("--sample", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=1)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("build", help="index a codes file and save the index")
    p.add_argument("--input", required=True)
    p.add_argument("--extractor", help="extractor file; long-code bits 0..63 when omitted")
    p.add_argument("--out", required=True)
    p.add_argument("--d", type=_radius, default=2)
    p.add_argument("--default-mode", type=_mode, default=SearchMode.TWO_STAGE)
    p.add_argument("--long-postings", action="store_true", help="also build the postings long mode needs")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="search a saved index")
    p.add_argument("--index", required=True)
    p.add_argument("--code", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--mode", type=_mode, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", required=True)
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export-es", help="emit Elasticsearch artifacts")
    p.add_argument("--extractor", required=True)
    p.add_argument("--d", type=_radius, default=2)
    p.add_argument("--out", help="directory tree output")
    p.add_argument("--ndjson", help="NDJSON output file (stdout when neither is given)")
    p.add_argument("--codes", help="codes file to emit document artifacts for")
    p.add_argument("--index-name", default=RETRIEVAL_INDEX)
    p.set_defaults(func=cmd_export_es)

    for name, func, help_text in (
        ("eval", cmd_eval, "mean AP per mode and k"),
        ("bench", cmd_bench, "query latency per mode and k"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--index", required=True)
        p.add_argument(
            "--queries",
            required=True,
            help="labeled codes file; a line whose id and code match an indexed document is left out of its own ranking",
        )
        p.add_argument("--modes", default="all")
        p.add_argument("--k", help=f"comma-separated cut-offs (default {','.join(map(str, K_VALUES))})")
        p.add_argument("--json", action="store_true")
        if name == "eval":
            p.add_argument("--workers", type=int, default=1)
        else:
            p.add_argument("--warmup", type=int, default=10)
        p.set_defaults(func=func)

    p = sub.add_parser("synth", help="write a seeded synthetic labeled corpus")
    p.add_argument("--classes", type=int, default=100)
    p.add_argument("--per-class", type=int, default=1000)
    p.add_argument("--flip-p", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--queries-per-class", type=int, default=0)
    p.add_argument("--queries-out")
    p.add_argument("--extra-labels-max", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args))
    except Exception as e:
        code = exit_code_for(e)
        if code is ExitCode.UNEXPECTED:
            logging.exception(f"{args.command} failed")
        else:
            logging.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return int(code)


if __name__ == "__main__":
    sys.exit(main())
