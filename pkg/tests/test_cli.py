import json

import pytest

from src.cli import ExitCode, main
from src.components.documents import read_codes_file
from src.components.index_store import load_index
from src.components.search_index import SearchMode


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A synthetic corpus, its extractor and a built index on disk."""
    root = tmp_path_factory.mktemp("cli")
    codes = root / "codes.tsv"
    queries = root / "queries.tsv"
    extractor = root / "extractor.txt"
    index = root / "index.bin"
    assert main([
        "synth", "--classes", "10", "--per-class", "40", "--flip-p", "0.05", "--seed", "3",
        "--out", str(codes), "--queries-per-class", "2", "--queries-out", str(queries),
    ]) == ExitCode.OK
    assert main(["partition", "--sample", str(codes), "--out", str(extractor), "--seed", "1"]) == ExitCode.OK
    assert main([
        "build", "--input", str(codes), "--extractor", str(extractor), "--out", str(index), "--long-postings",
    ]) == ExitCode.OK
    return {"root": root, "codes": codes, "queries": queries, "extractor": extractor, "index": index}


def test_synth_writes_documents_and_queries(workspace):
    assert len(read_codes_file(workspace["codes"])) == 400
    assert len(read_codes_file(workspace["queries"], require_labels=True)) == 20


def test_query_finds_an_indexed_code_first(workspace, capsys):
    code = read_codes_file(workspace["codes"]).long_code(17).to_hex()
    capsys.readouterr()
    assert main(["query", "--index", str(workspace["index"]), "--code", code, "--k", "5"]) == ExitCode.OK
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "mode=twostage k=5 results=5"
    rows = [line.split() for line in out[1:]]
    assert ["1", "17", "0", "256"] in rows


def test_query_json_matches_direct_search(workspace, capsys):
    batch = read_codes_file(workspace["codes"])
    code = batch.long_code(123)
    capsys.readouterr()
    args = ["query", "--index", str(workspace["index"]), "--code", code.to_hex(), "--k", "7", "--mode", "long", "--json"]
    assert main(args) == ExitCode.OK
    body = json.loads(capsys.readouterr().out)
    direct = load_index(workspace["index"]).search(code, 7, SearchMode.LONG)
    assert body["mode"] == "long"
    assert body["k"] == 7
    assert body["results"] == [r.to_dict() for r in direct]


def test_eval_and_bench_reports(workspace, capsys):
    common = ["--index", str(workspace["index"]), "--queries", str(workspace["queries"]), "--modes", "all", "--k", "10,25"]
    capsys.readouterr()
    assert main(["eval", *common]) == ExitCode.OK
    assert "mean AP" in capsys.readouterr().out
    assert main(["bench", *common, "--warmup", "2", "--json"]) == ExitCode.OK
    assert set(json.loads(capsys.readouterr().out)["modes"]) == {"short", "long", "twostage"}


def test_export_es_tree(workspace):
    out = workspace["root"] / "es"
    assert main(["export-es", "--extractor", str(workspace["extractor"]), "--d", "1", "--out", str(out)]) == ExitCode.OK
    assert (out / "_scripts" / "hd64.json").exists()
    assert (out / "es-retrieval.json").exists()
    assert sum(1 for _ in (out / "nbs-d1" / "_doc").iterdir()) == 65_536


def test_export_es_ndjson_with_documents(workspace):
    out = workspace["root"] / "artifacts.ndjson"
    args = ["export-es", "--extractor", str(workspace["extractor"]), "--ndjson", str(out), "--codes", str(workspace["codes"])]
    assert main(args) == ExitCode.OK
    lines = out.read_text().splitlines()
    assert len(lines) == 2 + 65_536 + 400


def test_missing_path_exit_code(workspace):
    assert main(["query", "--index", str(workspace["root"] / "nope.bin"), "--code", "0" * 64]) == ExitCode.MISSING_PATH


def test_invalid_value_exit_code(workspace, capsys):
    assert main(["query", "--index", str(workspace["index"]), "--code", "xyz"]) == ExitCode.INVALID_VALUE
    assert "position 0" in capsys.readouterr().err
    assert main(["query", "--index", str(workspace["index"]), "--code", "0" * 64, "--k", "0"]) == ExitCode.INVALID_VALUE


def test_conflicting_flags_exit_code(workspace):
    args = ["export-es", "--extractor", str(workspace["extractor"]), "--out", "a", "--ndjson", "b"]
    assert main(args) == ExitCode.CONFLICTING_FLAGS
    args = ["synth", "--out", str(workspace["root"] / "x.tsv"), "--queries-per-class", "2"]
    assert main(args) == ExitCode.CONFLICTING_FLAGS


def test_corrupt_index_exit_code(workspace):
    corrupt = workspace["root"] / "corrupt.bin"
    data = bytearray(workspace["index"].read_bytes())
    data[100] ^= 0xFF
    corrupt.write_bytes(bytes(data))
    assert main(["query", "--index", str(corrupt), "--code", "0" * 64]) == ExitCode.CORRUPT_INDEX


def test_mode_unavailable_exit_code(workspace):
    short_only = workspace["root"] / "short_only.bin"
    assert main(["build", "--input", str(workspace["codes"]), "--out", str(short_only)]) == ExitCode.OK
    assert main(["query", "--index", str(short_only), "--code", "0" * 64, "--mode", "long"]) == ExitCode.MODE_UNAVAILABLE


def test_duplicate_document_exit_code(workspace):
    doubled = workspace["root"] / "doubled.tsv"
    text = workspace["codes"].read_text()
    doubled.write_text(text + text)
    out = workspace["root"] / "doubled.bin"
    assert main(["build", "--input", str(doubled), "--out", str(out)]) == ExitCode.DUPLICATE_DOCUMENT


def test_usage_errors_exit_with_two():
    with pytest.raises(SystemExit) as err:
        main(["query", "--code", "0" * 64])
    assert err.value.code == ExitCode.USAGE
    with pytest.raises(SystemExit) as err:
        main(["build", "--input", "a", "--out", "b", "--d", "17"])
    assert err.value.code == ExitCode.USAGE
