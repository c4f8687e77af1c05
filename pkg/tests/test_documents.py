import numpy as np
import pytest

from src.exception import CodesFileError
from src.components.codes import LongCode
from src.components.documents import (
    DocumentBatch,
    DocumentRecord,
    parse_codes,
    read_codes_file,
    write_codes_file,
)
from src.components.partitioning import ShortCodeExtractor

CODE_A = "0123456789abcdef" * 4
CODE_B = "f" * 64


def test_parse_codes_reads_ids_codes_and_labels():
    batch = parse_codes([
        "# header comment",
        f"7\t{CODE_A}\tcat,dog",
        "",
        f"3\t{CODE_B.upper()}",
    ])
    assert batch.ids.tolist() == [7, 3]
    assert batch.long_code(0) == LongCode.from_hex(CODE_A)
    assert batch.long_code(1) == LongCode.from_hex(CODE_B)
    assert batch.labels == [frozenset({"cat", "dog"}), frozenset()]


def test_unlabeled_file_has_no_labels():
    assert parse_codes([f"1\t{CODE_A}"]).labels is None


def test_empty_input_is_an_empty_batch():
    batch = parse_codes([])
    assert len(batch) == 0
    assert batch.long_words.shape == (0, 4)


def test_every_malformed_line_is_reported():
    lines = [
        f"1\t{CODE_A}",
        f"2\t{CODE_A[:-1]}",
        f"x\t{CODE_A}",
        f"4\t{CODE_A}\ta\textra",
        f"5\t{CODE_B}",
    ]
    with pytest.raises(CodesFileError) as err:
        parse_codes(lines)
    assert err.value.line_numbers == [2, 3, 4]
    assert "line(s) 2, 3, 4" in str(err.value)


def test_ids_beyond_64_bits_are_rejected():
    with pytest.raises(CodesFileError) as err:
        parse_codes([f"{2**64}\t{CODE_A}"])
    assert err.value.line_numbers == [1]


def test_very_long_ids_are_rejected_by_line():
    lines = [f"1\t{CODE_A}", f"{'9' * 5000}\t{CODE_A}", f"{'0' * 21}\t{CODE_B}"]
    with pytest.raises(CodesFileError) as err:
        parse_codes(lines)
    assert err.value.line_numbers == [2, 3]
    assert parse_codes([f"{2**64 - 1}\t{CODE_A}"]).ids.tolist() == [2**64 - 1]


def test_require_labels():
    with pytest.raises(CodesFileError) as err:
        parse_codes([f"1\t{CODE_A}\tx", f"2\t{CODE_B}"], require_labels=True)
    assert err.value.line_numbers == [2]


def test_codes_file_write_then_read(tmp_path):
    batch = parse_codes([f"10\t{CODE_A}\tb,a", f"11\t{CODE_B}\tc"])
    path = tmp_path / "codes.tsv"
    write_codes_file(path, batch, header="test corpus")
    text = path.read_text()
    assert text.splitlines()[0] == "# test corpus"
    assert f"10\t{CODE_A}\ta,b" in text
    again = read_codes_file(path)
    assert again.ids.tolist() == [10, 11]
    assert np.array_equal(again.long_words, batch.long_words)
    assert again.labels == batch.labels


def test_batch_from_records_and_take():
    extractor = ShortCodeExtractor.prefix()
    records = [
        DocumentRecord(5, LongCode.from_hex(CODE_A), extractor.extract(LongCode.from_hex(CODE_A)), frozenset({"x"})),
        DocumentRecord(6, LongCode.from_hex(CODE_B), extractor.extract(LongCode.from_hex(CODE_B))),
    ]
    batch = DocumentBatch.from_records(records)
    assert batch.ids.tolist() == [5, 6]
    assert batch.labels == [frozenset({"x"}), frozenset()]
    assert batch.short_subcodes[0].tolist() == [0x0123, 0x4567, 0x89AB, 0xCDEF]
    taken = batch.take(np.array([1]))
    assert taken.ids.tolist() == [6]
    assert taken.long_code(0) == LongCode.from_hex(CODE_B)


def test_batch_rejects_mismatched_columns():
    with pytest.raises(ValueError):
        DocumentBatch(ids=np.arange(3, dtype=np.uint64), long_words=np.zeros((2, 4), dtype=np.uint64))
