import numpy as np
import pytest

from src.exception import ConfigError
from src.components.synthetic import SyntheticConfig, generate_synthetic, pack_bits
from src.components.partitioning import unpack_bits


def test_same_seed_same_corpus():
    config = SyntheticConfig(num_classes=5, codes_per_class=20, queries_per_class=2, seed=9)
    docs_a, queries_a = generate_synthetic(config)
    docs_b, queries_b = generate_synthetic(config)
    assert np.array_equal(docs_a.long_words, docs_b.long_words)
    assert np.array_equal(queries_a.long_words, queries_b.long_words)
    assert docs_a.labels == docs_b.labels


def test_shapes_ids_and_labels():
    docs, queries = generate_synthetic(SyntheticConfig(num_classes=4, codes_per_class=10, queries_per_class=3, seed=1))
    assert len(docs) == 40
    assert len(queries) == 12
    assert docs.ids.tolist() == list(range(40))
    assert queries.ids.tolist() == list(range(40, 52))
    assert docs.labels[0] == frozenset({"0"})
    assert docs.labels[39] == frozenset({"3"})
    assert queries.labels[0] == frozenset({"0"})


def test_within_class_codes_are_closer_than_across():
    docs, _ = generate_synthetic(SyntheticConfig(num_classes=2, codes_per_class=50, flip_probability=0.05, seed=4))
    distances = np.bitwise_count(docs.long_words[:, None, :] ^ docs.long_words[None, :, :]).sum(axis=2)
    within = distances[:50, :50][np.triu_indices(50, 1)].mean()
    across = distances[:50, 50:].mean()
    assert within == pytest.approx(2 * 256 * 0.05 * 0.95, rel=0.15)
    assert across == pytest.approx(128, rel=0.15)


def test_extra_labels_keep_the_class_label():
    docs, _ = generate_synthetic(SyntheticConfig(num_classes=10, codes_per_class=30, extra_labels_max=3, seed=2))
    for row, labels in enumerate(docs.labels):
        assert str(row // 30) in labels
        assert len(labels) <= 4
    assert any(len(labels) > 1 for labels in docs.labels)


def test_pack_bits_puts_column_zero_in_the_top_bit():
    bits = np.zeros((1, 256), dtype=np.uint8)
    bits[0, 0] = 1
    bits[0, 255] = 1
    words = pack_bits(bits)
    assert words.tolist() == [[1 << 63, 0, 0, 1]]
    assert np.array_equal(unpack_bits(words), bits)


@pytest.mark.parametrize(
    "kwargs",
    [{"flip_probability": 0.5}, {"flip_probability": -0.1}, {"num_classes": 0}, {"extra_labels_max": -1}],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SyntheticConfig(**kwargs)
