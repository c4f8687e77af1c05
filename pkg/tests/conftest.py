import os
import sys
import tempfile
from pathlib import Path

# Allow imports from project root; keep test logs out of the working tree
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
os.environ.setdefault("HAMSEARCH_LOG_DIR", os.path.join(tempfile.gettempdir(), "hamsearch-test-logs"))

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from src.components.codes import LongCode, NUM_WORDS
from src.components.documents import DocumentBatch
from src.components.search_index import IndexConfig, SearchIndex
from src.components.synthetic import SyntheticConfig, generate_synthetic


settings.register_profile("dev", max_examples=50, deadline=None)
settings.register_profile(
    "ci", max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "dev"))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: large-corpus test, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def random_words(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2**64, size=(n, NUM_WORDS), dtype=np.uint64)


def random_long(rng: np.random.Generator) -> LongCode:
    return LongCode(tuple(int(w) for w in random_words(rng, 1)[0]))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def labeled_corpus():
    """(documents, queries): 20 classes x 100 documents, 5 held-out queries per class."""
    return generate_synthetic(
        SyntheticConfig(num_classes=20, codes_per_class=100, flip_probability=0.05, queries_per_class=5, seed=7)
    )


@pytest.fixture(scope="session")
def labeled_index(labeled_corpus):
    documents, _ = labeled_corpus
    index = SearchIndex(IndexConfig(radius=2, long_postings=True))
    index.index_documents(documents)
    return index


@pytest.fixture
def small_batch(rng):
    return DocumentBatch(ids=np.arange(50, dtype=np.uint64), long_words=random_words(rng, 50))
