import numpy as np
import pytest

from stepsynth.database import build
from stepsynth.synthgen import DEFAULT_COUNTS, gen_database


@pytest.fixture(scope="session")
def corpus600():
    """Default-scale synthetic corpus: 300 generated clips plus mirrors."""
    return gen_database(DEFAULT_COUNTS, seed=7)


@pytest.fixture(scope="session")
def db600(corpus600):
    return build(corpus600)


@pytest.fixture(scope="session")
def corpus_small():
    """Fast corpus for unit tests: 8 clips per family plus mirrors."""
    counts = {fam: 8 for fam in DEFAULT_COUNTS}
    return gen_database(counts, seed=3)


@pytest.fixture(scope="session")
def db_small(corpus_small):
    return build(corpus_small)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
