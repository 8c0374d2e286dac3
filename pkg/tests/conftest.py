import numpy as np
import pytest

from freegraph import corpus
from freegraph.graph import build_directed_double

CORPUS = corpus.names()


@pytest.fixture(params=CORPUS)
def corpus_dd(request):
    return build_directed_double(corpus.load(request.param))


@pytest.fixture
def dd_of():
    def make(name):
        return build_directed_double(corpus.load(name))

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
