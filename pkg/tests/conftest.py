import sys

import numpy as np
import pytest

from tdaharq.channel import ChannelSpec
from tdaharq.codec import CodecBudget, DctCodec
from tdaharq.detector import calibrate
from tdaharq.synthetic import synthetic_corpus
from tdaharq.tda import TdaEncoder

CALIBRATION_SEED = 11


@pytest.fixture(scope="session")
def encoder():
    return TdaEncoder()


@pytest.fixture(scope="session")
def corpus():
    return synthetic_corpus(60, seed=CALIBRATION_SEED)


@pytest.fixture(scope="session")
def corpus_features(corpus, encoder):
    return np.array([encoder.features(img) for img in corpus])


@pytest.fixture(scope="session")
def budget():
    return CodecBudget.from_compression_dim(32, 32, 32)


@pytest.fixture(scope="session")
def model(corpus, corpus_features, encoder, budget):
    return calibrate(corpus, budget, ChannelSpec("awgn", 10.0, seed=CALIBRATION_SEED),
                     encoder=encoder, codec=DctCodec(), features=corpus_features)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "REPORT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
