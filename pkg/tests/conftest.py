import numpy as np
import pytest

from model_handler.mmp_table import MatchedBinaryTable
from model_handler.stochastics import RngStream


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return RngStream(12345)


@pytest.fixture
def make_table():
    def _make(rows, labels=None):
        x = np.asarray(rows, dtype=np.int8)
        K = x.shape[1] // 2
        return MatchedBinaryTable(x, labels or tuple(f"s{k + 1}" for k in range(K)))

    return _make
