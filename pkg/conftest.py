"""共享测试夹具。"""
import json

import numpy as np
import pytest

from polytail.database import ArchiveDatabase
from polytail.poly import PoweredHyperedge, PoweredPolynomial, complete_multilinear, linear
from polytail.rv import bernoulli, rademacher


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 较大的验收扫描")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def archive(tmp_path):
    return ArchiveDatabase(str(tmp_path / "polytail.db"))


@pytest.fixture
def powered_example():
    """Y₀³Y₁³ + Y₁²"""
    return PoweredPolynomial(2, [
        (PoweredHyperedge((0, 1), (3, 3)), 1.0),
        (PoweredHyperedge((1,), (2,)), 1.0),
    ])


@pytest.fixture
def linear4():
    return linear(4), [bernoulli(0.5)] * 4


@pytest.fixture
def complete42():
    return complete_multilinear(4, 2), [bernoulli(0.5)] * 4


@pytest.fixture
def rademacher_pair():
    """Y₀Y₁，Rademacher。"""
    return PoweredPolynomial(2, [(PoweredHyperedge((0, 1), (1, 1)), 1.0)]), [rademacher()] * 2


@pytest.fixture
def write_json(tmp_path):
    def _write(name, payload):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return str(path)

    return _write
