import numpy as np
import pytest

from jitterloss import nn
from jitterloss.samplers import RngStream


@pytest.fixture
def rng():
    return RngStream(1234, 99)


@pytest.fixture
def small_model(rng):
    return nn.init_mlp([3, 5, 4, 3], rng)


@pytest.fixture
def small_batch():
    r = np.random.default_rng(0)
    return r.normal(size=(6, 3)), r.integers(0, 3, size=6)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: call with (ok, detail)."""

    def record(ok, detail=""):
        name = request.node.name
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
