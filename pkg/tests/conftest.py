import numpy as np
import pytest

from ltiverify.geometry import Polytope
from ltiverify.lti import ParameterDomain, laguerre_set
from ltiverify.logic import AtomicProposition, Letter


@pytest.fixture
def case_model():
    return laguerre_set(0.4, 2)


@pytest.fixture
def iota():
    return Letter("iota", (AtomicProposition("iota_hi", [1.0], 0.5),
                           AtomicProposition("iota_lo", [-1.0], 0.5)))


@pytest.fixture
def inputs():
    return Polytope.box([-0.2], [0.2])


@pytest.fixture
def domain():
    return ParameterDomain([-10.0, -10.0], [10.0, 10.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion and assert on it."""

    def record(name, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        _VERDICTS.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
