import numpy as np
import pytest

from ddhmbir.forward import PropagationOperator
from ddhmbir.grid import ApertureMask


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def full_operator(n, curvature=0.0):
    return PropagationOperator(ApertureMask.full_grid(n), curvature)


def circle_operator(n, diameter=None, curvature=0.0):
    return PropagationOperator(ApertureMask.circle(n, diameter), curvature)


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for line in sorted(results, key=lambda s: int(s.split("criterion")[1].split("(")[0])):
            terminalreporter.write_line(line)
