import numpy as np
import pytest

from margin_sgd.dist import MarginDistribution
from margin_sgd.kernel import ExponentialKernel
from margin_sgd.popridge import quad_grid, solve_glambda


@pytest.fixture(scope="session")
def d():
    return MarginDistribution(0.05, 0.0)


@pytest.fixture(scope="session")
def k():
    return ExponentialKernel(1.0)


@pytest.fixture(scope="session")
def grid(d):
    return quad_grid(d, 20, 8)


@pytest.fixture(scope="session")
def g_lambda(d, k, grid):
    return solve_glambda(d, k, 0.01, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


VERDICTS: dict[int, tuple[bool, str]] = {}


def record_verdict(number: int, ok: bool, detail: str) -> None:
    VERDICTS[number] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(VERDICTS):
        ok, detail = VERDICTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
