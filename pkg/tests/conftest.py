import numpy as np
import pytest

from stdglab import FeSpace, build_unit_square_mesh


@pytest.fixture(scope="session")
def space8():
    return FeSpace(build_unit_square_mesh(8), 1)


@pytest.fixture(scope="session")
def space4_p2():
    return FeSpace(build_unit_square_mesh(4), 2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
