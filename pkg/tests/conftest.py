import numpy as np
import pytest

from lamegap.elasticity import LameParameters
from lamegap.geometry import curvilinear_square_preset
from lamegap.mesh import MeshParams, build_mesh


@pytest.fixture(scope="session")
def unit_lame():
    return LameParameters(1.0, 1.0)


@pytest.fixture(scope="session")
def square_001():
    return curvilinear_square_preset(1.0, 1.0, 0.5, 0.01, 0.25)


@pytest.fixture(scope="session")
def mesh_001(square_001):
    return build_mesh(square_001, MeshParams())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# verdict lines collected by test_acceptance, echoed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for i in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[i])
