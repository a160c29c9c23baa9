import sys

import numpy as np
import pytest

from gazectl.kinematics import dreamer_model


@pytest.fixture(scope="session")
def model():
    return dreamer_model()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    # only when the acceptance module was part of the session
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance.RESULTS:
        terminalreporter.write_line(line)
