import numpy as np
import pytest

from relsurf.fr import build_fr
from relsurf.randomized import seed_from_env


@pytest.fixture(scope="session")
def fr_scenario():
    return build_fr()


@pytest.fixture
def rng(request):
    # distinct stream per test, reproducible under RELSURF_SEED
    return np.random.default_rng([seed_from_env(), abs(hash(request.node.name)) % 2**32])


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
