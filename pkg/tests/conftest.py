import numpy as np
import pytest

from spiderwalk.randkit import SeedSpec, derive_stream, make_rng


@pytest.fixture
def rng(request):
    # one stream per test, keyed on the test name so reordering tests changes nothing
    key = sum(request.node.name.encode()) * 1_000_003 + len(request.node.name)
    return make_rng(derive_stream(SeedSpec(12345), key))


def se_band(p, n, k=3.0):
    return k * np.sqrt(p * (1 - p) / n)


# acceptance criteria register one summary line each; printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
