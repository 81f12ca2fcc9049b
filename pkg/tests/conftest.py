import numpy as np
import pytest

from shiftlab.spaces import SpaceKind, make_weights


@pytest.fixture
def bergman():
    def build(r=0.5, window=(-16, 16)):
        return make_weights(SpaceKind.bergman(r), window)
    return build


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        title, passed, detail = RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {key}. {title}: {detail}")
