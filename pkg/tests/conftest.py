import numpy as np
import pytest
from hypothesis import settings

from feasgov.scenario import load_scenario, synthesize

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def di_y1():
    return synthesize(load_scenario("di_y1"))


@pytest.fixture(scope="session")
def di_y3():
    return synthesize(load_scenario("di_y3"))


@pytest.fixture(scope="session")
def fig2():
    return synthesize(load_scenario("fig2_integrator"))


@pytest.fixture(scope="session")
def vehicle():
    return synthesize(load_scenario("vehicle"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, printed after the run whatever the outcome
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
