"""Shared fixtures: the benchmark scenario and the three closed-loop runs
(noise-free fast gains, slow gains, noisy) that most integration tests and
all acceptance criteria read from.  The runs are session-scoped because each
one integrates 1e5 RK4 steps of a 131-dimensional composite state.
"""

import numpy as np
import pytest

from ltvobs import IntegrationConfig, make_example_scenario, run_closed_loop


@pytest.fixture(scope="session")
def sc_fast():
    return make_example_scenario()


@pytest.fixture(scope="session")
def sc_slow():
    return make_example_scenario(slow_gains=True)


@pytest.fixture(scope="session")
def sc_noisy():
    return make_example_scenario(noise_amplitude=0.05, noise_seed=0)


@pytest.fixture(scope="session")
def default_cfg():
    return IntegrationConfig(h=1e-3, t_final=100.0, record_stride=100)


@pytest.fixture(scope="session")
def res_fast(sc_fast, default_cfg):
    return run_closed_loop(sc_fast, default_cfg)


@pytest.fixture(scope="session")
def res_slow(sc_slow, default_cfg):
    return run_closed_loop(sc_slow, default_cfg)


@pytest.fixture(scope="session")
def res_noisy(sc_noisy, default_cfg):
    return run_closed_loop(sc_noisy, default_cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance-criteria table, which is otherwise captured."""
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
