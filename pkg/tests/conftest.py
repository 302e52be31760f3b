import numpy as np
import pytest

from d2p2.data import generate_synthetic, train_test_split


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def blobs():
    """Desk-scale logistic task used by the optimizer and harness tests."""
    return train_test_split(generate_synthetic(4000, 50, 4.0, seed=0))


def pytest_configure(config):
    config._acceptance = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = sorted(getattr(config, "_acceptance", []))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in rows:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:2d} {name}: {detail}")
