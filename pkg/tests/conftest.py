import numpy as np
import pytest

from sublap.lattice import GroupSpec, build_lattice
from sublap.spectral import decompose

# (criterion number, title, passed, detail) appended by test_acceptance
ACCEPTANCE = []


@pytest.fixture(scope="session")
def heis16():
    g = build_lattice(GroupSpec("heisenberg1", 8.0, 16))
    return g, decompose(g, "dense")


@pytest.fixture(scope="session")
def heis12():
    g = build_lattice(GroupSpec("heisenberg1", 8.0, 12))
    return g, decompose(g, "dense")


@pytest.fixture(scope="session")
def eucl1():
    g = build_lattice(GroupSpec("euclidean", 2 * np.pi, 64, 1))
    return g, decompose(g, "dense")


@pytest.fixture(scope="session")
def eucl2():
    g = build_lattice(GroupSpec("euclidean", 1.0, 32, 2))
    return g, decompose(g, "dense")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:>2}. {title}: {detail}")
