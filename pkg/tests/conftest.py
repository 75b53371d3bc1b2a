import numpy as np
import pytest

from loclets.graph import dense_eigendecomposition, laplacian, random_graph, synthetic_swissroll

# lines collected by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def swissroll():
    g = synthetic_swissroll(1000, 10, seed=1)
    L = laplacian(g)
    return g, L, dense_eigendecomposition(L)


@pytest.fixture(scope="session")
def small():
    g = random_graph(200, seed=11)
    L = laplacian(g)
    return g, L, dense_eigendecomposition(L)


@pytest.fixture(scope="session")
def tiny():
    g = random_graph(50, p=0.1, seed=5)
    L = laplacian(g)
    return g, L, dense_eigendecomposition(L)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
