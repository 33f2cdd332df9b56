import numpy as np
import pytest

from cidnet.datasets import load_bundled
from cidnet.estimation import McmcConfig
from cidnet.graph import from_adjacency
from cidnet.models import ERParams, SBMParams, sample_network


@pytest.fixture(scope="session")
def karate():
    return load_bundled("karate")


@pytest.fixture(scope="session")
def divorce():
    return load_bundled("divorce")


@pytest.fixture
def quick():
    return McmcConfig(burn_in=100, draws=200, seed=1)


def er_network(n, p, seed, directed=False):
    return sample_network(ERParams(p, n), directed, np.random.default_rng(seed))


def planted_partition(n=40, within=0.9, between=0.05, seed=0, directed=False):
    z = np.repeat([0, 1], n // 2)
    M = np.array([[within, between], [between, within]])
    return sample_network(SBMParams(2, z, M), directed, np.random.default_rng(seed)), z


def network_with_counts(n, edges, directed=True, seed=0):
    """Random network on ``n`` nodes with exactly ``edges`` edges."""
    rng = np.random.default_rng(seed)
    if directed:
        rows, cols = np.nonzero(~np.eye(n, dtype=bool))
    else:
        rows, cols = np.triu_indices(n, 1)
    pick = rng.choice(rows.size, size=edges, replace=False)
    A = np.zeros((n, n), dtype=np.int8)
    A[rows[pick], cols[pick]] = 1
    if not directed:
        A = A | A.T
    return from_adjacency(A, directed)


# filled by tests/test_acceptance.py, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
