import numpy as np
import pytest

from lapcompress.graph import NetworkGraph, build_laplacian, radius_for_mean_degree, random_geometric_graph
from lapcompress.spectral import eigenbasis

GEO_N = 200
GRAPH_SEED = 0

ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def two_node():
    return NetworkGraph(2, ((0, 1, 0.5), (1, 0, 0.5)))


@pytest.fixture
def cycle3():
    return NetworkGraph(3, ((0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)))


@pytest.fixture(scope="session")
def geo_graph():
    radius = radius_for_mean_degree(GEO_N, 10.0)
    return random_geometric_graph(GEO_N, radius, 0.8, seed=GRAPH_SEED)


@pytest.fixture(scope="session")
def geo_basis(geo_graph):
    return eigenbasis(build_laplacian(geo_graph))


def random_symmetric_graph(n, rng, density=0.5, max_in=0.9):
    """Connected symmetric graph with random weights and in-sums <= max_in."""
    while True:
        mask = np.triu(rng.random((n, n)) < density, 1)
        w = np.where(mask, rng.uniform(0.2, 1.0, (n, n)), 0.0)
        w = w + w.T
        if w.sum(axis=1).min() == 0:
            continue
        w *= max_in / w.sum(axis=1).max()
        g = NetworkGraph(n, tuple((i, j, w[j, i]) for i in range(n) for j in range(n) if w[j, i] > 0))
        lam = np.linalg.eigvalsh(build_laplacian(g))
        if lam[1] >= 0.02:
            return g
