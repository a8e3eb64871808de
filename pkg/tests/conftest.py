import numpy as np
import pytest

from holonet import DiGraph, TwoScaleGraph, build_graph

DATA_DIR = None  # resolved in fixture


@pytest.fixture
def path_graph():
    """Directed path on 3 nodes: 0 -> 1 -> 2, unit weights."""
    return build_graph([(0, 1, 1.0), (1, 2, 1.0)], n_nodes=3)


@pytest.fixture
def overlap_graph():
    """Six nodes whose maximal reachable sets are {0,1,2} and {1,2,3,4,5}."""
    return build_graph(
        [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (5, 1, 1.0)],
        n_nodes=6,
    )


@pytest.fixture
def two_pair():
    """Two balanced high-weight pairs joined by a single regular edge 1 -> 2."""
    mu = np.ones(4)
    w_high = np.zeros((4, 4))
    w_high[0, 1] = w_high[1, 0] = 1.0
    w_high[2, 3] = w_high[3, 2] = 1.0
    w_regular = np.zeros((4, 4))
    w_regular[2, 1] = 0.7
    return TwoScaleGraph(node_weights=mu, w_regular=w_regular, w_high=w_high)


@pytest.fixture
def methane():
    """Heavy center (mu = 6) with four satellites (mu = 1), all edges high
    tier and symmetric."""
    mu = np.array([6.0, 1.0, 1.0, 1.0, 1.0])
    w_high = np.zeros((5, 5))
    for sat in range(1, 5):
        w_high[0, sat] = w_high[sat, 0] = 1.0
    return TwoScaleGraph(node_weights=mu, w_regular=np.zeros((5, 5)),
                         w_high=w_high)


@pytest.fixture
def data_dir(request):
    return request.config.rootpath / "data"


def random_digraph(rng, n, density=0.3, weighted_nodes=False) -> DiGraph:
    w = rng.uniform(0.0, 1.0, (n, n))
    w[rng.uniform(size=(n, n)) > density] = 0.0
    np.fill_diagonal(w, 0.0)
    mu = rng.uniform(0.5, 2.0, n) if weighted_nodes else np.ones(n)
    return DiGraph(node_weights=mu, adjacency=w)
