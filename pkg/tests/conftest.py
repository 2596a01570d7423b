import numpy as np
import pytest

from mgembed import Graph, GraphSet


def random_symmetric(rng, n, weighted=True, loops=True):
    """Dense random symmetric matrix, binary unless weighted."""
    if weighted:
        a = rng.standard_normal((n, n))
    else:
        a = (rng.random((n, n)) < 0.4).astype(float)
    a = np.triu(a)
    a = a + np.triu(a, 1).T
    if not loops:
        np.fill_diagonal(a, 0.0)
    return a


def random_graph_set(rng, m, n, weighted=True, loops=True):
    return GraphSet([
        Graph.from_dense(random_symmetric(rng, n, weighted, loops),
                         weighted=weighted, loops_allowed=loops)
        for _ in range(m)
    ])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
