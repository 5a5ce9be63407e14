import numpy as np
import pytest

from comfair.graph import Graph


def make_graph(n, edges, labels=None, sensitive=None, features=None, k=3, seed=0):
    rng = np.random.default_rng(seed)
    if features is None:
        features = rng.standard_normal((n, k))
    if labels is None:
        labels = rng.integers(0, 2, n)
    if sensitive is None:
        sensitive = rng.integers(0, 2, n)
    return Graph.from_edges(n, edges, features, labels, sensitive)


def random_graph(n, num_edges, seed=0):
    rng = np.random.default_rng(seed)
    edges = set()
    while len(edges) < num_edges:
        u, v = rng.integers(0, n, 2)
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return make_graph(n, edges, seed=seed)


@pytest.fixture
def triangle():
    return make_graph(3, [(0, 1), (1, 2), (0, 2)])
