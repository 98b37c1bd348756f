import pathlib

import numpy as np
import pytest

from oversmooth import load_graph, load_labels

REPO = pathlib.Path(__file__).resolve().parent.parent
DATA = REPO / "data"


@pytest.fixture(scope="session")
def sample_graph():
    g, _ = load_graph(DATA / "sample_edges.txt")
    return g


@pytest.fixture(scope="session")
def sample_labels(sample_graph):
    labels, masks, _ = load_labels(DATA / "sample_labels.txt",
                                   sample_graph.node_count)
    return labels, masks


@pytest.fixture(scope="session")
def sample_edge_path():
    return DATA / "sample_edges.txt"


@pytest.fixture(scope="session")
def sample_label_path():
    return DATA / "sample_labels.txt"


def random_graph(rng: np.random.Generator, v: int, p: float = 0.2):
    """Erdos-Renyi style test graph; may be disconnected."""
    from oversmooth import build_from_edges
    iu = np.triu_indices(v, k=1)
    mask = rng.random(iu[0].size) < p
    edges = np.column_stack((iu[0][mask], iu[1][mask]))
    return build_from_edges(edges, v)
