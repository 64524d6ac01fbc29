import datetime

import numpy as np
import pytest

from gnarcast import CountyNetwork, NetworkTimeSeries


def make_net(ids, edges, mode="binary", attrs=None):
    return CountyNetwork(ids, edges, mode, node_attrs=attrs)


def random_digraph(n, edge_prob, seed, weighted=False):
    """Seeded random directed network on n nodes."""
    rng = np.random.default_rng(seed)
    ids = [f"{k:05d}" for k in range(n)]
    edges = []
    for a in range(n):
        for b in range(n):
            if a != b and rng.random() < edge_prob:
                mu = float(rng.integers(1, 20)) if weighted else 1.0
                edges.append((ids[a], ids[b], mu))
    mode = "commuters" if weighted else "binary"
    return CountyNetwork(ids, edges, mode)


def make_series(values, frequency="weekly", start=datetime.date(2020, 1, 6)):
    return NetworkTimeSeries(values=np.asarray(values, dtype=float),
                             frequency=frequency, start_date=start)


@pytest.fixture
def triangle_net():
    """Fully connected 3-node graph (both directions on every pair)."""
    ids = ["00001", "00002", "00003"]
    edges = [(a, b, 1.0) for a in ids for b in ids if a != b]
    return make_net(ids, edges)


@pytest.fixture
def directed_path_net():
    """1 -> 2 -> 3."""
    return make_net(["00001", "00002", "00003"],
                    [("00001", "00002", 1.0), ("00002", "00003", 1.0)])


@pytest.fixture
def undirected_path_net():
    """1 - 2 - 3 stored as two directed edges per link."""
    return make_net(
        ["00001", "00002", "00003"],
        [("00001", "00002", 1.0), ("00002", "00001", 1.0),
         ("00002", "00003", 1.0), ("00003", "00002", 1.0)])
