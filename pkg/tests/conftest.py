import itertools
from fractions import Fraction

import numpy as np
import pytest

from mstfactor.market_data import ReturnPanel


def prufer_to_edges(seq, n):
    """Decode a Prufer sequence into the edge list of a labeled tree."""
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = min(i for i in range(n) if degree[i] == 1)
        edges.append((min(leaf, x), max(leaf, x)))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = [i for i in range(n) if degree[i] == 1]
    edges.append((u, v))
    return edges


def all_spanning_trees(n):
    """Every labeled spanning tree of K_n (n^(n-2) of them, Cayley)."""
    if n == 2:
        yield [(0, 1)]
        return
    for seq in itertools.product(range(n), repeat=n - 2):
        yield prufer_to_edges(seq, n)


def brute_force_mst_weight(dist):
    n = dist.shape[0]
    return min(sum(dist[a, b] for a, b in t) for t in all_spanning_trees(n))


def naive_survivor(ref_edges, cand_edges, n, threshold, pooled=False):
    """Survivor ratio straight from two edge lists, as an exact fraction."""
    ref = {j: set() for j in range(n)}
    cand = {j: set() for j in range(n)}
    for a, b in ref_edges:
        ref[a].add(b)
        ref[b].add(a)
    for a, b in cand_edges:
        cand[a].add(b)
        cand[b].add(a)
    nodes = [j for j in range(n) if len(ref[j]) >= threshold]
    if pooled:
        return Fraction(sum(len(ref[j] & cand[j]) for j in nodes), sum(len(ref[j]) for j in nodes))
    return sum(Fraction(len(ref[j] & cand[j]), len(ref[j])) for j in nodes) / len(nodes)


def random_tree_edges(n, rng):
    seq = rng.integers(0, n, size=n - 2) if n > 2 else []
    return prufer_to_edges([int(x) for x in seq], n)


def random_distance_matrix(n, rng):
    d = rng.uniform(0.0, 2.0, size=(n, n))
    d = np.triu(d, 1)
    return d + d.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def noise_panel(rng):
    return ReturnPanel.from_array(rng.standard_normal((50, 3)))
