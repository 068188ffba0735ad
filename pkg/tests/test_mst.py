import itertools

import numpy as np
import pytest
from conftest import all_spanning_trees, brute_force_mst_weight, random_distance_matrix

from mstfactor.correlation import DistanceMatrix, correlation_matrix, distance_matrix
from mstfactor.exceptions import DataError
from mstfactor.market_data import ReturnPanel
from mstfactor.mst import (
    Tree,
    UnionFind,
    build_mst,
    degree_threshold_sets,
    mst_from_array,
    read_edges_csv,
    write_degrees_csv,
    write_edges_csv,
)


def dm(d):
    d = np.asarray(d, dtype=float)
    return DistanceMatrix(tuple(str(i) for i in range(len(d))), d)


def star(n):
    return Tree(tuple(str(i) for i in range(n)), tuple((0, j, 1.0) for j in range(1, n)))


def path(n):
    return Tree(tuple(str(i) for i in range(n)), tuple((j, j + 1, 1.0) for j in range(n - 1)))


def test_three_node_example():
    t = build_mst(dm([[0, 0.1, 0.2], [0.1, 0, 0.3], [0.2, 0.3, 0]]))
    assert t.edge_set() == {(0, 1), (0, 2)}
    assert t.total_weight == pytest.approx(0.3)


def test_cayley_count_for_oracle():
    assert sum(1 for _ in all_spanning_trees(6)) == 6**4


def test_equal_distances_give_lexicographic_star():
    n = 6
    d = np.ones((n, n)) - np.eye(n)
    t = build_mst(dm(d))
    assert t.edge_set() == {(0, j) for j in range(1, n)}


def test_six_node_brute_force():
    d = random_distance_matrix(6, np.random.default_rng(3))
    t = build_mst(dm(d))
    assert t.total_weight == brute_force_mst_weight(d)


def test_tree_invariants(rng):
    c = correlation_matrix(ReturnPanel.from_array(rng.standard_normal((60, 15))))
    d = distance_matrix(c)
    t = build_mst(d)
    assert len(t.edges) == 14
    assert t.degree.sum() == 2 * 14
    for a, b, w in t.edges:
        assert w == d.dist[a, b]
    assert all(list(nb) == sorted(nb) for nb in t.adjacency)


def test_cut_property(rng):
    for _ in range(20):
        n = int(rng.integers(4, 9))
        d = random_distance_matrix(n, rng)
        edges = mst_from_array(d).edge_set()
        for mask in range(1, 2 ** (n - 1)):
            side = {j for j in range(n) if mask >> j & 1}
            crossing = [(d[a, b], a, b) for a, b in itertools.combinations(range(n), 2)
                        if (a in side) != (b in side)]
            _, a, b = min(crossing)
            assert (a, b) in edges


def test_determinism(rng):
    d = random_distance_matrix(20, rng)
    assert mst_from_array(d).edges == mst_from_array(d.copy()).edges


def test_monotone_transform_invariance(rng):
    d = random_distance_matrix(12, rng)
    base = mst_from_array(d).edge_set()
    assert mst_from_array(np.exp(3 * d)).edge_set() == base
    rho = 1 - d**2 / 8  # strictly decreasing in d, so -rho is increasing
    assert mst_from_array(-rho).edge_set() == base


def test_invalid_trees_rejected():
    with pytest.raises(DataError, match="needs 2 edges"):
        Tree(("a", "b", "c"), ((0, 1, 1.0),))
    with pytest.raises(DataError, match="cycle"):
        Tree(("a", "b", "c", "d"), ((0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0)))


def test_union_find():
    uf = UnionFind(5)
    assert uf.union(0, 1) and uf.union(3, 4) and uf.union(1, 4)
    assert not uf.union(0, 3)
    assert uf.find(0) == uf.find(4) != uf.find(2)


def test_threshold_sets_star_and_path():
    s = degree_threshold_sets(star(4))
    assert s == {1: frozenset(range(4)), 2: frozenset({0}), 3: frozenset({0})}
    p = degree_threshold_sets(path(4))
    assert p == {1: frozenset(range(4)), 2: frozenset({1, 2})}


def test_threshold_sets_nested(rng):
    t = mst_from_array(random_distance_matrix(30, rng))
    sets = degree_threshold_sets(t)
    keys = sorted(sets)
    assert keys == list(range(1, int(t.degree.max()) + 1))
    assert all(sets[i + 1] <= sets[i] for i in keys[:-1])


def test_threshold_sets_plateau_above_second_degree():
    # one hub of degree 49, one node of degree 25: sets for i >= 26 all equal {hub}
    edges = [(0, j, 1.0) for j in range(1, 49)] + [(0, 49, 1.0)]
    edges += [(49, j, 1.0) for j in range(50, 74)]
    t = Tree(tuple(str(i) for i in range(74)), tuple(edges))
    assert sorted(t.degree)[-2:] == [25, 49]
    sets = degree_threshold_sets(t)
    assert all(sets[i] == frozenset({0}) for i in range(26, 50))
    assert sets[25] == frozenset({0, 49})


def test_csv_round_trip(tmp_path, rng):
    t = mst_from_array(random_distance_matrix(8, rng), [f"S{i}" for i in range(8)])
    write_edges_csv(tmp_path / "e.csv", t)
    write_degrees_csv(tmp_path / "d.csv", t)
    back = read_edges_csv(tmp_path / "e.csv", t.assets)
    assert back == t
    assert (tmp_path / "d.csv").read_text().splitlines()[0] == "asset,degree"
