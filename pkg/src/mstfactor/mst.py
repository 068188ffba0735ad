"""Minimal spanning trees over a distance matrix.

Kruskal's algorithm with a total order on edges: ``(weight, i, j)`` with
``i < j``. Equal-weight edges are therefore resolved lexicographically, so
identical inputs always give identical trees.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .correlation import DistanceMatrix
from .exceptions import DataError


class UnionFind:
    """Disjoint sets with path compression and union by rank."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


@dataclass(frozen=True)
class Tree:
    """A spanning tree on ``len(assets)`` nodes.

    ``edges`` holds ``(a, b, weight)`` with ``a < b`` in the order they were
    accepted; ``adjacency[j]`` is the sorted tuple of neighbours of node ``j``.
    """

    assets: tuple[str, ...]
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        n = len(self.assets)
        edges = tuple((min(a, b), max(a, b), float(w)) for a, b, w in self.edges)
        if n < 1:
            raise DataError("a tree needs at least one node")
        if len(edges) != n - 1:
            raise DataError(f"a tree on {n} nodes needs {n - 1} edges, got {len(edges)}")
        uf = UnionFind(n)
        for a, b, _ in edges:
            if not (0 <= a < n and 0 <= b < n) or a == b:
                raise DataError(f"invalid edge ({a}, {b})")
            if not uf.union(a, b):
                raise DataError(f"edge ({a}, {b}) closes a cycle")
        adj: list[list[int]] = [[] for _ in range(n)]
        for a, b, _ in edges:
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(self, "assets", tuple(self.assets))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "_adjacency", tuple(tuple(sorted(x)) for x in adj))

    @property
    def n_nodes(self) -> int:
        return len(self.assets)

    @property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        return self._adjacency

    @property
    def degree(self) -> np.ndarray:
        return np.array([len(nb) for nb in self._adjacency], dtype=int)

    @property
    def total_weight(self) -> float:
        return math.fsum(w for _, _, w in self.edges)

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset((a, b) for a, b, _ in self.edges)

    def neighbors(self, j: int) -> frozenset[int]:
        return frozenset(self._adjacency[j])

    @classmethod
    def from_named_edges(
        cls, assets: Sequence[str], edges: Iterable[tuple[str, str, float]]
    ) -> "Tree":
        index = {a: i for i, a in enumerate(assets)}
        try:
            idx = [(index[a], index[b], w) for a, b, w in edges]
        except KeyError as exc:
            raise DataError(f"edge references unknown asset {exc.args[0]!r}") from None
        return cls(tuple(assets), tuple(idx))


def _kruskal(dist: np.ndarray) -> list[tuple[int, int, float]]:
    n = dist.shape[0]
    iu, ju = np.triu_indices(n, 1)
    w = dist[iu, ju]
    # triu_indices is already lexicographic, a stable sort keeps that among ties
    order = np.argsort(w, kind="stable")
    uf = UnionFind(n)
    edges = []
    for e in order:
        a, b = int(iu[e]), int(ju[e])
        if uf.union(a, b):
            edges.append((a, b, float(w[e])))
            if len(edges) == n - 1:
                break
    return edges


def build_mst(d: DistanceMatrix) -> Tree:
    if d.n_assets < 2:
        raise DataError("need at least 2 assets to build a tree")
    return Tree(d.assets, tuple(_kruskal(d.dist)))


def mst_from_array(dist, assets: Sequence[str] | None = None) -> Tree:
    """Kruskal on a raw symmetric weight matrix (weights need not be distances)."""
    dist = np.asarray(dist, dtype=float)
    if assets is None:
        assets = [str(j) for j in range(dist.shape[0])]
    return Tree(tuple(assets), tuple(_kruskal(dist)))


def degree_threshold_sets(t: Tree) -> dict[int, frozenset[int]]:
    """``{i: {j : degree(j) >= i}}`` for ``i = 1 .. max degree``."""
    deg = t.degree
    return {
        i: frozenset(int(j) for j in np.flatnonzero(deg >= i))
        for i in range(1, int(deg.max(initial=0)) + 1)
    }


def write_edges_csv(path, t: Tree) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["asset_a", "asset_b", "distance"])
        for a, b, dist in t.edges:
            w.writerow([t.assets[a], t.assets[b], repr(dist)])


def write_degrees_csv(path, t: Tree) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["asset", "degree"])
        for a, k in zip(t.assets, t.degree):
            w.writerow([a, int(k)])


def read_edges_csv(path, assets: Sequence[str] | None = None) -> Tree:
    """Load an edge list written by :func:`write_edges_csv`.

    Nodes are numbered in order of first appearance unless ``assets`` fixes
    the ordering (needed when two trees must share indices).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"asset_a", "asset_b", "distance"} <= set(
            reader.fieldnames
        ):
            raise DataError(f"{path}: expected columns asset_a,asset_b,distance")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append((row["asset_a"], row["asset_b"], float(row["distance"])))
            except (TypeError, ValueError):
                raise DataError(f"{path} line {lineno}: bad distance {row['distance']!r}") from None
    seen: dict[str, None] = {}
    for a, b, _ in rows:
        seen.setdefault(a)
        seen.setdefault(b)
    if assets is None:
        assets = list(seen)
    elif set(seen) != set(assets):
        raise DataError(f"{path}: asset set differs from the expected asset list")
    return Tree.from_named_edges(assets, rows)
