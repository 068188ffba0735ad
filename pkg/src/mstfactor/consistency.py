"""Survivor ratio: how many of a node's reference-tree neighbours are still its
neighbours in a candidate tree, averaged over nodes of degree >= i.

The reference tree decides eligibility and denominators, so the measure is
not symmetric in its arguments.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction

from .exceptions import DataError
from .mst import Tree


@dataclass(frozen=True)
class SurvivorCurve:
    thresholds: tuple[int, ...]
    ratios: tuple[float, ...]
    eligible_counts: tuple[int, ...]

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.thresholds, self.ratios))


def _check_pair(reference: Tree, candidate: Tree) -> None:
    if reference.assets != candidate.assets:
        raise DataError("survivor ratio needs both trees over the identical asset list")


def _overlaps(reference: Tree, candidate: Tree) -> list[tuple[int, int]]:
    """Per node: (shared neighbours, reference neighbours)."""
    return [
        (len(set(ref_nb).intersection(cand_nb)), len(ref_nb))
        for ref_nb, cand_nb in zip(reference.adjacency, candidate.adjacency)
    ]


def _ratio(overlaps, degree, threshold: int, pooled: bool) -> tuple[Fraction, int]:
    # nodes sharing a reference degree share a denominator, so sum per degree
    shared: dict[int, int] = {}
    count: dict[int, int] = {}
    for (s, n), k in zip(overlaps, degree):
        if k >= threshold:
            shared[n] = shared.get(n, 0) + s
            count[n] = count.get(n, 0) + 1
    eligible = sum(count.values())
    if pooled:
        value = Fraction(sum(shared.values()), sum(n * c for n, c in count.items()))
    else:
        value = sum((Fraction(s, n) for n, s in shared.items()), Fraction(0)) / eligible
    return value, eligible


def survivor_ratio_exact(
    reference: Tree, candidate: Tree, threshold: int, pooled: bool = False
) -> tuple[Fraction, int]:
    """Like :func:`survivor_ratio` but returns the ratio as an exact fraction."""
    _check_pair(reference, candidate)
    degree = reference.degree
    top = int(degree.max(initial=0))
    if not 1 <= threshold <= top:
        raise DataError(f"threshold {threshold} outside 1..{top} (max reference degree)")
    return _ratio(_overlaps(reference, candidate), degree, threshold, pooled)


def survivor_ratio(
    reference: Tree, candidate: Tree, threshold: int, pooled: bool = False
) -> tuple[float, int]:
    """Mean neighbour-overlap fraction over reference nodes with degree >= threshold.

    Returns ``(ratio, eligible_count)``. With ``pooled=True`` the shared
    neighbour counts and reference degrees are summed before dividing.
    """
    value, count = survivor_ratio_exact(reference, candidate, threshold, pooled)
    return float(value), count


def survivor_curve(
    reference: Tree,
    candidate: Tree,
    pooled: bool = False,
    thresholds=None,
) -> SurvivorCurve:
    """Survivor ratios for every threshold 1..max reference degree (or the given ones)."""
    _check_pair(reference, candidate)
    degree = reference.degree
    top = int(degree.max(initial=0))
    if thresholds is None:
        thresholds = range(1, top + 1)
    thresholds = tuple(int(i) for i in thresholds)
    for i in thresholds:
        if not 1 <= i <= top:
            raise DataError(f"threshold {i} outside 1..{top} (max reference degree)")
    overlaps = _overlaps(reference, candidate)
    ratios, counts = [], []
    for i in thresholds:
        value, count = _ratio(overlaps, degree, i, pooled)
        ratios.append(float(value))
        counts.append(count)
    return SurvivorCurve(thresholds, tuple(ratios), tuple(counts))


def write_curve_csv(path, curve: SurvivorCurve) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "ratio", "eligible_count"])
        for i, r, c in zip(curve.thresholds, curve.ratios, curve.eligible_counts):
            w.writerow([i, repr(r), c])
