"""sklearn-style wrapper for the correlation -> distance -> MST chain."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_panel
from .consistency import survivor_curve
from .correlation import correlation_matrix, distance_matrix
from .mst import build_mst


class CorrelationMST(BaseEstimator):
    """Fit a minimal spanning tree to the correlation distances of return columns.

    After ``fit`` the estimator exposes ``correlation_``, ``distance_`` (both
    N x N arrays), ``tree_`` and ``degree_``. ``score(X)`` returns the
    survivor ratio of the tree fitted on ``X`` against this one, at
    ``threshold``.
    """

    def __init__(self, threshold=1, pooled=False):
        self.threshold = threshold
        self.pooled = pooled

    def fit(self, X, y=None):
        panel = as_panel(X)
        corr = correlation_matrix(panel)
        dist = distance_matrix(corr)
        self.assets_ = panel.assets
        self.n_features_in_ = panel.n_assets
        self.correlation_ = corr.rho
        self.distance_ = dist.dist
        self.tree_ = build_mst(dist)
        self.degree_ = self.tree_.degree
        return self

    def adjacency_matrix(self) -> np.ndarray:
        check_is_fitted(self, "tree_")
        a = np.zeros((self.n_features_in_, self.n_features_in_), dtype=int)
        for i, j, _ in self.tree_.edges:
            a[i, j] = a[j, i] = 1
        return a

    def score(self, X, y=None) -> float:
        check_is_fitted(self, "tree_")
        other = CorrelationMST().fit(as_panel(X, self.assets_)).tree_
        curve = survivor_curve(self.tree_, other, self.pooled, [self.threshold])
        return curve.ratios[0]
