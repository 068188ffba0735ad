"""Input coercion shared by the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .market_data import ReturnPanel


def as_panel(X, assets=None) -> ReturnPanel:
    """Accept a ReturnPanel, a DataFrame, or any 2-D array-like of returns."""
    if isinstance(X, ReturnPanel):
        return X
    if assets is None and hasattr(X, "columns"):
        assets = [str(c) for c in X.columns]
    arr = check_array(X, dtype=np.float64, ensure_min_samples=2, ensure_min_features=1)
    return ReturnPanel.from_array(arr, assets)


def as_matrix(X, n_features: int | None = None, name: str = "X") -> np.ndarray:
    if isinstance(X, ReturnPanel):
        X = X.returns
    arr = check_array(X, dtype=np.float64, ensure_min_features=0)
    if n_features is not None and arr.shape[1] != n_features:
        raise ValueError(f"{name} has {arr.shape[1]} columns, expected {n_features}")
    return arr
