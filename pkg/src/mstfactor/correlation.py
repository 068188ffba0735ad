"""Pearson cross-correlations between return series and the metric distance
``d = sqrt(2 (1 - rho))`` derived from them."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import DataError, ModelError
from .market_data import ReturnPanel

CLAMP_TOL = 1e-12
DIAG_TOL = 1e-12


def _symmetric_square(a, name: str) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DataError(f"{name} contains non-finite values")
    if not np.array_equal(a, a.T):
        raise DataError(f"{name} must be exactly symmetric")
    return a


@dataclass(frozen=True)
class CorrelationMatrix:
    assets: tuple[str, ...]
    rho: np.ndarray

    def __post_init__(self):
        rho = _symmetric_square(self.rho, "correlation matrix")
        if rho.shape[0] != len(self.assets):
            raise DataError("correlation matrix size does not match asset list")
        if np.max(np.abs(np.diag(rho) - 1.0), initial=0.0) > DIAG_TOL:
            raise DataError("correlation matrix must have a unit diagonal")
        if np.max(np.abs(rho), initial=0.0) > 1.0:
            raise DataError("correlation entries must lie in [-1, 1]")
        rho.setflags(write=False)
        object.__setattr__(self, "assets", tuple(self.assets))
        object.__setattr__(self, "rho", rho)

    @property
    def n_assets(self) -> int:
        return len(self.assets)


@dataclass(frozen=True)
class DistanceMatrix:
    assets: tuple[str, ...]
    dist: np.ndarray

    def __post_init__(self):
        dist = _symmetric_square(self.dist, "distance matrix")
        if dist.shape[0] != len(self.assets):
            raise DataError("distance matrix size does not match asset list")
        if np.any(np.diag(dist) != 0):
            raise DataError("distance matrix must have a zero diagonal")
        if dist.min(initial=0.0) < 0 or dist.max(initial=0.0) > 2:
            raise DataError("distances must lie in [0, 2]")
        dist.setflags(write=False)
        object.__setattr__(self, "assets", tuple(self.assets))
        object.__setattr__(self, "dist", dist)

    @property
    def n_assets(self) -> int:
        return len(self.assets)


def clamp_unit(rho: np.ndarray, tol: float = CLAMP_TOL) -> np.ndarray:
    """Clip floating-point dust outside [-1, 1]; larger overshoot is a bug."""
    over = np.max(np.abs(rho), initial=0.0) - 1.0
    if over > tol:
        raise ModelError(f"correlation overshoots [-1, 1] by {over:.3e} (> {tol:g})")
    return np.clip(rho, -1.0, 1.0)


def correlation_array(x: np.ndarray) -> np.ndarray:
    """Two-pass Pearson correlation of the columns of ``x``.

    Centering happens before the products are formed, which avoids the
    cancellation of the textbook ``<xy> - <x><y>`` form. Both numerator and
    denominator carry the same ``1/T`` factor.
    """
    x = np.asarray(x, dtype=float)
    t = x.shape[0]
    xc = x - x.mean(axis=0)
    var = np.einsum("ij,ij->j", xc, xc) / t
    if np.any(var <= 0):
        j = int(np.argmin(var))
        raise DataError(f"zero-variance column {j}; correlation undefined")
    z = xc / np.sqrt(var)
    rho = (z.T @ z) / t
    # mirror the upper triangle so each pair is computed once
    rho = np.triu(rho, 1)
    rho = rho + rho.T
    np.fill_diagonal(rho, 1.0)
    return clamp_unit(rho)


def correlation_matrix(r: ReturnPanel) -> CorrelationMatrix:
    return CorrelationMatrix(r.assets, correlation_array(r.returns))


def distance_array(rho: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.maximum(2.0 * (1.0 - np.asarray(rho, dtype=float)), 0.0))
    np.fill_diagonal(d, 0.0)
    return d


def distance_matrix(c: CorrelationMatrix) -> DistanceMatrix:
    return DistanceMatrix(c.assets, distance_array(c.rho))


def write_matrix_csv(path, assets: Sequence[str], matrix: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["asset", *assets])
        for a, row in zip(assets, np.asarray(matrix, dtype=float)):
            w.writerow([a, *(repr(float(v)) for v in row)])
