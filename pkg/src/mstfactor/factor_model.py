"""Per-asset multi-factor regressions and the return panels derived from them.

Every asset is regressed on an intercept plus the factor-score series::

    R_j(t) = alpha_j + sum_k beta_jk F_k(t) + eps_j(t)

From the fit we build the factor-explained panel, a fresh Gaussian noise
panel, their sum (the "estimated" returns) and the residual panel.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import solve_triangular
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_matrix
from .exceptions import DataError, SingularMatrixError
from .factor_analysis import FactorScores
from .market_data import ReturnPanel

NOISE_MODES = ("residual", "raw")
RANK_TOL = 1e-10


@dataclass(frozen=True)
class FactorModelFit:
    alpha: np.ndarray
    beta: np.ndarray
    residuals: np.ndarray
    r_squared: np.ndarray

    @property
    def n_factors(self) -> int:
        return self.beta.shape[1]

    def explained(self, factors) -> np.ndarray:
        return self.alpha + np.asarray(factors, dtype=float) @ self.beta.T


@dataclass(frozen=True)
class DerivedReturns:
    explained: np.ndarray
    random: np.ndarray
    combined: np.ndarray
    residual: np.ndarray
    seed: object
    noise_mode: str


def _factor_array(f) -> np.ndarray:
    if isinstance(f, FactorScores):
        return f.scores
    f = np.asarray(f, dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    return f


def _collinear_pair(x: np.ndarray) -> str:
    names = ["intercept"] + [f"factor_{k}" for k in range(1, x.shape[1])]
    best, pair = -1.0, (names[0], names[-1])
    for p, q in combinations(range(x.shape[1]), 2):
        a, b = x[:, p], x[:, q]
        if p == 0:
            # a factor collinear with the intercept is (nearly) constant
            score = 1.0 - np.std(b) / (np.sqrt(np.mean(b * b)) + 1e-300)
        else:
            sa, sb = np.std(a), np.std(b)
            score = abs(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb)) if sa * sb > 0 else 1.0
        if score > best:
            best, pair = score, (names[p], names[q])
    return f"{pair[0]} and {pair[1]}"


def ols_fit(factors, returns) -> FactorModelFit:
    """Least squares of every return column on ``[1, factors]`` via one QR."""
    y = np.asarray(returns, dtype=float)
    f = _factor_array(factors)
    t, k = f.shape
    if y.ndim != 2 or y.shape[0] != t:
        raise DataError(f"returns have {y.shape[0]} rows but factors have {t}")
    if k + 1 >= t:
        raise DataError(f"need more observations ({t}) than regressors plus one ({k + 2})")
    x = np.column_stack([np.ones(t), f])
    sv = np.linalg.svd(x, compute_uv=False)
    if sv[-1] <= RANK_TOL * sv[0]:
        raise SingularMatrixError(
            f"rank-deficient design: multicollinearity between {_collinear_pair(x)}"
        )
    q, r = np.linalg.qr(x)
    coef = solve_triangular(r, q.T @ y)
    resid = y - x @ coef
    ss_res = np.sum(resid**2, axis=0)
    ss_tot = np.sum((y - y.mean(axis=0)) ** 2, axis=0)
    return FactorModelFit(coef[0], coef[1:].T, resid, 1.0 - ss_res / ss_tot)


def fit(r: ReturnPanel, f) -> FactorModelFit:
    return ols_fit(f, r.returns)


def asset_rng(seed, j: int) -> np.random.Generator:
    """Independent generator for asset ``j`` under a user seed (int or int tuple)."""
    entropy = list(seed) if isinstance(seed, (tuple, list)) else seed
    return np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(j,)))


def noise_panel(moments_from: np.ndarray, seed, scale: float = 1.0, zero_mean: bool = False) -> np.ndarray:
    """Gaussian draws matching each column's mean and (scaled) sample std.

    Moments are taken column by column so asset ``j``'s draws depend only on
    its own column and ``(seed, j)``.
    """
    t, n = moments_from.shape
    out = np.empty((t, n))
    for j in range(n):
        col = moments_from[:, j]
        mean = 0.0 if zero_mean else col.mean()
        out[:, j] = mean + scale * col.std(ddof=1) * asset_rng(seed, j).standard_normal(t)
    return out


def derive_returns(
    r: ReturnPanel,
    fit: FactorModelFit,
    f,
    seed=42,
    noise_mode: str = "residual",
    noise_scale: float = 1.0,
) -> DerivedReturns:
    """Explained, random, combined and residual panels for one noise seed.

    ``noise_mode="residual"`` draws noise with the standard deviation of the
    residuals and mean zero (their mean is zero by construction), which
    preserves total variance; ``"raw"`` uses the mean and standard deviation
    of the returns themselves.
    """
    if noise_mode not in NOISE_MODES:
        raise DataError(f"invalid noise_mode {noise_mode!r}; expected one of {NOISE_MODES}")
    f = _factor_array(f)
    if f.shape[0] != r.n_obs or fit.alpha.shape[0] != r.n_assets:
        raise DataError("fit, factors and return panel do not match")
    explained = fit.explained(f)
    if noise_mode == "residual":
        random = noise_panel(fit.residuals, seed, noise_scale, zero_mean=True)
    else:
        random = noise_panel(r.returns, seed, noise_scale)
    return DerivedReturns(
        explained, random, explained + random, r.returns - explained, seed, noise_mode
    )


class MultiFactorModel(RegressorMixin, BaseEstimator):
    """Multi-output OLS of asset returns on factor scores.

    ``fit(F, R)`` takes factors ``F`` (T x K) and returns ``R`` (T x N);
    ``predict(F)`` gives the factor-explained returns. ``coef_`` has shape
    (N, K) and ``intercept_`` shape (N,), matching sklearn's linear models.
    """

    def __init__(self):
        pass

    def fit(self, X, y):
        f = as_matrix(X, name="factors")
        self.result_ = ols_fit(f, as_matrix(y, name="returns"))
        self.n_features_in_ = f.shape[1]
        self.intercept_ = self.result_.alpha
        self.coef_ = self.result_.beta
        self.residuals_ = self.result_.residuals
        self.r_squared_ = self.result_.r_squared
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return self.result_.explained(as_matrix(X, self.n_features_in_, "factors"))
