"""Principal-component factor analysis with varimax rotation.

Factors are extracted from the correlation matrix of returns: the top ``K``
eigenvectors scaled by the root of their eigenvalues give unrotated
loadings, varimax rotates them toward simple structure, and factor scores
are estimated per time step by the regression (Thomson) method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_matrix, as_panel
from .correlation import CorrelationMatrix, correlation_matrix
from .exceptions import ConvergenceError, DataError, NoSignificantFactorsError, SingularMatrixError
from .market_data import ReturnPanel

SCORE_METHODS = ("regression", "projection")
SINGULAR_TOL = 1e-10


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues sorted descending with matching unit eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def loadings(self, k: int) -> np.ndarray:
        """Unrotated principal-component loadings ``v_k * sqrt(lambda_k)``, N x k."""
        lam = np.clip(self.eigenvalues[:k], 0.0, None)
        return self.eigenvectors[:, :k] * np.sqrt(lam)


@dataclass(frozen=True)
class FactorLoadings:
    loadings: np.ndarray
    rotation: np.ndarray
    criterion_history: tuple[float, ...] = ()

    @property
    def n_factors(self) -> int:
        return self.loadings.shape[1]

    @property
    def communalities(self) -> np.ndarray:
        return np.sum(self.loadings**2, axis=1)


@dataclass(frozen=True)
class FactorScores:
    scores: np.ndarray
    weights: np.ndarray
    mean_abs_correlation: float
    method: str = "regression"
    timestamps: tuple[str, ...] = field(default=())

    @property
    def n_factors(self) -> int:
        return self.scores.shape[1]


def eigen_decompose(c: CorrelationMatrix) -> EigenSystem:
    """Full symmetric eigendecomposition, eigenvalues descending.

    Each eigenvector is signed so that its largest-magnitude entry is
    positive (first one wins on exact ties).
    """
    try:
        w, v = np.linalg.eigh(c.rho)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigendecomposition did not converge: {exc}") from exc
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    pivot = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[pivot, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return EigenSystem(w, v * signs)


def kaiser_count(e: EigenSystem) -> int:
    """Number of eigenvalues strictly greater than one."""
    k = int(np.sum(e.eigenvalues > 1.0))
    if k == 0:
        raise NoSignificantFactorsError(
            f"no significant factors: largest eigenvalue {e.eigenvalues[0]:.6g} is not above 1"
        )
    return k


def varimax_criterion(loadings) -> float:
    """``sum_k [ mean_j l_jk^4 - (mean_j l_jk^2)^2 ]``."""
    sq = np.asarray(loadings, dtype=float) ** 2
    return float(np.sum(np.mean(sq**2, axis=0) - np.mean(sq, axis=0) ** 2))


def _planar_angle(x: np.ndarray, y: np.ndarray) -> float:
    # closed-form optimum of the criterion restricted to the (x, y) plane
    n = x.shape[0]
    u = x * x - y * y
    v = 2.0 * x * y
    a, b = u.sum(), v.sum()
    c = np.dot(u, u) - np.dot(v, v)
    d = 2.0 * np.dot(u, v)
    num = d - 2.0 * a * b / n
    den = c - (a * a - b * b) / n
    return 0.25 * math.atan2(num, den)


def _canonical_order(loadings: np.ndarray, rotation: np.ndarray):
    """Order factors by explained variance and make each column sum positive."""
    ss = np.sum(loadings**2, axis=0)
    order = np.argsort(-ss, kind="stable")
    loadings, rotation = loadings[:, order], rotation[:, order]
    signs = np.where(loadings.sum(axis=0) < 0, -1.0, 1.0)
    return loadings * signs, rotation * signs


def varimax_rotate(
    loadings,
    normalize: bool = True,
    tol: float = 1e-10,
    max_sweeps: int = 1000,
) -> FactorLoadings:
    """Varimax rotation by sweeps of pairwise planar rotations.

    With ``normalize`` (Kaiser normalization) rows are scaled to unit
    communality before rotating and scaled back afterwards. Sweeps stop once
    a full pass over all column pairs raises the criterion by less than
    ``tol``; hitting ``max_sweeps`` first raises :class:`ConvergenceError`.
    """
    L = np.array(loadings, dtype=float, copy=True)
    if L.ndim != 2 or L.shape[1] < 1:
        raise DataError(f"loadings must be an N x K matrix with K >= 1, got {L.shape}")
    n, k = L.shape
    if k == 1:
        return FactorLoadings(L, np.eye(1), (varimax_criterion(L),))

    h = np.sqrt(np.sum(L**2, axis=1)) if normalize else np.ones(n)
    h_safe = np.where(h > 0, h, 1.0)
    A = L / h_safe[:, None]
    R = np.eye(k)
    history = [varimax_criterion(A)]
    for _ in range(max_sweeps):
        for p in range(k - 1):
            for q in range(p + 1, k):
                phi = _planar_angle(A[:, p], A[:, q])
                if phi == 0.0:
                    continue
                cs, sn = math.cos(phi), math.sin(phi)
                ap, aq = A[:, p].copy(), A[:, q]
                A[:, p] = cs * ap + sn * aq
                A[:, q] = -sn * ap + cs * aq
                rp, rq = R[:, p].copy(), R[:, q]
                R[:, p] = cs * rp + sn * rq
                R[:, q] = -sn * rp + cs * rq
        crit = varimax_criterion(A)
        delta = crit - history[-1]
        if delta < -1e-12 * max(1.0, abs(crit)):
            raise ConvergenceError(f"varimax criterion decreased by {-delta:.3e} in a sweep")
        history.append(crit)
        if delta < tol:
            break
    else:
        raise ConvergenceError(
            f"varimax did not converge in {max_sweeps} sweeps (last delta {delta:.3e})"
        )

    rotated, R = _canonical_order(L @ R, R)
    return FactorLoadings(rotated, R, tuple(history))


def mean_abs_offdiag_correlation(scores: np.ndarray) -> float:
    k = scores.shape[1]
    if k < 2:
        return 0.0
    corr = np.corrcoef(scores, rowvar=False)
    iu = np.triu_indices(k, 1)
    return float(np.mean(np.abs(corr[iu])))


def standardize(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Centre columns and scale by the population standard deviation."""
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    return (x - mean) / scale, mean, scale


def score_weights(rho: np.ndarray, loadings: np.ndarray, method: str = "regression") -> np.ndarray:
    """Map standardized returns to raw factor scores: ``scores = Z @ weights``."""
    if method == "regression":
        smallest = float(np.linalg.eigvalsh(rho)[0])
        if smallest <= SINGULAR_TOL:
            raise SingularMatrixError(
                f"correlation matrix is singular (smallest eigenvalue {smallest:.3e}); "
                "use fewer assets or more observations"
            )
        return np.linalg.solve(rho, loadings)
    if method == "projection":
        return np.array(loadings, dtype=float, copy=True)
    raise DataError(f"unknown score method {method!r}; expected one of {SCORE_METHODS}")


def factor_scores(
    r: ReturnPanel,
    fl: FactorLoadings,
    c: CorrelationMatrix,
    method: str = "regression",
) -> FactorScores:
    """Factor-score time series, each column standardized to mean 0, unit sample variance."""
    if fl.loadings.shape[0] != r.n_assets:
        raise DataError("loadings and return panel disagree on the number of assets")
    weights = score_weights(c.rho, fl.loadings, method)
    z, _, _ = standardize(r.returns)
    raw = z @ weights
    scores = (raw - raw.mean(axis=0)) / raw.std(axis=0, ddof=1)
    return FactorScores(
        scores, weights, mean_abs_offdiag_correlation(scores), method, r.timestamps
    )


def resolve_n_factors(e: EigenSystem, n_factors, enforce_kaiser: bool = False) -> int:
    if n_factors == "kaiser":
        return kaiser_count(e)
    k = int(n_factors)
    if not 1 <= k <= e.n:
        raise DataError(f"factor count {k} outside 1..{e.n}")
    if enforce_kaiser and k > kaiser_count(e):
        raise DataError(f"factor count {k} exceeds the Kaiser count {kaiser_count(e)}")
    return k


def extract_factors(
    r: ReturnPanel,
    n_factors="kaiser",
    *,
    enforce_kaiser: bool = False,
    score_method: str = "regression",
    normalize: bool = True,
    corr: CorrelationMatrix | None = None,
    eig: EigenSystem | None = None,
) -> tuple[FactorLoadings, FactorScores, EigenSystem]:
    """Eigendecompose, keep the top ``K`` loadings, rotate, and score.

    ``corr`` and ``eig`` may be passed in to reuse work across factor counts.
    """
    c = corr if corr is not None else correlation_matrix(r)
    e = eig if eig is not None else eigen_decompose(c)
    k = resolve_n_factors(e, n_factors, enforce_kaiser)
    fl = varimax_rotate(e.loadings(k), normalize=normalize)
    return fl, factor_scores(r, fl, c, score_method), e


class VarimaxFactorAnalysis(TransformerMixin, BaseEstimator):
    """Principal-component factor analysis with varimax rotation.

    Parameters
    ----------
    n_factors : int or "kaiser", default="kaiser"
        Number of factors to retain. ``"kaiser"`` keeps eigenvalues above 1.
    score_method : {"regression", "projection"}, default="regression"
        Regression scores use ``corr^-1 @ loadings`` as weights; projection
        uses the loadings directly.
    normalize : bool, default=True
        Kaiser row normalization during the rotation.
    tol, max_sweeps
        Varimax stopping rule.

    Attributes
    ----------
    eigenvalues_ : ndarray of shape (n_features,)
    loadings_ : ndarray of shape (n_features, n_factors_)
    rotation_ : ndarray of shape (n_factors_, n_factors_)
    components_ : ndarray of shape (n_factors_, n_features)
        Transposed loadings, for compatibility with sklearn decompositions.
    weights_ : ndarray of shape (n_features, n_factors_)
    mean_abs_correlation_ : float
        Mean absolute pairwise correlation of the training scores.
    """

    def __init__(self, n_factors="kaiser", score_method="regression", normalize=True,
                 tol=1e-10, max_sweeps=1000):
        self.n_factors = n_factors
        self.score_method = score_method
        self.normalize = normalize
        self.tol = tol
        self.max_sweeps = max_sweeps

    def fit(self, X, y=None):
        panel = as_panel(X)
        c = correlation_matrix(panel)
        e = eigen_decompose(c)
        k = resolve_n_factors(e, self.n_factors)
        fl = varimax_rotate(e.loadings(k), self.normalize, self.tol, self.max_sweeps)
        fs = factor_scores(panel, fl, c, self.score_method)

        _, self.mean_, self.scale_ = standardize(panel.returns)
        raw = ((panel.returns - self.mean_) / self.scale_) @ fs.weights
        self.score_mean_ = raw.mean(axis=0)
        self.score_scale_ = raw.std(axis=0, ddof=1)

        self.n_features_in_ = panel.n_assets
        if isinstance(X, ReturnPanel) or hasattr(X, "columns"):
            self.feature_names_in_ = np.asarray(panel.assets, dtype=object)
        self.eigenvalues_ = e.eigenvalues
        self.eigenvectors_ = e.eigenvectors
        self.n_factors_ = k
        self.loadings_ = fl.loadings
        self.rotation_ = fl.rotation
        self.components_ = fl.loadings.T
        self.criterion_history_ = fl.criterion_history
        self.weights_ = fs.weights
        self.mean_abs_correlation_ = fs.mean_abs_correlation
        return self

    def transform(self, X):
        check_is_fitted(self, "weights_")
        x = as_matrix(X, self.n_features_in_)
        raw = ((x - self.mean_) / self.scale_) @ self.weights_
        return (raw - self.score_mean_) / self.score_scale_

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "n_factors_")
        return np.array([f"factor_{k + 1}" for k in range(self.n_factors_)], dtype=object)
