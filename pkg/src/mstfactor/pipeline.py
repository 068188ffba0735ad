"""The factor-count x degree-threshold consistency sweep.

For each factor count ``k`` the returns are re-factored, a multi-factor
model is fit, and two networks are compared against the original MST:

* the estimated network, built from factor-explained returns plus fresh
  noise (averaged over ``replicates`` noise seeds), and
* the residual network, built from what the factors leave unexplained.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .consistency import survivor_curve
from .correlation import correlation_array, correlation_matrix, distance_array
from .exceptions import DataError, MSTFactorError
from .factor_analysis import eigen_decompose, extract_factors, kaiser_count
from .factor_model import derive_returns, ols_fit
from .market_data import ReturnPanel
from .mst import Tree, mst_from_array


@dataclass(frozen=True)
class SweepGrid:
    factor_counts: tuple[int, ...]
    thresholds: tuple[int, ...]
    estimated: np.ndarray
    residual: np.ndarray
    estimated_replicates: np.ndarray
    eligible_counts: tuple[int, ...]
    replicates: int
    seed: int
    noise_mode: str
    pooled: bool = False
    score_method: str = "regression"

    def estimated_marginal_se(self) -> np.ndarray:
        """Standard error of the estimated marginal-by-k across noise replicates."""
        per_rep = self.estimated_replicates.mean(axis=2)
        if self.replicates < 2:
            return np.zeros(len(self.factor_counts))
        return per_rep.std(axis=1, ddof=1) / np.sqrt(self.replicates)


@dataclass(frozen=True)
class Marginals:
    factor_counts: tuple[int, ...]
    thresholds: tuple[int, ...]
    estimated_by_k: np.ndarray
    residual_by_k: np.ndarray
    estimated_by_threshold: np.ndarray
    residual_by_threshold: np.ndarray


def tree_from_returns(x: np.ndarray, assets: Sequence[str]) -> Tree:
    return mst_from_array(distance_array(correlation_array(x)), assets)


def threshold_axis(reference: Tree, full: bool = False) -> tuple[int, ...]:
    """Degree thresholds worth reporting for ``reference``.

    Thresholds above the second-largest distinct degree select the same
    nodes as the maximum degree, so the axis stops one past it unless
    ``full`` asks for every value up to the maximum degree.
    """
    distinct = sorted(set(int(d) for d in reference.degree), reverse=True)
    top = distinct[0]
    if full or len(distinct) < 2:
        return tuple(range(1, top + 1))
    return tuple(range(1, distinct[1] + 2))


def _eligible(reference: Tree, thresholds) -> tuple[int, ...]:
    deg = reference.degree
    return tuple(int(np.sum(deg >= i)) for i in thresholds)


def run_sweep(
    r: ReturnPanel,
    k_max="kaiser",
    replicates: int = 10,
    seed: int = 42,
    noise_mode: str = "residual",
    *,
    pooled: bool = False,
    full_threshold_axis: bool = False,
    score_method: str = "regression",
    n_jobs: int = 1,
    factor_counts: Sequence[int] | None = None,
    factor_fn: Callable[[int], np.ndarray] | None = None,
    noise_scale: float = 1.0,
) -> SweepGrid:
    """Survivor-ratio grid over factor counts and degree thresholds.

    ``factor_fn(k)`` replaces factor extraction with caller-supplied
    regressors (used for control experiments); ``factor_counts`` overrides
    the default ``1..k_max`` axis. Cells are keyed by (k, replicate) so
    ``n_jobs`` does not change the result.

    Replicate ``b`` draws its noise from seed ``(seed, b)`` at every ``k``
    (common random numbers), so differences between factor counts are not
    swamped by fresh Monte Carlo noise.
    """
    if replicates < 1:
        raise DataError("replicates must be at least 1")
    corr = correlation_matrix(r)
    eig = eigen_decompose(corr)
    if factor_counts is None:
        top = kaiser_count(eig) if k_max == "kaiser" else int(k_max)
        if not 1 <= top <= r.n_assets:
            raise DataError(f"k_max {top} outside 1..{r.n_assets}")
        factor_counts = range(1, top + 1)
    factor_counts = tuple(int(k) for k in factor_counts)

    reference = mst_from_array(distance_array(corr.rho), r.assets)
    thresholds = threshold_axis(reference, full_threshold_axis)

    def curve(x: np.ndarray) -> tuple[float, ...]:
        return survivor_curve(reference, tree_from_returns(x, r.assets), pooled, thresholds).ratios

    def job(k: int):
        rep = -1
        try:
            if factor_fn is not None:
                f = np.asarray(factor_fn(k), dtype=float).reshape(r.n_obs, k)
            else:
                f = extract_factors(r, k, score_method=score_method, corr=corr, eig=eig)[1].scores
            fit = ols_fit(f, r.returns)
            resid_row = curve(fit.residuals)
            est_rows = []
            for rep in range(replicates):
                derived = derive_returns(r, fit, f, (seed, rep), noise_mode, noise_scale)
                est_rows.append(curve(derived.combined))
        except MSTFactorError as exc:
            where = f"k={k}" + (f", replicate={rep}" if rep >= 0 else "")
            raise type(exc)(f"{where}: {exc}") from exc
        return np.array(est_rows), np.array(resid_row)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(job, factor_counts))
    else:
        results = [job(k) for k in factor_counts]

    est_reps = np.stack([e for e, _ in results]) if results else np.empty((0, replicates, len(thresholds)))
    residual = np.stack([res for _, res in results]) if results else np.empty((0, len(thresholds)))
    return SweepGrid(
        factor_counts=factor_counts,
        thresholds=thresholds,
        estimated=est_reps.mean(axis=1),
        residual=residual,
        estimated_replicates=est_reps,
        eligible_counts=_eligible(reference, thresholds),
        replicates=replicates,
        seed=seed,
        noise_mode=noise_mode,
        pooled=pooled,
        score_method=score_method,
    )


def marginal_means(g: SweepGrid) -> Marginals:
    """Row means (per factor count) and column means (per threshold) of both grids."""
    return Marginals(
        g.factor_counts,
        g.thresholds,
        np.asarray(g.estimated).mean(axis=1),
        np.asarray(g.residual).mean(axis=1),
        np.asarray(g.estimated).mean(axis=0),
        np.asarray(g.residual).mean(axis=0),
    )


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_grid_csv(path, g: SweepGrid) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["k", "threshold", "estimated_ratio", "residual_ratio", "eligible_count"])
        for a, k in enumerate(g.factor_counts):
            for b, i in enumerate(g.thresholds):
                w.writerow([k, i, repr(float(g.estimated[a, b])), repr(float(g.residual[a, b])),
                            g.eligible_counts[b]])


def write_marginal_csvs(by_k_path, by_threshold_path, g: SweepGrid) -> Marginals:
    m = marginal_means(g)
    se = g.estimated_marginal_se()
    with open(by_k_path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["k", "estimated_mean", "residual_mean", "estimated_se"])
        for k, e, r, s in zip(m.factor_counts, m.estimated_by_k, m.residual_by_k, se):
            w.writerow([k, repr(float(e)), repr(float(r)), repr(float(s))])
    with open(by_threshold_path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["threshold", "estimated_mean", "residual_mean", "eligible_count"])
        for i, e, r, c in zip(m.thresholds, m.estimated_by_threshold, m.residual_by_threshold,
                              g.eligible_counts):
            w.writerow([i, repr(float(e)), repr(float(r)), c])
    return m


def manifest(g: SweepGrid, **inputs) -> dict:
    return {
        "software": {"name": "mstfactor", "version": __version__},
        "inputs": inputs,
        "seed": g.seed,
        "replicates": g.replicates,
        "noise_mode": g.noise_mode,
        "pooled": g.pooled,
        "score_method": g.score_method,
        "factor_counts": list(g.factor_counts),
        "thresholds": list(g.thresholds),
        "eligible_counts": list(g.eligible_counts),
    }


def write_manifest(path, data: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
