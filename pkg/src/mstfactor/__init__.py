"""Correlation-MST networks, varimax factor models and survivor-ratio sweeps."""

__version__ = "0.1.0"

from .consistency import SurvivorCurve, survivor_curve, survivor_ratio
from .correlation import CorrelationMatrix, DistanceMatrix, correlation_matrix, distance_matrix
from .estimators import CorrelationMST
from .exceptions import DataError, ModelError, MSTFactorError, NoSignificantFactorsError
from .factor_analysis import (
    EigenSystem,
    FactorLoadings,
    FactorScores,
    VarimaxFactorAnalysis,
    eigen_decompose,
    extract_factors,
    factor_scores,
    kaiser_count,
    varimax_rotate,
)
from .factor_model import DerivedReturns, FactorModelFit, MultiFactorModel, derive_returns, fit
from .market_data import PricePanel, ReturnPanel, load_prices, load_returns, to_log_returns
from .mst import Tree, build_mst, degree_threshold_sets
from .pipeline import SweepGrid, marginal_means, run_sweep, threshold_axis
from .synth import MarketSpec, generate

__all__ = [
    "CorrelationMST", "CorrelationMatrix", "DataError", "DerivedReturns", "DistanceMatrix",
    "EigenSystem", "FactorLoadings", "FactorModelFit", "FactorScores", "MSTFactorError",
    "MarketSpec", "ModelError", "MultiFactorModel", "NoSignificantFactorsError", "PricePanel",
    "ReturnPanel", "SurvivorCurve", "SweepGrid", "Tree", "VarimaxFactorAnalysis",
    "build_mst", "correlation_matrix", "degree_threshold_sets", "derive_returns",
    "distance_matrix", "eigen_decompose", "extract_factors", "factor_scores", "fit",
    "generate", "kaiser_count", "load_prices", "load_returns", "marginal_means", "run_sweep",
    "survivor_curve", "survivor_ratio", "threshold_axis", "to_log_returns", "varimax_rotate",
]
