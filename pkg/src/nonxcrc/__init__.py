"""Conformal risk control for non-exchangeable data."""

from .calibrate import (CalibrationBatch, ConformalRiskController, Selection, coverage_gap_bound,
                        crc_lambda_hat, nonx_lambda_hat, weighted_risk)
from .core import InputError, LambdaGrid, RiskSpec, TracePoint, WeightVector, validate_profile
from .models import LeastSquares, MultiLabelLogisticRegression
from .weights import decay_weights, maxent_weights, similarity_weights, uniform_weights

__version__ = "0.1.0"

__all__ = [
    "CalibrationBatch", "ConformalRiskController", "Selection", "coverage_gap_bound",
    "crc_lambda_hat", "nonx_lambda_hat", "weighted_risk", "InputError", "LambdaGrid",
    "RiskSpec", "TracePoint", "WeightVector", "validate_profile", "LeastSquares",
    "MultiLabelLogisticRegression", "decay_weights", "maxent_weights", "similarity_weights",
    "uniform_weights",
]
