"""Selection of the risk-controlling lambda, standard and weighted."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .core import InputError, LambdaGrid, RiskSpec, WeightVector, validate_profiles


class UndefinedRiskError(ValueError):
    """Weighted risk requested with zero total weight."""


class Selection(NamedTuple):
    lambda_hat: float
    index: int
    infeasible: bool


@dataclass(frozen=True, eq=False)
class CalibrationBatch:
    """Loss profiles of the calibration examples on a shared grid.

    ``losses[i, j]`` is example ``i``'s loss at ``grid[j]``.
    """

    losses: np.ndarray
    grid: LambdaGrid
    spec: RiskSpec
    validate: bool = True

    def __post_init__(self):
        L = np.asarray(self.losses, dtype=float)
        if L.ndim == 1 and L.size == 0:
            L = L.reshape(0, len(self.grid))
        if L.ndim != 2 or L.shape[1] != len(self.grid):
            raise InputError(f"loss matrix shape {L.shape} does not match grid of {len(self.grid)}")
        if self.validate and not validate_profiles(L, self.spec):
            raise InputError("loss profiles must be nonincreasing in lambda and within [A, B]")
        object.__setattr__(self, "losses", L)

    @property
    def n(self) -> int:
        return self.losses.shape[0]


def weighted_risk(batch: CalibrationBatch, weights: WeightVector, lambda_index: int) -> float:
    if len(weights) != batch.n:
        raise InputError(f"{len(weights)} weights for {batch.n} profiles")
    if weights.n_w <= 0:
        raise UndefinedRiskError("weighted risk is undefined when all weights are zero")
    return float(np.sum(weights.raw * batch.losses[:, lambda_index]) / weights.n_w)


def _first_feasible(feasible, size: int) -> int:
    """Smallest ``j`` with ``feasible(j)``, assuming feasibility is monotone; ``-1`` if none."""
    if not feasible(size - 1):
        return -1
    lo, hi = 0, size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _select(grid: LambdaGrid, idx: int) -> Selection:
    if idx < 0:
        return Selection(grid.lambda_max, len(grid) - 1, True)
    return Selection(float(grid[idx]), idx, False)


def crc_lambda_hat(batch: CalibrationBatch) -> Selection:
    """Standard conformal risk control over the grid (unweighted)."""
    n, B, alpha = batch.n, batch.spec.upper, batch.spec.alpha
    L = batch.losses

    def feasible(j):
        risk = np.sum(L[:, j]) / n if n else 0.0
        return n / (n + 1) * risk + B / (n + 1) <= alpha

    return _select(batch.grid, _first_feasible(feasible, len(batch.grid)))


def nonx_lambda_hat(batch: CalibrationBatch, weights: WeightVector) -> Selection:
    """Non-exchangeable conformal risk control with fixed weights."""
    if len(weights) != batch.n:
        raise InputError(f"{len(weights)} weights for {batch.n} profiles")
    n_w, B, alpha = weights.n_w, batch.spec.upper, batch.spec.alpha
    w, L = weights.raw, batch.losses

    def feasible(j):
        risk = np.sum(w * L[:, j]) / n_w if n_w > 0 else 0.0
        return n_w / (n_w + 1) * risk + B / (n_w + 1) <= alpha

    return _select(batch.grid, _first_feasible(feasible, len(batch.grid)))


def nonx_lambda_hat_many(losses, weight_rows, grid: LambdaGrid, spec: RiskSpec):
    """Weighted selection for many test points at once.

    ``weight_rows[t]`` holds the raw calibration weights for test point ``t``.
    Returns ``(lambda_hat, index, infeasible)`` arrays.
    """
    L = np.asarray(losses, dtype=float)
    W = np.atleast_2d(np.asarray(weight_rows, dtype=float))
    n_w = W.sum(axis=1, keepdims=True)
    weighted_sum = W @ L
    with np.errstate(invalid="ignore", divide="ignore"):
        risk = np.where(n_w > 0, weighted_sum / np.where(n_w > 0, n_w, 1.0), 0.0)
    ok = n_w / (n_w + 1) * risk + spec.upper / (n_w + 1) <= spec.alpha
    infeasible = ~ok[:, -1]
    index = np.where(infeasible, len(grid) - 1, np.argmax(ok, axis=1))
    return grid.values[index], index, infeasible


def coverage_gap_bound(weights: WeightVector, d, spec: RiskSpec) -> float:
    """Slack ``(B - A) * sum_i w~_i d_i`` added to alpha by non-exchangeability."""
    d = np.asarray(d, dtype=float).ravel()
    if d.size != len(weights):
        raise InputError(f"{d.size} TV estimates for {len(weights)} weights")
    return spec.width * float(np.dot(weights.normalized[:-1], d))


class ConformalRiskController(BaseEstimator):
    """Choose the smallest lambda whose calibrated risk bound stays below ``alpha``.

    Parameters
    ----------
    alpha : float
        Target risk level, inside ``[lower, upper]``.
    lower, upper : float
        Bounds ``A`` and ``B`` of the loss.
    grid : array-like, optional
        Strictly increasing candidate lambdas; defaults to ``[0, 1]`` in steps of 0.01.

    Attributes
    ----------
    lambda_hat_ : float
    lambda_index_ : int
    infeasible_ : bool
        True when no grid value satisfies the condition; ``lambda_hat_`` is then
        the largest grid value.
    n_w_ : float
        Total calibration weight.

    Examples
    --------
    >>> import numpy as np
    >>> losses = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
    >>> ConformalRiskController(alpha=0.3, grid=[0.0, 1.0]).fit(losses).lambda_hat_
    1.0
    """

    def __init__(self, alpha: float = 0.1, lower: float = 0.0, upper: float = 1.0,
                 grid=None):
        self.alpha = alpha
        self.lower = lower
        self.upper = upper
        self.grid = grid

    def _grid(self) -> LambdaGrid:
        return LambdaGrid.linspace() if self.grid is None else LambdaGrid(self.grid)

    def fit(self, losses, y=None, sample_weight: Optional[np.ndarray] = None):
        """Calibrate on an ``(n, len(grid))`` matrix of loss profiles.

        Without ``sample_weight`` the standard rule is used; with it, the
        weighted non-exchangeable rule (raw weights in [0, 1]).
        """
        spec = RiskSpec(self.alpha, self.lower, self.upper)
        grid = self._grid()
        L = check_array(losses, ensure_min_samples=0)
        batch = CalibrationBatch(L, grid, spec)
        if sample_weight is None:
            sel = crc_lambda_hat(batch)
            self.n_w_ = float(batch.n)
        else:
            weights = WeightVector(sample_weight)
            sel = nonx_lambda_hat(batch, weights)
            self.n_w_ = weights.n_w
        self.lambda_hat_, self.lambda_index_, self.infeasible_ = sel
        self.grid_ = grid
        self.spec_ = spec
        return self

    def predict(self, losses) -> np.ndarray:
        """Realized loss of each test profile at the calibrated lambda."""
        check_is_fitted(self, "lambda_hat_")
        L = check_array(losses)
        if L.shape[1] != len(self.grid_):
            raise InputError(f"expected {len(self.grid_)} grid columns, got {L.shape[1]}")
        return L[:, self.lambda_index_]

    def risk_bound(self, weights: WeightVector, d) -> float:
        """Guaranteed expected loss ``alpha + coverage gap`` for the given TV estimates."""
        check_is_fitted(self, "lambda_hat_")
        return self.spec_.alpha + coverage_gap_bound(weights, d, self.spec_)
