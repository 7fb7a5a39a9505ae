"""Weight schemes for calibration examples.

Every scheme returns a :class:`~nonxcrc.core.WeightVector` of raw weights in
[0, 1]; normalization (including the test point's share) happens there.
"""

from __future__ import annotations

import numpy as np

from .core import InputError, RiskSpec, WeightVector


def uniform_weights(n: int) -> WeightVector:
    if n < 0:
        raise InputError("n must be nonnegative")
    return WeightVector(np.ones(n))


def decay_weights(n: int, rho: float) -> WeightVector:
    """Geometric recency weights ``rho ** (n + 1 - i)`` for ``i = 1..n``."""
    if not 0 < rho <= 1:
        raise InputError(f"rho must be in (0, 1], got {rho}")
    return WeightVector(decay_raw(np.arange(1, n + 1), n, rho))


def decay_raw(positions, n: int, rho: float) -> np.ndarray:
    """Decay weights for arbitrary 1-based time positions relative to step ``n``."""
    return np.power(float(rho), n + 1 - np.asarray(positions, dtype=float))


def maxent_weights(d, beta: float, spec: RiskSpec) -> WeightVector:
    """Closed-form maximum-entropy weights ``exp(-beta * (B - A) * d_i)``.

    ``d`` holds total-variation estimates (or upper bounds) in [0, 1], one per
    calibration example. The test point has ``d = 0`` and so raw weight 1,
    which makes the normalized vector the softmax of ``-beta * (B - A) * d``.
    """
    if beta < 0:
        raise InputError(f"beta must be nonnegative, got {beta}")
    d = _tv_estimates(d)
    return WeightVector(np.exp(-beta * spec.width * d))


def maxent_objective(normalized, d, beta: float, spec: RiskSpec) -> float:
    """``beta * coverage_gap - entropy`` over the full ``n + 1`` weight vector.

    The closed form in :func:`maxent_weights` is its minimizer on the simplex
    subject to ``w_i <= w_{n+1}``.
    """
    w = np.asarray(normalized, dtype=float)
    d = _tv_estimates(d)
    gap = spec.width * float(np.dot(w[:-1], d))
    nz = w[w > 0]
    entropy = -float(np.sum(nz * np.log(nz)))
    return beta * gap - entropy


def similarity_weights(calib_embeddings, test_embedding) -> WeightVector:
    """Min-max normalized dot products between calibration and test embeddings."""
    C = np.atleast_2d(np.asarray(calib_embeddings, dtype=float))
    t = np.asarray(test_embedding, dtype=float).ravel()
    if C.shape[0] == 0:
        raise InputError("need at least one calibration embedding")
    if C.shape[1] != t.size:
        raise InputError(f"embedding dimension mismatch: {C.shape[1]} vs {t.size}")
    return WeightVector(minmax_rows(C @ t))


def minmax_rows(dots: np.ndarray) -> np.ndarray:
    """Min-max scale along the last axis; constant rows map to all ones."""
    dots = np.asarray(dots, dtype=float)
    lo = dots.min(axis=-1, keepdims=True)
    span = dots.max(axis=-1, keepdims=True) - lo
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(span > 0, (dots - lo) / np.where(span > 0, span, 1.0), 1.0)
    return np.clip(out, 0.0, 1.0)


def _tv_estimates(d) -> np.ndarray:
    d = np.asarray(d, dtype=float).ravel()
    if np.any((d < 0) | (d > 1)) or not np.all(np.isfinite(d)):
        raise InputError("total variation estimates must lie in [0, 1]")
    return d
