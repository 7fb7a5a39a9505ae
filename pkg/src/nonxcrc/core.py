"""Shared domain types: risk bounds, lambda grids, weight vectors, trace rows."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

MONOTONE_TOL = 1e-9

METHODS = ("crc", "nonx_crc", "nonx_crc_wls")


class InputError(ValueError):
    """Raised when caller-supplied data violates a documented precondition."""


@dataclass(frozen=True)
class RiskSpec:
    """Target risk ``alpha`` and the loss bounds ``[lower, upper]``."""

    alpha: float
    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise InputError("loss bounds must be finite")
        if not self.lower < self.upper:
            raise InputError(f"need lower < upper, got [{self.lower}, {self.upper}]")
        if not self.lower <= self.alpha <= self.upper:
            raise InputError(
                f"alpha={self.alpha} outside loss bounds [{self.lower}, {self.upper}]"
            )

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True, eq=False)
class LambdaGrid:
    """Strictly increasing finite set of candidate lambda values."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size == 0:
            raise InputError("lambda grid must be nonempty")
        if not np.all(np.isfinite(values)):
            raise InputError("lambda grid must be finite")
        if np.any(np.diff(values) <= 0):
            raise InputError("lambda grid must be strictly increasing")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def linspace(cls, start: float = 0.0, stop: float = 1.0, step: float = 0.01) -> "LambdaGrid":
        count = int(round((stop - start) / step)) + 1
        return cls(np.linspace(start, stop, count))

    @classmethod
    def integers(cls, upper: int) -> "LambdaGrid":
        """Grid ``0, 1, ..., upper`` used by the top-k set family."""
        return cls(np.arange(upper + 1, dtype=float))

    @property
    def lambda_max(self) -> float:
        return float(self.values[-1])

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, idx):
        return self.values[idx]


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Raw calibration weights in [0, 1] and their normalized form.

    ``normalized`` has one extra trailing entry: the share carried by the
    test point, ``1 / (n_w + 1)``.
    """

    raw: np.ndarray
    normalized: np.ndarray = field(init=False)
    n_w: float = field(init=False)

    def __post_init__(self):
        raw = np.array(self.raw, dtype=float).ravel()
        if not np.all(np.isfinite(raw)):
            raise InputError("weights must be finite")
        if np.any((raw < 0) | (raw > 1)):
            raise InputError("weights must lie in [0, 1]")
        n_w = float(np.sum(raw))
        normalized = np.append(raw, 1.0) / (n_w + 1.0)
        raw.setflags(write=False)
        normalized.setflags(write=False)
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "normalized", normalized)
        object.__setattr__(self, "n_w", n_w)

    def __len__(self) -> int:
        return self.raw.size


@dataclass(frozen=True)
class TracePoint:
    trial: int
    timestep: int
    method: str
    lambda_hat: float
    test_loss: float
    set_size: Optional[float] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise InputError(f"unknown method {self.method!r}")


def validate_profile(profile: Sequence[float], spec: RiskSpec, tol: float = MONOTONE_TOL) -> bool:
    """True iff ``profile`` is nonincreasing (up to ``tol``) and inside the loss bounds."""
    p = np.asarray(profile, dtype=float)
    if p.ndim != 1 or not np.all(np.isfinite(p)):
        return False
    if np.any(p < spec.lower - tol) or np.any(p > spec.upper + tol):
        return False
    return bool(np.all(np.diff(p) <= tol))


def validate_profiles(losses: np.ndarray, spec: RiskSpec, tol: float = MONOTONE_TOL) -> bool:
    """Row-wise :func:`validate_profile` over an ``(n, grid)`` loss matrix."""
    L = np.asarray(losses, dtype=float)
    if L.ndim != 2 or not np.all(np.isfinite(L)):
        return False
    if L.size and (L.min() < spec.lower - tol or L.max() > spec.upper + tol):
        return False
    return bool(np.all(np.diff(L, axis=1) <= tol))
