"""Randomized self-checks exposed through ``nonxcrc check``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibrate import CalibrationBatch, crc_lambda_hat, nonx_lambda_hat
from .core import LambdaGrid, RiskSpec
from .losses import tv_distance
from .weights import uniform_weights


@dataclass(frozen=True)
class AuditResult:
    name: str
    draws: int
    violations: int
    worst: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def random_distribution(rng, k: int) -> np.ndarray:
    p = rng.dirichlet(np.full(k, rng.choice([0.2, 1.0, 5.0])))
    if k > 1 and rng.random() < 0.2:
        p[rng.random(k) < 0.5] = 0.0
        if p.sum() == 0:
            p[rng.integers(k)] = 1.0
    return p / p.sum()


def tv_bound_audit(draws: int = 10_000, seed: int = 0, slack: float = 1e-12) -> AuditResult:
    """``|E_P f - E_Q f| <= (B - A) d_TV(P, Q)`` on random finite supports."""
    rng = np.random.default_rng(seed)
    violations, worst = 0, -np.inf
    for _ in range(draws):
        k = int(rng.integers(1, 11))
        p, q = random_distribution(rng, k), random_distribution(rng, k)
        a = rng.uniform(-5, 5)
        b = a + rng.uniform(1e-3, 10)
        f = rng.uniform(a, b, size=k)
        ends = rng.random(k)
        f[ends < 0.15] = a
        f[ends > 0.85] = b
        excess = abs(p @ f - q @ f) - (b - a) * tv_distance(p, q)
        worst = max(worst, excess)
        violations += excess > slack
    return AuditResult("tv-bound", draws, int(violations), float(worst))


def random_batch(rng, max_n: int = 60, max_grid: int = 40):
    """Random monotone calibration batch on a random grid, with random bounds and alpha."""
    n = int(rng.integers(0, max_n + 1))
    g = int(rng.integers(1, max_grid + 1))
    a = float(rng.choice([0.0, rng.uniform(-2, 0)]))
    b = a + float(rng.choice([1.0, rng.uniform(0.1, 3)]))
    losses = -np.sort(-rng.uniform(a, b, size=(n, g)), axis=1)
    if n and rng.random() < 0.3:
        losses = np.round(losses, 1).clip(a, b)
        losses = -np.sort(-losses, axis=1)
    grid = LambdaGrid(np.cumsum(rng.uniform(0.01, 1.0, size=g)))
    alpha = float(rng.uniform(a, b))
    return CalibrationBatch(losses, grid, RiskSpec(alpha, a, b))


def uniform_equivalence_audit(batches: int = 1000, seed: int = 0) -> AuditResult:
    """Weighted selection with unit weights must match standard selection exactly."""
    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(batches):
        batch = random_batch(rng)
        violations += crc_lambda_hat(batch) != nonx_lambda_hat(batch, uniform_weights(batch.n))
    return AuditResult("uniform-equivalence", batches, int(violations), 0.0)
