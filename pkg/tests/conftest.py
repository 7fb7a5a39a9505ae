import numpy as np
import pytest

from nonxcrc.core import LambdaGrid, RiskSpec


def scan_lambda_hat(losses, weights, grid, spec):
    """Exhaustive-scan oracle: first grid index meeting the weighted condition."""
    losses = np.asarray(losses, dtype=float)
    w = np.asarray(weights, dtype=float)
    n_w = sum(float(v) for v in w)
    for j in range(len(grid)):
        risk = sum(float(a) * float(b) for a, b in zip(w, losses[:, j])) / n_w if n_w > 0 else 0.0
        if n_w / (n_w + 1) * risk + spec.upper / (n_w + 1) <= spec.alpha:
            return float(grid[j]), j, False
    return grid.lambda_max, len(grid) - 1, True


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_spec():
    return RiskSpec(alpha=0.2, lower=0.0, upper=1.0)


@pytest.fixture
def default_grid():
    return LambdaGrid.linspace()


_CRITERIA = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion."""
    def _report(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip()
        _CRITERIA.append(line)
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
