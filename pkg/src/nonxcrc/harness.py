"""Rolling time-series protocol, QA split trials, summaries, and trace CSVs."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from .calibrate import CalibrationBatch, crc_lambda_hat, nonx_lambda_hat, nonx_lambda_hat_many
from .core import METHODS, InputError, LambdaGrid, RiskSpec, TracePoint, WeightVector
from .losses import best_f1, best_f1_profile, fnr_profiles, insensitive_abs_profiles
from .models import LeastSquares, MultiLabelLogisticRegression
from .weights import decay_raw, maxent_weights, minmax_rows

logger = logging.getLogger(__name__)

TRACE_HEADER = ("trial", "timestep", "method", "lambda_hat", "test_loss", "set_size")


class TimestepError(RuntimeError):
    """Model fitting failed at a specific rolling timestep."""


# --- weight schemes --------------------------------------------------------


@dataclass(frozen=True)
class WeightScheme:
    """Parsed ``uniform | decay:<rho> | maxent:<beta>[:<eps>] | similarity`` flag."""

    kind: str = "uniform"
    rho: float = 0.99
    beta: float = 1.0
    eps: float = 0.01

    @classmethod
    def parse(cls, text: str) -> "WeightScheme":
        head, *args = text.split(":")
        try:
            if head == "uniform" and not args:
                return cls("uniform")
            if head == "similarity" and not args:
                return cls("similarity")
            if head == "decay" and len(args) == 1:
                scheme = cls("decay", rho=float(args[0]))
                if not 0 < scheme.rho <= 1:
                    raise InputError(f"decay rate must be in (0, 1], got {scheme.rho}")
                return scheme
            if head == "maxent" and 1 <= len(args) <= 2:
                scheme = cls("maxent", beta=float(args[0]),
                             eps=float(args[1]) if len(args) == 2 else 0.01)
                if scheme.beta < 0 or scheme.eps < 0:
                    raise InputError("maxent beta and eps must be nonnegative")
                return scheme
        except ValueError as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"cannot parse weight scheme {text!r}") from None
        raise InputError(f"cannot parse weight scheme {text!r}")

    def time_weights(self, positions: np.ndarray, n: int, spec: RiskSpec) -> np.ndarray:
        """Raw weights for calibration points at 1-based time ``positions`` before step ``n + 1``."""
        if self.kind == "uniform":
            return np.ones(len(positions))
        if self.kind == "decay":
            return decay_raw(positions, n, self.rho)
        if self.kind == "maxent":
            # Lipschitz drift bound: d_TV grows linearly with the lag, capped at 1
            d = np.minimum(1.0, self.eps * (n + 1 - np.asarray(positions, dtype=float)))
            return maxent_weights(d, self.beta, spec).raw
        raise InputError(f"weight scheme {self.kind!r} has no time-series form")


@dataclass(frozen=True)
class MethodConfig:
    """One calibration method: output tag, weight scheme, and whether the model is weighted."""

    name: str
    weights: WeightScheme = field(default_factory=WeightScheme)
    weighted_model: bool = False

    def __post_init__(self):
        if self.name not in METHODS:
            raise InputError(f"unknown method {self.name!r}")
        if self.name == "crc" and self.weights.kind != "uniform":
            raise InputError("standard CRC uses uniform weights")


# --- rolling tasks -----------------------------------------------------------


class MultilabelTask:
    """Per-label logistic models scored with the false negative rate."""

    def __init__(self, set_mode: str = "one_minus_lambda", **model_params):
        self.set_mode = set_mode
        self.model_params = model_params

    def new_model(self):
        return MultiLabelLogisticRegression(warm_start=True, **self.model_params)

    def fit(self, model, X, Y, sample_weight=None):
        if sample_weight is not None:
            raise InputError("weighted logistic fitting is not supported")
        return model.fit(X, Y)

    def profiles(self, model, X, Y, grid):
        return fnr_profiles(model.predict_proba(X), np.asarray(Y) > 0, grid.values, self.set_mode)


class IntervalTask:
    """Least-squares point predictions with symmetric intervals of half-width lambda.

    Predictions are clipped into ``[lo, hi]`` so that the loss stays within the
    target range.
    """

    def __init__(self, lo: float = 0.0, hi: float = 1.0):
        self.lo, self.hi = lo, hi

    def new_model(self):
        return LeastSquares()

    def fit(self, model, X, y, sample_weight=None):
        return model.fit(X, y, sample_weight=sample_weight)

    def profiles(self, model, X, y, grid):
        pred = np.clip(model.predict(X), self.lo, self.hi)
        losses = insensitive_abs_profiles(pred, y, grid.values)
        widths = np.broadcast_to(2.0 * grid.values, losses.shape)
        return losses, widths


@dataclass(frozen=True)
class RollingProtocol:
    """Odd time indices train, even indices calibrate, the next point tests."""

    methods: tuple
    warmup: int = 200
    train_rule: str = "odd_indices"
    calib_rule: str = "even_indices"

    def __post_init__(self):
        if self.warmup < 1:
            raise InputError("warmup must be positive")
        object.__setattr__(self, "methods", tuple(self.methods))


def parity_split(n: int):
    """1-based positions ``<= n`` split into (odd, even)."""
    pos = np.arange(1, n + 1)
    return pos[pos % 2 == 1], pos[pos % 2 == 0]


def run_rolling(X, Y, protocol: RollingProtocol, spec: RiskSpec, grid: LambdaGrid,
                task, trial: int = 0) -> List[TracePoint]:
    """Evaluate every method at steps ``n = warmup, ..., N - 1`` (test point ``n + 1``)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y)
    N = X.shape[0]
    if N <= protocol.warmup + 1:
        raise InputError(f"need more than warmup + 1 = {protocol.warmup + 1} points, got {N}")

    model_keys = {}
    for m in protocol.methods:
        key = m.weights if m.weighted_model else None
        model_keys.setdefault(key, task.new_model())

    out = []
    for n in range(protocol.warmup, N):
        train_pos, calib_pos = parity_split(n)
        tr, ca, te = train_pos - 1, calib_pos - 1, n
        rows = np.append(ca, te)
        evaluated = {}
        for key, model in model_keys.items():
            sw = None if key is None else key.time_weights(train_pos, n, spec)
            try:
                task.fit(model, X[tr], Y[tr], sample_weight=sw)
            except Exception as exc:
                raise TimestepError(f"trial {trial}, timestep {n}: model fit failed: {exc}") from exc
            losses, sizes = task.profiles(model, X[rows], Y[rows], grid)
            evaluated[key] = (losses, sizes)
        for m in protocol.methods:
            losses, sizes = evaluated[m.weights if m.weighted_model else None]
            batch = CalibrationBatch(losses[:-1], grid, spec, validate=False)
            if m.name == "crc":
                sel = crc_lambda_hat(batch)
            else:
                w = WeightVector(m.weights.time_weights(calib_pos, n, spec))
                sel = nonx_lambda_hat(batch, w)
            out.append(TracePoint(trial, n, m.name, sel.lambda_hat,
                                  float(losses[-1, sel.index]), float(sizes[-1, sel.index])))
    return out


def trial_seed(master: int, trial: int) -> int:
    """Deterministic per-trial seed derived from ``(master, trial)``."""
    return int(np.random.SeedSequence(entropy=master, spawn_key=(trial,)).generate_state(1)[0])


def run_trials(make_trial: Callable[[int, int], List[TracePoint]], n_trials: int,
               master_seed: int, jobs: int = 1) -> List[TracePoint]:
    """Run ``make_trial(trial, seed)`` for each trial and merge in canonical order."""
    seeds = [trial_seed(master_seed, t) for t in range(n_trials)]
    if jobs == 1:
        parts = [make_trial(t, s) for t, s in enumerate(seeds)]
    else:
        parts = Parallel(n_jobs=jobs)(delayed(make_trial)(t, s) for t, s in enumerate(seeds))
    return sort_traces([tp for part in parts for tp in part])


def sort_traces(traces: Sequence[TracePoint]) -> List[TracePoint]:
    return sorted(traces, key=lambda tp: (tp.trial, tp.timestep, tp.method))


# --- QA --------------------------------------------------------------------


def qa_grid(records, size: int = 201) -> LambdaGrid:
    """Grid over ``-score`` thresholds spanning every candidate score (empty set first)."""
    scores = np.concatenate([[c.score for c in r.candidates] for r in records])
    hi, lo = float(scores.max()), float(scores.min())
    pad = 1e-6 * max(1.0, hi - lo)
    return LambdaGrid(np.linspace(-hi - pad, -lo, size))


def qa_profiles(records, grid: LambdaGrid):
    """Best-F1 loss and set size profiles, one row per record."""
    losses = np.empty((len(records), len(grid)))
    sizes = np.empty_like(losses)
    for i, r in enumerate(records):
        f1 = [best_f1([c.text], r.gold_answers) for c in r.candidates]
        losses[i], sizes[i] = best_f1_profile([c.score for c in r.candidates], f1, grid.values)
    return losses, sizes


def run_qa_trials(records, n_calib: int, n_trials: int, spec: RiskSpec, weight_mode: str,
                  seed: int = 0, grid: Optional[LambdaGrid] = None,
                  n_eval: Optional[int] = None, profiles=None) -> List[TracePoint]:
    """Random calibration/evaluation splits; one trace row per evaluation question.

    ``uniform`` uses standard CRC (one lambda per trial); ``similarity`` picks a
    lambda per evaluation question from embedding-similarity weights.
    """
    if weight_mode not in ("uniform", "similarity"):
        raise InputError(f"weight mode must be 'uniform' or 'similarity', got {weight_mode!r}")
    N = len(records)
    if N < n_calib + 1:
        raise InputError(f"need at least {n_calib + 1} records, got {N}")
    grid = grid or qa_grid(records)
    losses, sizes = profiles if profiles is not None else qa_profiles(records, grid)
    E = np.asarray([r.embedding for r in records], dtype=float)
    out = []
    for trial in range(n_trials):
        perm = np.random.default_rng(trial_seed(seed, trial)).permutation(N)
        calib = perm[:n_calib]
        evals = perm[n_calib:] if n_eval is None else perm[n_calib:n_calib + n_eval]
        if weight_mode == "uniform":
            sel = crc_lambda_hat(CalibrationBatch(losses[calib], grid, spec, validate=False))
            idx = np.full(evals.size, sel.index)
            method = "crc"
        else:
            W = minmax_rows(E[evals] @ E[calib].T)
            _, idx, _ = nonx_lambda_hat_many(losses[calib], W, grid, spec)
            method = "nonx_crc"
        for j, (e, k) in enumerate(zip(evals, idx)):
            out.append(TracePoint(trial, j, method, float(grid[k]),
                                  float(losses[e, k]), float(sizes[e, k])))
    return out


# --- summaries and output -----------------------------------------------------


def rolling_average(trace: Sequence[float], window: int) -> np.ndarray:
    """Trailing mean over the last ``min(window, t + 1)`` entries."""
    if window < 1:
        raise InputError("window must be at least 1")
    x = np.asarray(trace, dtype=float)
    csum = np.concatenate(([0.0], np.cumsum(x)))
    t = np.arange(x.size)
    start = np.maximum(0, t + 1 - window)
    return (csum[t + 1] - csum[start]) / (t + 1 - start)


@dataclass(frozen=True)
class MethodStats:
    mean_loss: float
    median_loss: float
    mean_lambda: float
    mean_set_size: Optional[float]
    count: int


@dataclass(frozen=True)
class TrialSummary:
    per_method: Dict[str, MethodStats]


def summarize(traces: Sequence[TracePoint]) -> TrialSummary:
    if not traces:
        raise InputError("cannot summarize an empty trace")
    per = {}
    for name in sorted({tp.method for tp in traces}):
        rows = [tp for tp in traces if tp.method == name]
        loss = np.array([tp.test_loss for tp in rows])
        lam = np.array([tp.lambda_hat for tp in rows])
        sizes = [tp.set_size for tp in rows if tp.set_size is not None]
        per[name] = MethodStats(float(loss.mean()), float(np.median(loss)), float(lam.mean()),
                                float(np.mean(sizes)) if sizes else None, len(rows))
    return TrialSummary(per)


def per_trial_means(traces: Sequence[TracePoint], method: str, attr: str = "test_loss") -> np.ndarray:
    trials = sorted({tp.trial for tp in traces if tp.method == method})
    return np.array([np.mean([getattr(tp, attr) for tp in traces
                              if tp.method == method and tp.trial == t]) for t in trials])


def method_curve(traces: Sequence[TracePoint], method: str) -> np.ndarray:
    """Per-timestep test loss averaged over trials, in timestep order."""
    by_step: Dict[int, list] = {}
    for tp in traces:
        if tp.method == method:
            by_step.setdefault(tp.timestep, []).append(tp.test_loss)
    return np.array([np.mean(by_step[s]) for s in sorted(by_step)])


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def write_trace_csv(path, traces: Sequence[TracePoint]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for tp in sort_traces(traces):
            writer.writerow([tp.trial, tp.timestep, tp.method, _fmt(tp.lambda_hat),
                             _fmt(tp.test_loss), _fmt(tp.set_size)])


def read_trace_csv(path) -> List[TracePoint]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [TracePoint(int(r["trial"]), int(r["timestep"]), r["method"],
                           float(r["lambda_hat"]), float(r["test_loss"]),
                           float(r["set_size"]) if r["set_size"] else None)
                for r in csv.DictReader(fh)]
