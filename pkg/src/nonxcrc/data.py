"""Synthetic multilabel streams, electricity CSV ingestion, and QA candidate files."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, NamedTuple, Sequence

import numpy as np

from .core import InputError

SETTINGS = ("iid", "changepoints", "drift")
ELEC_COLUMNS = ("nswprice", "vicprice", "nswdemand", "vicdemand", "transfer")
ELEC_FEATURES = ELEC_COLUMNS[:4]


class IngestionError(ValueError):
    """Malformed or out-of-range input file content."""


# --- synthetic multilabel time series -------------------------------------


@dataclass(frozen=True)
class SyntheticConfig:
    n_points: int = 2000
    n_labels: int = 10
    setting: str = "iid"
    changepoint_steps: tuple = (500, 1500)
    noise_scale: float = 0.1
    bias: float = -0.5
    seed: int = 0

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise InputError(f"setting must be one of {SETTINGS}, got {self.setting!r}")
        steps = tuple(int(s) for s in self.changepoint_steps)
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise InputError("changepoint steps must be strictly increasing")
        if self.setting == "changepoints" and any(s < 0 or s > self.n_points for s in steps):
            raise InputError("changepoint steps must lie within [0, n_points]")
        object.__setattr__(self, "changepoint_steps", steps)


def rotate_rows(W: np.ndarray) -> np.ndarray:
    """Row ``i`` takes row ``i - 1``; the first row takes the last."""
    return np.roll(W, 1, axis=0)


def coefficient_path(config: SyntheticConfig) -> np.ndarray:
    """``(n_points, M, M)`` coefficient matrix in force at each 0-based timestep."""
    N, M = config.n_points, config.n_labels
    eye = np.eye(M)
    if config.setting == "iid":
        return np.broadcast_to(eye, (N, M, M))
    t = np.arange(N)
    if config.setting == "changepoints":
        mats = [eye]
        for _ in config.changepoint_steps:
            mats.append(rotate_rows(mats[-1]))
        segment = np.searchsorted(np.asarray(config.changepoint_steps), t, side="right")
        return np.stack(mats)[segment]
    final = eye
    for _ in config.changepoint_steps:
        final = rotate_rows(final)
    frac = (t / N)[:, None, None]
    return (1.0 - frac) * eye + frac * final


def synthetic_labels(X, W, bias: float, noise) -> np.ndarray:
    """``sign(W x + b + noise)`` with ties at zero mapped to +1."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    W = np.asarray(W, dtype=float)
    lin = np.einsum("...ij,...j->...i", W, X) + bias + noise
    return np.where(lin >= 0, 1, -1)


def generate_synthetic(config: SyntheticConfig):
    """Draw ``(X, Y)`` with ``X ~ N(0, I_M)`` rows and ``Y`` in {-1, +1}."""
    rng = np.random.default_rng(config.seed)
    N, M = config.n_points, config.n_labels
    X = rng.standard_normal((N, M))
    eps = rng.standard_normal((N, M))
    Y = synthetic_labels(X, coefficient_path(config), config.bias, config.noise_scale * eps)
    return X, Y


# --- electricity ---------------------------------------------------------


class ElecRecord(NamedTuple):
    nswprice: float
    vicprice: float
    nswdemand: float
    vicdemand: float
    transfer: float


@dataclass(frozen=True, eq=False)
class ElecData:
    features: np.ndarray
    target: np.ndarray
    order: np.ndarray = None

    def __post_init__(self):
        if self.order is None:
            object.__setattr__(self, "order", np.arange(len(self.target)))

    def __len__(self):
        return len(self.target)

    def __getitem__(self, i) -> ElecRecord:
        return ElecRecord(*self.features[i], self.target[i])

    @property
    def records(self) -> List[ElecRecord]:
        return [self[i] for i in range(len(self))]


def load_elec_csv(path, permute: bool = False, seed: int = 0) -> ElecData:
    """Read the five-column electricity CSV; optionally apply a seeded permutation."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in ELEC_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise IngestionError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            values = []
            for col in ELEC_COLUMNS:
                try:
                    v = float(row[col])
                except (TypeError, ValueError):
                    raise IngestionError(f"{path}: row {lineno}, column {col}: "
                                         f"cannot parse {row[col]!r}") from None
                if not (0.0 <= v <= 1.0):
                    raise IngestionError(f"{path}: row {lineno}, column {col}: "
                                         f"value {v} outside [0, 1]")
                values.append(v)
            rows.append(values)
    arr = np.asarray(rows, dtype=float).reshape(-1, len(ELEC_COLUMNS))
    order = np.arange(arr.shape[0])
    if permute:
        order = np.random.default_rng(seed).permutation(arr.shape[0])
        arr = arr[order]
    return ElecData(arr[:, :4].copy(), arr[:, 4].copy(), order)


def write_elec_csv(path, data: ElecData) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ELEC_COLUMNS)
        for x, y in zip(data.features, data.target):
            writer.writerow([f"{v:.6f}" for v in (*x, y)])


def generate_elec_like(n: int = 3444, seed: int = 0, noisy_span=(0.35, 0.65)) -> ElecData:
    """Electricity-style stand-in: four [0, 1] features and a [0, 1] transfer target.

    Features follow slowly mean-reverting walks. The linear map to the target
    drifts over time, and the noise level is raised 2.5-fold inside ``noisy_span``
    (fractions of the series), mimicking the noisier middle of the real data.
    """
    rng = np.random.default_rng(seed)
    X = np.empty((n, 4))
    state = rng.uniform(0.3, 0.7, size=4)
    for t in range(n):
        state = state + 0.1 * (0.5 - state) + 0.05 * rng.standard_normal(4)
        X[t] = state
    X = np.clip(X, 0.0, 1.0)
    frac = np.arange(n) / n
    slope_start = np.array([0.5, -0.4, 0.3, -0.3])
    slope_end = np.array([0.2, -0.1, 0.6, -0.5])
    slopes = (1 - frac)[:, None] * slope_start + frac[:, None] * slope_end
    noise_sd = np.where((frac >= noisy_span[0]) & (frac < noisy_span[1]), 0.15, 0.06)
    y = 0.5 + np.sum(slopes * (X - 0.5), axis=1) + noise_sd * rng.standard_normal(n)
    return ElecData(X, np.clip(y, 0.0, 1.0))


# --- question answering --------------------------------------------------


@dataclass(frozen=True)
class Candidate:
    text: str
    score: float


@dataclass(frozen=True)
class QaRecord:
    id: str
    question: str
    embedding: tuple
    gold_answers: tuple
    candidates: tuple = field(default=())

    def __post_init__(self):
        if not self.gold_answers:
            raise InputError(f"record {self.id!r}: gold_answers must be nonempty")
        ordered = tuple(sorted(self.candidates, key=lambda c: -c.score))
        object.__setattr__(self, "candidates", ordered)
        object.__setattr__(self, "embedding", tuple(float(v) for v in self.embedding))
        object.__setattr__(self, "gold_answers", tuple(self.gold_answers))

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "question": self.question,
            "embedding": list(self.embedding),
            "gold_answers": list(self.gold_answers),
            "candidates": [{"text": c.text, "score": c.score} for c in self.candidates],
        }


_QA_FIELDS = ("id", "question", "embedding", "gold_answers", "candidates")


def load_qa_jsonl(path) -> List[QaRecord]:
    path = Path(path)
    records = []
    dim = None
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestionError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from None
            missing = [k for k in _QA_FIELDS if k not in obj]
            if missing:
                raise IngestionError(f"{path}: line {lineno}: missing field(s) {', '.join(missing)}")
            if not obj["gold_answers"]:
                raise IngestionError(f"{path}: line {lineno}: gold_answers is empty")
            if dim is None:
                dim = len(obj["embedding"])
            elif len(obj["embedding"]) != dim:
                raise IngestionError(f"{path}: line {lineno}: embedding length "
                                     f"{len(obj['embedding'])}, expected {dim}")
            try:
                cands = tuple(Candidate(str(c["text"]), float(c["score"])) for c in obj["candidates"])
            except (KeyError, TypeError, ValueError):
                raise IngestionError(f"{path}: line {lineno}: malformed candidate entry") from None
            records.append(QaRecord(str(obj["id"]), str(obj["question"]), obj["embedding"],
                                    tuple(str(a) for a in obj["gold_answers"]), cands))
    return records


def write_qa_jsonl(path, records: Sequence[QaRecord]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json()) + "\n")


_VOCAB = (
    "river mountain castle engine violet harbor comet falcon granite lantern orchard "
    "meadow copper saffron tundra beacon cobalt ember glacier hollow ivory juniper "
    "kestrel lagoon marble nectar obsidian pepper quartz raven summit thistle umber "
    "velvet willow yarrow zephyr amber birch cedar dune fern grove heron iris jade"
).split()


def generate_qa_fixture(n: int, seed: int = 0, n_clusters: int = 4, dim: int = 8,
                        n_candidates: int = 40) -> List[QaRecord]:
    """Synthetic stand-in for retriever/reader output.

    Questions fall into ``n_clusters`` topics with near-orthogonal embeddings.
    Within a question, the exact gold answer sits at a geometrically
    distributed rank and a partial-overlap candidate sits near it. Each topic
    maps ranks to scores on its own scale, so a single global score threshold
    suits some topics far better than others.
    """
    if n < 1:
        raise InputError("n must be at least 1")
    rng = np.random.default_rng(seed)
    centers = np.eye(max(dim, n_clusters))[:n_clusters, :dim]
    offsets = np.linspace(0.0, 0.6, n_clusters)
    records = []
    for i in range(n):
        c = int(rng.integers(n_clusters))
        emb = centers[c] + 0.1 * rng.standard_normal(dim)
        gold_words = list(rng.choice(_VOCAB, size=2, replace=False))
        gold = " ".join(gold_words)
        others = [w for w in _VOCAB if w not in gold_words]
        texts = [" ".join(rng.choice(others, size=int(rng.integers(1, 4)), replace=False))
                 for _ in range(n_candidates)]
        rank = min(int(rng.geometric(0.12)) - 1, n_candidates - 1)
        texts[rank] = gold
        near = min(rank + int(rng.integers(-3, 4)), n_candidates - 1)
        if near != rank and near >= 0:
            texts[near] = f"{gold_words[int(rng.integers(2))]} {rng.choice(others)}"
        base = np.sort(rng.uniform(0.0, 1.0, size=n_candidates))[::-1]
        scores = offsets[c] + 0.4 * base
        cands = tuple(Candidate(t, round(float(s), 6)) for t, s in zip(texts, scores))
        records.append(QaRecord(f"q{i}", f"synthetic question {i} topic {c}",
                                tuple(round(float(v), 6) for v in emb), (gold,), cands))
    return records
