"""Nested prediction-set families, monotone losses, and discrete TV distance.

Set members are 0-based indices into the score vector.
"""

from __future__ import annotations

import re
import string
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import InputError

SET_MODES = ("one_minus_lambda", "neg_lambda", "top_k")

_PUNCT = re.compile("[%s]" % re.escape(string.punctuation))


def _check_mode(mode: str) -> None:
    if mode not in SET_MODES:
        raise InputError(f"unknown set mode {mode!r}; expected one of {SET_MODES}")


def _as_count(lam) -> int:
    if float(lam) != int(lam) or lam < 0:
        raise InputError(f"top_k needs a nonnegative integer lambda, got {lam}")
    return int(lam)


def top_k_order(scores) -> np.ndarray:
    """Indices by descending score; ties go to the lower index."""
    return np.argsort(-np.asarray(scores, dtype=float), kind="stable")


def threshold_set(scores: Sequence[float], lam: float, mode: str = "one_minus_lambda") -> set:
    _check_mode(mode)
    s = np.asarray(scores, dtype=float)
    if mode == "top_k":
        k = _as_count(lam)
        if k > s.size:
            raise InputError(f"top_k lambda={k} exceeds {s.size} scores")
        return {int(i) for i in top_k_order(s)[:k]}
    cut = 1.0 - lam if mode == "one_minus_lambda" else -lam
    return {int(i) for i in np.flatnonzero(s >= cut)}


def interval(center: float, lam: float) -> tuple:
    """Symmetric interval ``[center - lam, center + lam]``."""
    return (center - lam, center + lam)


def fnr_loss(gold: Iterable[int], predicted: Iterable[int]) -> float:
    gold = set(gold)
    if not gold:
        raise InputError("false negative rate is undefined for an empty gold set")
    return 1.0 - len(gold & set(predicted)) / len(gold)


def insensitive_abs_loss(prediction: float, target: float, lam: float) -> float:
    return max(0.0, abs(prediction - target) - lam)


def miscoverage_loss(gold, predicted) -> float:
    return 0.0 if gold in predicted else 1.0


def normalize_tokens(text: str) -> list:
    """Lowercase, drop punctuation, split on whitespace."""
    return _PUNCT.sub("", text.lower()).split()


def token_f1(prediction, gold) -> float:
    """Multiset token F1; accepts raw strings or pre-tokenized sequences."""
    pred = normalize_tokens(prediction) if isinstance(prediction, str) else list(prediction)
    ref = normalize_tokens(gold) if isinstance(gold, str) else list(gold)
    if not pred or not ref:
        return float(pred == ref)
    common = sum((Counter(pred) & Counter(ref)).values())
    if common == 0:
        return 0.0
    precision = common / len(pred)
    recall = common / len(ref)
    return 2 * precision * recall / (precision + recall)


def best_f1(candidates, golds) -> float:
    if not golds:
        raise InputError("gold answer list must be nonempty")
    return max((token_f1(c, a) for c in candidates for a in golds), default=0.0)


def best_f1_loss(candidates, golds) -> float:
    return 1.0 - best_f1(candidates, golds)


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float).ravel()
        if p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise InputError("probabilities must be nonnegative and sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    def expect(self, f) -> float:
        return float(np.dot(self.probabilities, np.asarray(f, dtype=float)))


def tv_distance(p, q) -> float:
    """Total variation distance, half the L1 distance on a shared finite support."""
    p = p.probabilities if isinstance(p, DiscreteDistribution) else np.asarray(p, dtype=float)
    q = q.probabilities if isinstance(q, DiscreteDistribution) else np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise InputError(f"support sizes differ: {p.size} vs {q.size}")
    return 0.5 * float(np.abs(p - q).sum())


# Vectorized loss profiles: one row per example, one column per grid value.

def set_membership(scores: np.ndarray, grid: np.ndarray, mode: str) -> np.ndarray:
    """Boolean ``(n, M, G)`` array: label ``m`` of example ``i`` is in the set at ``grid[g]``."""
    _check_mode(mode)
    s = np.atleast_2d(np.asarray(scores, dtype=float))
    grid = np.asarray(grid, dtype=float)
    if mode == "top_k":
        ks = np.array([_as_count(g) for g in grid])
        ranks = np.empty_like(s, dtype=int)
        order = np.argsort(-s, axis=1, kind="stable")
        np.put_along_axis(ranks, order, np.arange(s.shape[1])[None, :], axis=1)
        return ranks[:, :, None] < ks[None, None, :]
    cut = 1.0 - grid if mode == "one_minus_lambda" else -grid
    return s[:, :, None] >= cut[None, None, :]


def fnr_profiles(scores: np.ndarray, gold: np.ndarray, grid, mode: str = "one_minus_lambda",
                 empty_loss: float = 0.0):
    """FNR loss profiles and set sizes for multilabel predictions.

    ``gold`` is a boolean ``(n, M)`` mask of positive labels. Rows without any
    positive label get ``empty_loss`` at every lambda.
    """
    gold = np.atleast_2d(np.asarray(gold, dtype=bool))
    member = set_membership(scores, grid, mode)
    n_gold = gold.sum(axis=1)
    hits = np.einsum("nm,nmg->ng", gold.astype(float), member.astype(float))
    with np.errstate(invalid="ignore", divide="ignore"):
        loss = 1.0 - hits / n_gold[:, None]
    loss[n_gold == 0] = empty_loss
    return loss, member.sum(axis=1)


def insensitive_abs_profiles(predictions, targets, grid) -> np.ndarray:
    resid = np.abs(np.asarray(predictions, dtype=float) - np.asarray(targets, dtype=float))
    return np.maximum(0.0, resid[:, None] - np.asarray(grid, dtype=float)[None, :])


def best_f1_profile(scores, candidate_f1, grid):
    """Best-F1 loss and set size along a ``neg_lambda`` grid for one question.

    ``candidate_f1[j]`` is candidate ``j``'s best F1 against the gold answers.
    """
    scores = np.asarray(scores, dtype=float)
    f1 = np.asarray(candidate_f1, dtype=float)
    order = top_k_order(scores)
    sorted_scores = scores[order]
    running = np.maximum.accumulate(f1[order]) if f1.size else f1
    # candidates with score >= -lam form a prefix of the descending order
    sizes = np.searchsorted(-sorted_scores, np.asarray(grid, dtype=float), side="right")
    padded = np.concatenate(([0.0], running))
    return 1.0 - padded[sizes], sizes
