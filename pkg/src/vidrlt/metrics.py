"""Benchmark aggregates: mIoU, Recall@IoU and multi-choice accuracy.

Missing predictions (``None``) count as IoU 0 / wrong answer; nothing is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rewards import accuracy_reward, tiou_reward

DEFAULT_THRESHOLDS = (0.3, 0.5, 0.7)


def pair_ious(pairs) -> np.ndarray:
    return np.array(
        [0.0 if pred is None else tiou_reward(pred, gt) for pred, gt in pairs],
        dtype=float,
    )


def miou(pairs) -> float:
    ious = pair_ious(pairs)
    if ious.size == 0:
        raise ValueError("miou needs at least one (pred, gt) pair")
    return float(ious.mean())


def recall_from_ious(ious, thresholds=DEFAULT_THRESHOLDS) -> dict:
    ious = np.asarray(ious, dtype=float)
    out = {}
    for t in thresholds:
        if not 0 < t <= 1:
            raise ValueError(f"threshold {t} outside (0, 1]")
        out[t] = float(np.mean(ious >= t)) if ious.size else 0.0
    return out


def recall_at(pairs, thresholds=DEFAULT_THRESHOLDS) -> dict:
    """Fraction of pairs whose IoU reaches each threshold."""
    return recall_from_ious(pair_ious(pairs), thresholds)


def qa_accuracy(preds, gts) -> float:
    preds, gts = list(preds), list(gts)
    if len(preds) != len(gts):
        raise ValueError(f"{len(preds)} predictions vs {len(gts)} ground truths")
    if not preds:
        raise ValueError("qa_accuracy needs at least one prediction")
    return float(np.mean([accuracy_reward(p, g) for p, g in zip(preds, gts)]))


@dataclass
class GroundingEval:
    ious: np.ndarray
    miou: float
    recall: dict

    def to_text(self) -> str:
        cols = [f"R@{t}" for t in self.recall] + ["mIoU"]
        vals = [f"{100 * v:.1f}" for v in self.recall.values()] + [f"{100 * self.miou:.1f}"]
        width = max(len(c) for c in cols) + 2
        return "".join(c.rjust(width) for c in cols) + "\n" + "".join(v.rjust(width) for v in vals)


def evaluate_grounding(pairs, thresholds=DEFAULT_THRESHOLDS) -> GroundingEval:
    ious = pair_ious(pairs)
    if ious.size == 0:
        raise ValueError("evaluate_grounding needs at least one pair")
    return GroundingEval(ious=ious, miou=float(ious.mean()), recall=recall_from_ious(ious, thresholds))


def recall_integral(ious, n_grid: int = 1000) -> float:
    """Midpoint-rule integral of Recall@t over t in [0, 1]."""
    grid = (np.arange(n_grid) + 0.5) / n_grid
    ious = np.asarray(ious, dtype=float)
    return float(np.mean(ious[None, :] >= grid[:, None]))
