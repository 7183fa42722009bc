"""Per-item difficulty from N repeated samples of a base model.

Discrete tasks are labelled from the number of correct samples ``c``; continuous
tasks are summarised by the IoU spread ``max(ious) - mean(ious)``. Grounded QA
gets both.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .corpus import DatasetRecord
from .parsing import ParsedResponse, TaskKind, parse_response
from .rewards import GroundTruth, combined_reward

# sampling settings the offline estimate assumes; recorded, not enforced
DEFAULT_SAMPLING = {"n": 8, "temperature": 1.0, "top_p": 0.99}


class DifficultyLabel(str, enum.Enum):
    EASY = "easy"
    MEDIUM = "medium"
    HARD = "hard"


def _default_delta_min():
    return {TaskKind.TVG.value: 0.3, TaskKind.GROUNDED_QA.value: 0.1}


@dataclass
class Thresholds:
    """Cut-offs for labelling and spread filtering.

    ``tau_easy``/``tau_hard`` are correct-count cut-offs at ``N = 8``: Easy means
    at least 7 of 8 correct, Hard at most 1 of 8.
    """

    tau_easy: int = 7
    tau_hard: int = 1
    delta_min: dict = field(default_factory=_default_delta_min)

    def __post_init__(self):
        if not 0 <= self.tau_hard < self.tau_easy:
            raise ValueError(
                f"need 0 <= tau_hard < tau_easy, got tau_hard={self.tau_hard}, tau_easy={self.tau_easy}"
            )
        self.delta_min = {TaskKind(k).value: float(v) for k, v in self.delta_min.items()}
        for task, value in self.delta_min.items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"delta_min for {task} must be in [0, 1], got {value}")

    def delta_min_for(self, task: TaskKind) -> float:
        return self.delta_min.get(TaskKind(task).value, 0.0)


@dataclass
class DifficultyRecord:
    item_id: str
    source: str
    task: TaskKind
    n_samples: int
    correct_count: int | None = None
    ious: list[float] | None = None
    mean_iou: float | None = None
    delta_iou: float | None = None
    label: DifficultyLabel | None = None

    def to_json(self) -> dict:
        return {
            "id": self.item_id,
            "source": self.source,
            "task": self.task.value,
            "n": self.n_samples,
            "c": self.correct_count,
            "ious": self.ious,
            "mean_iou": self.mean_iou,
            "delta_iou": self.delta_iou,
            "label": self.label.value if self.label is not None else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DifficultyRecord":
        label = obj.get("label")
        return cls(
            item_id=str(obj["id"]),
            source=obj["source"],
            task=TaskKind(obj["task"]),
            n_samples=int(obj["n"]),
            correct_count=obj.get("c"),
            ious=obj.get("ious"),
            mean_iou=obj.get("mean_iou"),
            delta_iou=obj.get("delta_iou"),
            label=DifficultyLabel(label) if label is not None else None,
        )


def correct_count(parsed_samples: list[ParsedResponse], gt: GroundTruth) -> int:
    """Samples that are both well-formatted and pick the right letter."""
    if not gt.task.is_discrete:
        raise ValueError(f"correct_count needs a discrete task, got {gt.task.value}")
    total = 0
    for parsed in parsed_samples:
        breakdown = combined_reward(parsed, gt)
        if breakdown.r_format == 1 and breakdown.r_acc == 1:
            total += 1
    return total


def classify_discrete(c: int, n: int, th: Thresholds | None = None) -> DifficultyLabel:
    th = th or Thresholds()
    if not 0 <= c <= n:
        raise ValueError(f"correct count {c} outside [0, {n}]")
    if c >= th.tau_easy:
        return DifficultyLabel.EASY
    if c <= th.tau_hard:
        return DifficultyLabel.HARD
    return DifficultyLabel.MEDIUM


def delta_iou(ious) -> float:
    values = np.asarray(ious, dtype=float)
    if values.size == 0:
        raise ValueError("delta_iou needs at least one IoU")
    if np.any(values < 0) or np.any(values > 1):
        raise ValueError("IoUs must lie in [0, 1]")
    if np.all(values == values[0]):
        return 0.0
    return max(0.0, float(values.max() - values.mean()))


def estimate(item: DatasetRecord, raw_samples: list[str] | None = None, th: Thresholds | None = None) -> DifficultyRecord:
    """Score every sample of one item and summarise its difficulty."""
    if raw_samples is None:
        raw_samples = item.samples
    if raw_samples is None:
        raise ValueError(f"item {item.item_id} has no samples")
    if len(raw_samples) < 2:
        raise ValueError(f"item {item.item_id}: need at least 2 samples, got {len(raw_samples)}")
    if item.gt.task is not item.task:
        raise ValueError(f"item {item.item_id}: task {item.task.value} vs ground truth {item.gt.task.value}")

    parsed = [parse_response(raw, item.task) for raw in raw_samples]
    breakdowns = [combined_reward(p, item.gt) for p in parsed]
    n = len(raw_samples)
    record = DifficultyRecord(item_id=item.item_id, source=item.source, task=item.task, n_samples=n)
    if item.task.is_discrete:
        c = sum(1 for b in breakdowns if b.r_format == 1 and b.r_acc == 1)
        record.correct_count = c
        record.label = classify_discrete(c, n, th)
    if item.task.is_continuous:
        ious = [float(b.r_iou) for b in breakdowns]
        record.ious = ious
        record.mean_iou = float(np.mean(ious))
        record.delta_iou = delta_iou(ious)
    return record
