"""Verifiable rewards: format, answer accuracy, temporal IoU and the per-task totals.

All three task totals live in ``[0, 2]``:

* multi-choice QA:  ``format + acc``
* grounding:        ``format + tiou``
* grounded QA:      ``format + (acc + tiou) / 2``

A response that fails the format check scores 0 on every component.
"""

from __future__ import annotations

from dataclasses import dataclass

from .parsing import ParsedResponse, TaskKind, TimeSegment, normalize_choice, parse_response


@dataclass(frozen=True)
class GroundTruth:
    task: TaskKind
    gt_choice: str | None = None
    gt_segment: TimeSegment | None = None

    def __post_init__(self):
        object.__setattr__(self, "task", TaskKind(self.task))
        if self.gt_choice is not None:
            letter = normalize_choice(self.gt_choice)
            if letter is None:
                raise ValueError(f"bad ground-truth choice {self.gt_choice!r}")
            object.__setattr__(self, "gt_choice", letter)
        if self.task.is_discrete and self.gt_choice is None:
            raise ValueError(f"{self.task.value} ground truth needs gt_choice")
        if self.task.is_continuous:
            if self.gt_segment is None:
                raise ValueError(f"{self.task.value} ground truth needs gt_segment")
            if not self.gt_segment.valid:
                raise ValueError(f"invalid ground-truth segment {self.gt_segment}")


@dataclass(frozen=True)
class RewardBreakdown:
    task: TaskKind
    r_format: int
    r_acc: int | None
    r_iou: float | None
    total: float
    degenerate: bool = False


def accuracy_reward(pred: str | None, gt: str) -> int:
    """1 if the normalized predicted letter equals the ground-truth letter, else 0."""
    pred = normalize_choice(pred)
    return int(pred is not None and pred == normalize_choice(gt))


def tiou_reward(pred: TimeSegment, gt: TimeSegment) -> float:
    """Temporal IoU of two closed intervals.

    Touching intervals score 0. A degenerate prediction (``end <= start``)
    scores 0; a degenerate ground truth is a caller error.
    """
    if not gt.valid:
        raise ValueError(f"invalid ground-truth segment {gt}")
    if not pred.valid:
        return 0.0
    inter = max(0.0, min(pred.end, gt.end) - max(pred.start, gt.start))
    union = max(pred.end, gt.end) - min(pred.start, gt.start)
    return inter / union


def task_total(task: TaskKind, r_format: int, r_acc: int | None, r_iou: float | None) -> float:
    task = TaskKind(task)
    if task is TaskKind.MC_QA:
        return float(r_format + r_acc)
    if task is TaskKind.TVG:
        return float(r_format + r_iou)
    return r_format + 0.5 * (r_acc + r_iou)


def combined_reward(parsed: ParsedResponse, gt: GroundTruth) -> RewardBreakdown:
    if parsed.task is not gt.task:
        raise ValueError(
            f"response parsed as {parsed.task.value} but ground truth is {gt.task.value}"
        )
    task = gt.task
    r_acc = 0 if task.is_discrete else None
    r_iou = 0.0 if task.is_continuous else None
    degenerate = False
    if parsed.format_ok:
        r_format = 1
        if task.is_discrete:
            r_acc = accuracy_reward(parsed.payload.choice, gt.gt_choice)
        if task.is_continuous:
            seg = parsed.payload.segment
            degenerate = not seg.valid
            r_iou = tiou_reward(seg, gt.gt_segment)
    else:
        r_format = 0
    return RewardBreakdown(
        task=task,
        r_format=r_format,
        r_acc=r_acc,
        r_iou=r_iou,
        total=task_total(task, r_format, r_acc, r_iou),
        degenerate=degenerate,
    )


def score_response(raw: str, gt: GroundTruth) -> RewardBreakdown:
    """Parse ``raw`` for the ground truth's task and score it."""
    return combined_reward(parse_response(raw, gt.task), gt)
