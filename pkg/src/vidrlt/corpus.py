"""JSONL corpus records, loading and schema validation.

Input corpus lines look like::

    {"id": "nextqa-0001", "source": "NextQA", "task": "mc_qa",
     "question": "...", "choices": ["...", "..."], "gt_answer": "B",
     "video_ref": "s3://bucket/v.mp4", "samples": ["<think>..</think><answer>B</answer>"]}

``gt_segment`` is ``[start, end]`` in seconds for ``tvg`` and ``grounded_qa``.
``video_ref`` is carried through untouched and never opened.
"""

from __future__ import annotations

import json
import math
import string
from dataclasses import dataclass
from pathlib import Path

from .parsing import TaskKind, TimeSegment
from .rewards import GroundTruth

REQUIRED_KEYS = ("id", "source", "task", "question", "video_ref")
OPTIONAL_KEYS = ("choices", "gt_answer", "gt_segment", "samples")
ALLOWED_KEYS = frozenset(REQUIRED_KEYS + OPTIONAL_KEYS)


class CorpusError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "\n".join(str(v) for v in self.violations[:20])
        more = "" if len(self.violations) <= 20 else f"\n... {len(self.violations) - 20} more"
        super().__init__(f"{len(self.violations)} schema violation(s):\n{lines}{more}")


@dataclass(frozen=True)
class Violation:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


@dataclass
class DatasetRecord:
    item_id: str
    source: str
    task: TaskKind
    question: str
    gt: GroundTruth
    video_ref: str
    choices: list[str] | None = None
    samples: list[str] | None = None

    @classmethod
    def from_json(cls, obj: dict) -> "DatasetRecord":
        task = TaskKind(obj["task"])
        seg = obj.get("gt_segment")
        gt = GroundTruth(
            task=task,
            gt_choice=obj.get("gt_answer") if task.is_discrete else None,
            gt_segment=TimeSegment(float(seg[0]), float(seg[1])) if seg is not None and task.is_continuous else None,
        )
        return cls(
            item_id=str(obj["id"]),
            source=obj["source"],
            task=task,
            question=obj["question"],
            gt=gt,
            video_ref=obj["video_ref"],
            choices=obj.get("choices"),
            samples=obj.get("samples"),
        )

    def to_json(self) -> dict:
        out = {
            "id": self.item_id,
            "source": self.source,
            "task": self.task.value,
            "question": self.question,
        }
        if self.choices is not None:
            out["choices"] = list(self.choices)
        if self.gt.gt_choice is not None:
            out["gt_answer"] = self.gt.gt_choice
        if self.gt.gt_segment is not None:
            out["gt_segment"] = self.gt.gt_segment.as_list()
        out["video_ref"] = self.video_ref
        if self.samples is not None:
            out["samples"] = list(self.samples)
        return out


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def record_violations(obj, line: int) -> list[Violation]:
    """Schema problems of one decoded JSON line."""
    if not isinstance(obj, dict):
        return [Violation(line, "record is not a JSON object")]
    errs = []
    for key in REQUIRED_KEYS:
        if key not in obj:
            errs.append(f"missing field {key!r}")
    for key in sorted(set(obj) - ALLOWED_KEYS):
        errs.append(f"unknown field {key!r}")
    for key in ("id", "source", "question", "video_ref"):
        if key in obj and not isinstance(obj[key], str):
            errs.append(f"field {key!r} must be a string")

    task = None
    if "task" in obj:
        try:
            task = TaskKind(obj["task"])
        except ValueError:
            errs.append(f"bad task {obj['task']!r}; expected one of {[t.value for t in TaskKind]}")

    if task is not None and task.is_discrete:
        choices = obj.get("choices")
        if choices is None:
            errs.append(f"{task.value} record needs 'choices'")
        elif not isinstance(choices, list) or not all(isinstance(c, str) for c in choices):
            errs.append("'choices' must be a list of strings")
        elif len(choices) < 2:
            errs.append(f"{task.value} record needs at least 2 choices, got {len(choices)}")
        answer = obj.get("gt_answer")
        if answer is None:
            errs.append(f"{task.value} record needs 'gt_answer'")
        elif not (isinstance(answer, str) and len(answer) == 1 and answer in string.ascii_uppercase):
            errs.append(f"'gt_answer' must be a single uppercase letter, got {answer!r}")
        elif isinstance(choices, list) and len(choices) >= 2:
            if string.ascii_uppercase.index(answer) >= len(choices):
                errs.append(f"'gt_answer' {answer} does not index into {len(choices)} choices")

    if task is not None and task.is_continuous:
        seg = obj.get("gt_segment")
        if seg is None:
            errs.append(f"{task.value} record needs 'gt_segment'")
        elif not (isinstance(seg, list) and len(seg) == 2 and all(_is_number(v) for v in seg)):
            errs.append("'gt_segment' must be [start, end] numbers")
        elif not TimeSegment(float(seg[0]), float(seg[1])).valid:
            errs.append(f"'gt_segment' {seg} needs 0 <= start < end")

    if "samples" in obj:
        samples = obj["samples"]
        if not isinstance(samples, list) or not all(isinstance(s, str) for s in samples):
            errs.append("'samples' must be a list of strings")
    return [Violation(line, e) for e in errs]


def _iter_lines(path):
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, text in enumerate(fh, start=1):
            if text.strip():
                yield lineno, text


def validate_corpus(path) -> list[Violation]:
    """Every record-level schema violation in a JSONL corpus; empty means valid.

    Raises ``OSError`` if the file cannot be read.
    """
    violations = []
    for lineno, text in _iter_lines(path):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            violations.append(Violation(lineno, f"invalid JSON: {exc.msg}"))
            continue
        violations.extend(record_violations(obj, lineno))
    return violations


def load_corpus(path) -> list[DatasetRecord]:
    violations = validate_corpus(path)
    if violations:
        raise CorpusError(violations)
    return [DatasetRecord.from_json(json.loads(text)) for _, text in _iter_lines(path)]


def read_jsonl(path) -> list[dict]:
    return [json.loads(text) for _, text in _iter_lines(path)]


def write_jsonl(path, rows) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=False, ensure_ascii=False))
            fh.write("\n")
