"""Parsing of ``<think>/<observe>/<answer>`` tagged model responses.

A response is format-valid when it contains exactly one think block followed
by exactly one answer block (grounded QA additionally needs exactly one observe
block between them) and the answer body parses into the payload the task asks
for. Text outside the blocks is ignored.
"""

from __future__ import annotations

import enum
import math
import re
import string
from dataclasses import dataclass


class TaskKind(str, enum.Enum):
    MC_QA = "mc_qa"
    TVG = "tvg"
    GROUNDED_QA = "grounded_qa"

    @property
    def is_discrete(self) -> bool:
        return self in (TaskKind.MC_QA, TaskKind.GROUNDED_QA)

    @property
    def is_continuous(self) -> bool:
        return self in (TaskKind.TVG, TaskKind.GROUNDED_QA)


@dataclass(frozen=True)
class TimeSegment:
    """Closed interval ``[start, end]`` on the video timeline, in seconds."""

    start: float
    end: float

    @property
    def valid(self) -> bool:
        return (
            math.isfinite(self.start)
            and math.isfinite(self.end)
            and self.start >= 0
            and self.end > self.start
        )

    @property
    def length(self) -> float:
        return self.end - self.start

    def as_list(self) -> list[float]:
        return [self.start, self.end]


@dataclass(frozen=True)
class AnswerPayload:
    choice: str | None = None
    segment: TimeSegment | None = None

    def complete_for(self, task: TaskKind) -> bool:
        if task is TaskKind.MC_QA:
            return self.choice is not None
        if task is TaskKind.TVG:
            return self.segment is not None
        return self.choice is not None and self.segment is not None


@dataclass(frozen=True)
class ParsedResponse:
    task: TaskKind
    think: str
    payload: AnswerPayload
    format_ok: bool


_TAG_RE = re.compile(r"<(/?)(think|observe|answer)>")

_EXPECTED_TAGS = {
    TaskKind.MC_QA: ("think", "/think", "answer", "/answer"),
    TaskKind.TVG: ("think", "/think", "answer", "/answer"),
    TaskKind.GROUNDED_QA: ("think", "/think", "observe", "/observe", "answer", "/answer"),
}

_NUM = r"((?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
_UNIT = r"(?:\s*(?:seconds|second|secs|sec|s)\b)?"
_X = _NUM + _UNIT
# priority order; first full match wins
_SEGMENT_PATTERNS = [
    re.compile(rf"{_X}\s+to\s+{_X}", re.IGNORECASE),
    re.compile(rf"from\s+{_X}\s+to\s+{_X}", re.IGNORECASE),
    re.compile(rf"\(\s*{_X}\s*,\s*{_X}\s*\)", re.IGNORECASE),
    re.compile(rf"\[\s*{_X}\s*,\s*{_X}\s*\]", re.IGNORECASE),
    re.compile(rf"{_X}\s*-\s*{_X}", re.IGNORECASE),
]
_TRAILING_UNIT = re.compile(r"\s*(?:seconds|second|secs|sec|s)\s*\.?\s*$", re.IGNORECASE)

_STRIP_CHARS = string.whitespace + string.punctuation


def extract_segment(body: str) -> TimeSegment | None:
    """Read a ``(start, end)`` pair from an answer or observe body.

    Accepted forms: ``X to Y``, ``from X to Y``, ``(X, Y)``, ``[X, Y]`` and
    ``X - Y``, each optionally followed by ``seconds``/``s``. Degenerate or
    non-finite segments give ``None``.
    """
    text = body.strip()
    text = text.rstrip(".").rstrip()
    for pattern in _SEGMENT_PATTERNS:
        match = pattern.fullmatch(text)
        if match is None:
            stripped = _TRAILING_UNIT.sub("", text)
            match = pattern.fullmatch(stripped) if stripped != text else None
        if match is not None:
            seg = TimeSegment(float(match.group(1)), float(match.group(2)))
            return seg if seg.valid else None
    return None


def normalize_choice(text: str | None) -> str | None:
    """``"B"``, ``"(b)"``, ``" B. "`` -> ``"B"``; anything else -> ``None``."""
    if text is None:
        return None
    token = text.strip(_STRIP_CHARS).upper()
    if len(token) == 1 and token in string.ascii_uppercase:
        return token
    return None


def _strip_tags(text: str) -> str:
    # removing one marker can splice another together, so repeat
    while True:
        cleaned = _TAG_RE.sub("", text)
        if cleaned == text:
            return cleaned
        text = cleaned


def _blocks(raw: str) -> tuple[list[re.Match], dict[str, str]]:
    tags = list(_TAG_RE.finditer(raw))
    bodies: dict[str, str] = {}
    # first open/close pair per tag name, for partial recovery
    for i, open_tag in enumerate(tags):
        if open_tag.group(1):
            continue
        name = open_tag.group(2)
        if name in bodies:
            continue
        for close_tag in tags[i + 1:]:
            if close_tag.group(1) and close_tag.group(2) == name:
                bodies[name] = _strip_tags(raw[open_tag.end():close_tag.start()])
                break
    return tags, bodies


def parse_response(raw: str, task: TaskKind | str) -> ParsedResponse:
    """Parse one sampled output. Never raises on malformed text."""
    task = TaskKind(task)
    tags, bodies = _blocks(raw)
    sequence = tuple(m.group(1) + m.group(2) for m in tags)
    structure_ok = sequence == _EXPECTED_TAGS[task]

    think = bodies.get("think", "").strip()
    answer = bodies.get("answer")
    choice = None
    segment = None
    if task is TaskKind.MC_QA:
        choice = normalize_choice(answer)
    elif task is TaskKind.TVG:
        segment = extract_segment(answer) if answer is not None else None
    else:
        choice = normalize_choice(answer)
        observe = bodies.get("observe")
        segment = extract_segment(observe) if observe is not None else None

    payload = AnswerPayload(choice=choice, segment=segment)
    format_ok = structure_ok and payload.complete_for(task)
    return ParsedResponse(task=task, think=think, payload=payload, format_ok=format_ok)


def check_format(raw: str, task: TaskKind | str) -> int:
    return int(parse_response(raw, task).format_ok)


def format_segment(seg: TimeSegment) -> str:
    # repr keeps the float exact through a re-parse
    return f"{seg.start!r} to {seg.end!r}"


def render_response(
    task: TaskKind | str,
    think: str,
    choice: str | None = None,
    segment: TimeSegment | None = None,
) -> str:
    """Render the canonical template for a task."""
    task = TaskKind(task)
    parts = [f"<think>{think}</think>"]
    if task is TaskKind.GROUNDED_QA:
        parts.append(f"<observe>{format_segment(segment)}</observe>")
    if task is TaskKind.TVG:
        parts.append(f"<answer>{format_segment(segment)}</answer>")
    else:
        parts.append(f"<answer>{choice}</answer>")
    return "".join(parts)


def render_parsed(parsed: ParsedResponse) -> str:
    return render_response(
        parsed.task, parsed.think, parsed.payload.choice, parsed.payload.segment
    )
