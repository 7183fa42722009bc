"""Difficulty-aware subset construction and distribution reports.

Selection runs per task:

1. continuous-reward records whose ``delta_iou`` falls below the task's
   ``delta_min`` are dropped;
2. the task target is split over Easy/Medium/Hard by largest-remainder
   apportionment of ``ratio_easy_medium_hard`` (grounding records carry no
   label and form a single stratum);
3. each stratum quota is drawn by seeded round-robin over sources, with a
   seeded shuffle inside each source.

Strata never borrow from each other. A short stratum yields what it has and a
warning lands in the manifest.
"""

from __future__ import annotations

import hashlib
import json
import zlib
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from .difficulty import DifficultyLabel, DifficultyRecord, Thresholds
from .parsing import TaskKind

STRATA = (DifficultyLabel.EASY, DifficultyLabel.MEDIUM, DifficultyLabel.HARD)
ALL = "all"
DELTA_HIST_NAME = "delta_iou (max - mean)"


@dataclass
class SelectionConfig:
    thresholds: Thresholds = field(default_factory=Thresholds)
    ratio_easy_medium_hard: tuple = (0, 1, 0)
    target_counts: dict = field(default_factory=dict)
    per_source_balance: bool = True
    rng_seed: int = 0
    # how grounded QA combines its label and spread criteria
    gqa_combine: str = "intersection"

    def __post_init__(self):
        if isinstance(self.thresholds, dict):
            self.thresholds = Thresholds(**self.thresholds)
        ratio = tuple(int(r) for r in self.ratio_easy_medium_hard)
        if len(ratio) != 3 or any(r < 0 for r in ratio) or sum(ratio) == 0:
            raise ValueError(f"ratio_easy_medium_hard must be 3 non-negative ints, not all zero; got {ratio}")
        self.ratio_easy_medium_hard = ratio
        counts = {}
        for task, n in self.target_counts.items():
            if int(n) < 0:
                raise ValueError(f"target count for {task} must be >= 0")
            counts[TaskKind(task).value] = int(n)
        self.target_counts = counts
        if self.gqa_combine not in ("intersection", "union"):
            raise ValueError(f"gqa_combine must be 'intersection' or 'union', got {self.gqa_combine!r}")

    @classmethod
    def from_dict(cls, obj: dict) -> "SelectionConfig":
        known = {"thresholds", "ratio_easy_medium_hard", "target_counts", "per_source_balance", "rng_seed", "gqa_combine"}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown selection config keys: {sorted(unknown)}")
        return cls(**obj)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ratio_easy_medium_hard"] = list(self.ratio_easy_medium_hard)
        return out


@dataclass
class StratumCount:
    requested: int
    available: int
    selected: int


@dataclass
class SelectionResult:
    item_ids: list[str]
    counts: dict
    warnings: list[str]

    def per_source(self, records) -> dict:
        """``{task: {stratum: {source: n}}}`` for the selected ids."""
        by_id = {r.item_id: r for r in records}
        out: dict = {}
        for item_id in self.item_ids:
            r = by_id[item_id]
            stratum = r.label.value if r.label is not None and r.task is not TaskKind.TVG else ALL
            src = out.setdefault(r.task.value, {}).setdefault(stratum, {})
            src[r.source] = src.get(r.source, 0) + 1
        return out


def largest_remainder(total: int, weights) -> list[int]:
    """Split ``total`` in proportion to ``weights`` with integer parts.

    Floors first, then hands leftovers to the largest fractional remainders;
    equal remainders go to the earlier entry.
    """
    weights = [int(w) for w in weights]
    wsum = sum(weights)
    if wsum <= 0:
        raise ValueError("weights must sum to a positive number")
    # integer arithmetic so 1:8:1 of 100 is exactly 10/80/10
    quotas = [total * w // wsum for w in weights]
    remainders = [total * w % wsum for w in weights]
    leftover = total - sum(quotas)
    order = sorted(range(len(weights)), key=lambda i: (-remainders[i], i))
    for i in order[:leftover]:
        quotas[i] += 1
    return quotas


def _stable_key(*parts) -> int:
    return zlib.crc32("\x1f".join(str(p) for p in parts).encode("utf-8"))


def _round_robin(pool: list[DifficultyRecord], quota: int, rng: np.random.Generator, balance: bool) -> list[str]:
    if quota <= 0 or not pool:
        return []
    if not balance:
        ids = sorted(r.item_id for r in pool)
        picked = rng.permutation(len(ids))[:quota]
        return [ids[i] for i in picked]
    by_source: dict[str, list[str]] = {}
    for r in pool:
        by_source.setdefault(r.source, []).append(r.item_id)
    names = sorted(by_source)
    names = [names[i] for i in rng.permutation(len(names))]
    queues = []
    for name in names:
        ids = sorted(by_source[name])
        queues.append([ids[i] for i in rng.permutation(len(ids))])
    out: list[str] = []
    depth = 0
    # one item per source per round; exhausted sources drop out
    while len(out) < quota:
        progressed = False
        for queue in queues:
            if depth < len(queue):
                out.append(queue[depth])
                progressed = True
                if len(out) == quota:
                    break
        if not progressed:
            break
        depth += 1
    return out


def _eligible(record: DifficultyRecord, cfg: SelectionConfig) -> bool:
    task = record.task
    if not task.is_continuous:
        return True
    delta = record.delta_iou if record.delta_iou is not None else 0.0
    passes_delta = delta >= cfg.thresholds.delta_min_for(task)
    if task is TaskKind.GROUNDED_QA and cfg.gqa_combine == "union":
        return passes_delta or record.label is DifficultyLabel.MEDIUM
    return passes_delta


def select(records: list[DifficultyRecord], cfg: SelectionConfig) -> SelectionResult:
    """Pick item ids per task following ``cfg``; deterministic in ``cfg.rng_seed``."""
    records = sorted(records, key=lambda r: r.item_id)
    ids_seen = set()
    for r in records:
        if r.item_id in ids_seen:
            raise ValueError(f"duplicate item id {r.item_id!r}")
        ids_seen.add(r.item_id)

    selected: list[str] = []
    counts: dict = {}
    warnings: list[str] = []
    for task in TaskKind:
        target = cfg.target_counts.get(task.value, 0)
        task_records = [r for r in records if r.task is task]
        if target == 0 and not task_records:
            continue
        eligible = [r for r in task_records if _eligible(r, cfg)]
        dropped = len(task_records) - len(eligible)
        task_counts = counts.setdefault(task.value, {})
        if task.is_discrete:
            missing = [r.item_id for r in eligible if r.label is None]
            if missing:
                raise ValueError(f"{task.value} records without a difficulty label: {missing[:5]}")
            quotas = largest_remainder(target, cfg.ratio_easy_medium_hard)
            strata = [(s.value, [r for r in eligible if r.label is s], q) for s, q in zip(STRATA, quotas)]
        else:
            strata = [(ALL, eligible, target)]
        for stratum, pool, quota in strata:
            rng = np.random.default_rng([cfg.rng_seed, _stable_key(task.value, stratum)])
            picked = _round_robin(pool, quota, rng, cfg.per_source_balance)
            task_counts[stratum] = asdict(StratumCount(quota, len(pool), len(picked)))
            if len(picked) < quota:
                warnings.append(
                    f"shortfall: {task.value}/{stratum} requested {quota}, only {len(pool)} eligible"
                    + (f" ({dropped} below delta_min)" if dropped else "")
                )
            selected.extend(picked)
    return SelectionResult(item_ids=selected, counts=counts, warnings=warnings)


def digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def build_manifest(command: str, config: dict, inputs, rng_seed, warnings, extra: dict | None = None) -> dict:
    """Run manifest. ``timestamp`` is the only field that varies between reruns."""
    manifest = {
        "command": command,
        "config": config,
        "config_digest": digest(config),
        "input_digest": digest(inputs),
        "rng_seed": rng_seed,
        "warnings": list(warnings),
    }
    if extra:
        manifest.update(extra)
    manifest["timestamp"] = datetime.now(timezone.utc).isoformat()
    return manifest


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def selection_manifest(records, cfg: SelectionConfig, result: SelectionResult) -> dict:
    return build_manifest(
        "select",
        cfg.to_dict(),
        [r.to_json() for r in sorted(records, key=lambda r: r.item_id)],
        cfg.rng_seed,
        result.warnings,
        extra={"counts": result.counts, "n_selected": len(result.item_ids)},
    )


# -- distribution reports ---------------------------------------------------

@dataclass
class DistributionReport:
    correctness_histogram: np.ndarray
    delta_iou_histogram: np.ndarray
    mean_iou_histogram: np.ndarray
    corpus_size: int
    bin_width: float = 0.05

    @property
    def bin_edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, len(self.delta_iou_histogram) + 1)

    def to_text(self, title: str = "distribution") -> str:
        lines = [f"== {title} (records: {self.corpus_size})", "correct count:"]
        for c, n in enumerate(self.correctness_histogram):
            lines.append(f"  {c:>3d}  {n:>7d}")
        edges = self.bin_edges
        for name, hist in ((DELTA_HIST_NAME, self.delta_iou_histogram), ("mean_iou", self.mean_iou_histogram)):
            lines.append(f"{name}:")
            for lo, hi, n in zip(edges[:-1], edges[1:], hist):
                close = "]" if hi >= 1.0 else ")"
                lines.append(f"  [{lo:.2f}, {hi:.2f}{close}  {n:>7d}")
        return "\n".join(lines)


def _unit_histogram(values, n_bins: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    hist = np.zeros(n_bins, dtype=int)
    if values.size == 0:
        return hist
    # multiply rather than divide so 0.15 lands in bin 3, not 2
    idx = np.floor(np.round(values * n_bins, 9)).astype(int)
    idx = np.clip(idx, 0, n_bins - 1)
    np.add.at(hist, idx, 1)
    return hist


def distribution_report(records: list[DifficultyRecord], bin_width: float = 0.05, n_samples: int | None = None) -> DistributionReport:
    """Correct-count histogram plus ``delta_iou`` and ``mean_iou`` histograms over [0, 1]."""
    n_bins = int(round(1.0 / bin_width))
    if n_samples is None:
        n_samples = max((r.n_samples for r in records), default=8)
    correctness = np.zeros(n_samples + 1, dtype=int)
    for r in records:
        if r.correct_count is not None:
            correctness[r.correct_count] += 1
    deltas = [r.delta_iou for r in records if r.delta_iou is not None]
    means = [r.mean_iou for r in records if r.mean_iou is not None]
    return DistributionReport(
        correctness_histogram=correctness,
        delta_iou_histogram=_unit_histogram(deltas, n_bins),
        mean_iou_histogram=_unit_histogram(means, n_bins),
        corpus_size=len(records),
        bin_width=bin_width,
    )
