"""``vidrlt`` command line: score, estimate, select, simulate, report.

Every command that writes an output file also writes ``<output>.manifest.json``.
Configs are JSON objects whose keys are the ``SelectionConfig`` /
``TrainConfig`` field names.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import toy
from .corpus import CorpusError, load_corpus, read_jsonl, write_jsonl
from .difficulty import DEFAULT_SAMPLING, DifficultyRecord, Thresholds, estimate
from .metrics import recall_from_ious
from .parsing import TaskKind
from .rewards import score_response
from .selection import (
    SelectionConfig,
    build_manifest,
    distribution_report,
    select,
    selection_manifest,
    write_manifest,
)


class CliError(Exception):
    pass


def manifest_path(output) -> Path:
    return Path(str(output) + ".manifest.json")


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise CliError(f"config {path} must hold a JSON object")
    return cfg


def _load_records(args):
    try:
        records = load_corpus(args.input)
    except CorpusError as exc:
        for v in exc.violations:
            print(f"{args.input}: {v}", file=sys.stderr)
        raise CliError(f"{len(exc.violations)} schema violation(s) in {args.input}") from exc
    if args.task:
        records = [r for r in records if r.task.value == args.task]
    return records


def cmd_score(args) -> int:
    records = _load_records(args)
    rows = []
    for rec in records:
        for k, raw in enumerate(rec.samples or []):
            b = score_response(raw, rec.gt)
            rows.append({
                "id": rec.item_id,
                "sample": k,
                "task": rec.task.value,
                "r_format": b.r_format,
                "r_acc": b.r_acc,
                "r_iou": b.r_iou,
                "total": b.total,
                "degenerate": b.degenerate,
            })
    write_jsonl(args.output, rows)
    write_manifest(manifest_path(args.output), build_manifest(
        "score", {"task": args.task}, [r.to_json() for r in records], None, [],
        extra={"n_records": len(records), "n_rows": len(rows)},
    ))
    return 0


def cmd_estimate(args) -> int:
    records = _load_records(args)
    cfg = _load_config(args.config)
    th = Thresholds(**cfg.get("thresholds", {}))
    missing = [r.item_id for r in records if not r.samples]
    if missing:
        raise CliError(f"{len(missing)} record(s) without samples, e.g. {missing[:3]}")
    scored = [estimate(r, th=th) for r in records]
    write_jsonl(args.output, [s.to_json() for s in scored])
    write_manifest(manifest_path(args.output), build_manifest(
        "estimate", {"thresholds": cfg.get("thresholds", {}), "sampling": DEFAULT_SAMPLING, "task": args.task},
        [r.to_json() for r in records], None, [], extra={"n_records": len(scored)},
    ))
    return 0


def _load_scored(path, task=None) -> list[DifficultyRecord]:
    try:
        rows = read_jsonl(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read scored corpus {path}: {exc}") from exc
    try:
        records = [DifficultyRecord.from_json(row) for row in rows]
    except (KeyError, ValueError, TypeError) as exc:
        raise CliError(f"bad scored record in {path}: {exc}") from exc
    if task:
        records = [r for r in records if r.task.value == task]
    return records


def cmd_select(args) -> int:
    records = _load_scored(args.input, args.task)
    raw = _load_config(args.config)
    if args.seed is not None:
        raw["rng_seed"] = args.seed
    try:
        cfg = SelectionConfig.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad selection config: {exc}") from exc
    result = select(records, cfg)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.writelines(f"{item_id}\n" for item_id in result.item_ids)
    write_manifest(manifest_path(args.output), selection_manifest(records, cfg, result))
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


_CORPUS_KEYS = {"n_items", "n_choices", "timeline", "bins", "corpus_seed", "stratified"}


def cmd_simulate(args) -> int:
    raw = _load_config(args.config)
    corpus_cfg = raw.pop("corpus", {})
    if set(corpus_cfg) - _CORPUS_KEYS:
        raise CliError(f"unknown corpus keys: {sorted(set(corpus_cfg) - _CORPUS_KEYS)}")
    if args.seed is not None:
        raw["rng_seed"] = args.seed
    if args.task:
        raw["task"] = args.task
    try:
        cfg = toy.TrainConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad train config: {exc}") from exc
    task = TaskKind(cfg.task)
    n_choices = corpus_cfg.get("n_choices", 4)
    timeline = corpus_cfg.get("timeline", 32.0)
    bins = corpus_cfg.get("bins", 16 if task is TaskKind.TVG else 8)
    seed = corpus_cfg.get("corpus_seed", 0)
    if task is TaskKind.MC_QA:
        if corpus_cfg.get("stratified"):
            items = toy.make_stratified_mc_corpus(corpus_cfg.get("n_items", 24) // 3, n_choices, seed)
        else:
            items = toy.make_mc_corpus(corpus_cfg.get("n_items", 32), n_choices, seed)
    elif task is TaskKind.TVG:
        items = toy.make_tvg_corpus(corpus_cfg.get("n_items", 16), timeline, bins, seed)
    else:
        items = toy.make_grounded_corpus(corpus_cfg.get("n_items", 8), n_choices, timeline, bins, seed)
    curves = toy.run_experiment(cfg, items, n_choices=n_choices, timeline=timeline, bins=bins)
    Path(args.output).write_text(curves.to_jsonl(), encoding="utf-8")
    write_manifest(manifest_path(args.output), build_manifest(
        "simulate", {**curves.config, "corpus": corpus_cfg}, [it.item_id for it in items],
        cfg.rng_seed, [], extra={"n_steps": len(curves.rows)},
    ))
    return 0


def _metrics_table(records) -> str:
    ious = [v for r in records if r.ious for v in r.ious]
    n = sum(r.n_samples for r in records if r.correct_count is not None)
    c = sum(r.correct_count for r in records if r.correct_count is not None)
    header, values = [], []
    if ious:
        for t, v in recall_from_ious(ious).items():
            header.append(f"R@{t}")
            values.append(f"{100 * v:.1f}")
        header.append("mIoU")
        values.append(f"{100 * float(np.mean(ious)):.1f}")
    if n:
        header.append("acc")
        values.append(f"{100 * c / n:.1f}")
    if not header:
        return "metrics: (no samples)"
    width = max(len(h) for h in header) + 2
    return "metrics over samples:\n" + "".join(h.rjust(width) for h in header) + "\n" + "".join(v.rjust(width) for v in values)


def cmd_report(args) -> int:
    blocks = []
    for path in args.input:
        records = _load_scored(path, args.task)
        report = distribution_report(records)
        blocks.append(report.to_text(title=str(path)) + "\n" + _metrics_table(records))
    text = "\n\n".join(blocks) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vidrlt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    tasks = [t.value for t in TaskKind]

    def add(name, func, help_, needs_input=True, needs_output=True, config=False, seed=False):
        p = sub.add_parser(name, help=help_)
        if needs_input:
            p.add_argument("--input", "-i", required=True)
        if needs_output:
            p.add_argument("--output", "-o", required=True)
        if config:
            p.add_argument("--config", "-c")
        if seed:
            p.add_argument("--seed", type=int)
        p.add_argument("--task", choices=tasks)
        p.set_defaults(func=func)
        return p

    add("score", cmd_score, "per-sample reward breakdowns for a corpus with samples")
    add("estimate", cmd_estimate, "per-item difficulty records", config=True)
    add("select", cmd_select, "difficulty-aware subset selection", config=True, seed=True)
    add("simulate", cmd_simulate, "toy GRPO run, writes learning curves", needs_input=False, config=True, seed=True)
    rep = sub.add_parser("report", help="histograms and metrics for scored corpora")
    rep.add_argument("--input", "-i", required=True, nargs="+")
    rep.add_argument("--output", "-o")
    rep.add_argument("--task", choices=tasks)
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
