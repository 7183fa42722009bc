import numpy as np
import pytest

from vidrlt.difficulty import DifficultyRecord, Thresholds, classify_discrete, delta_iou
from vidrlt.parsing import TaskKind

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] AC{number:<2d} {name}: {detail}")


SOURCES = {
    TaskKind.MC_QA: ("LLaVA-Video", "NextQA", "PerceptionTest"),
    TaskKind.TVG: ("InternVid-VTime", "DiDeMo", "VTG-IT", "Charades-STA"),
    TaskKind.GROUNDED_QA: ("G-VideoLLM", "NextGQA"),
}


def synthetic_scored_corpus(sizes, n=8, seed=0, th=None):
    """Scored records with random correct counts and IoU spreads.

    ``sizes`` maps task -> number of records; sources are assigned uniformly.
    """
    th = th or Thresholds()
    rng = np.random.default_rng(seed)
    records = []
    for task, size in sizes.items():
        task = TaskKind(task)
        sources = SOURCES[task]
        for k in range(size):
            rec = DifficultyRecord(
                item_id=f"{task.value}-{k:06d}",
                source=sources[rng.integers(len(sources))],
                task=task,
                n_samples=n,
            )
            if task.is_discrete:
                c = int(rng.binomial(n, rng.uniform()))
                rec.correct_count = c
                rec.label = classify_discrete(c, n, th)
            if task.is_continuous:
                base, spread = rng.uniform(), rng.uniform(0, 0.5)
                ious = np.clip(base + spread * rng.standard_normal(n), 0.0, 1.0)
                rec.ious = [float(v) for v in ious]
                rec.mean_iou = float(np.mean(ious))
                rec.delta_iou = delta_iou(ious)
            records.append(rec)
    return records


def labelled_pool(easy, medium, hard, task=TaskKind.MC_QA, sources=("s0", "s1", "s2"), n=8):
    counts = {"easy": (easy, 8), "medium": (medium, 4), "hard": (hard, 0)}
    records = []
    for name, (size, c) in counts.items():
        for k in range(size):
            records.append(DifficultyRecord(
                item_id=f"{name}-{k:05d}",
                source=sources[k % len(sources)],
                task=task,
                n_samples=n,
                correct_count=c,
                label=classify_discrete(c, n),
            ))
    return records


@pytest.fixture
def pool_1000():
    return labelled_pool(100, 800, 100)
