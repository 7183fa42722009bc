import itertools

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from vidrlt.parsing import TaskKind, TimeSegment, parse_response
from vidrlt.rewards import (
    GroundTruth,
    accuracy_reward,
    combined_reward,
    score_response,
    task_total,
    tiou_reward,
)


def cell_count_iou(a, b):
    """Brute-force IoU of integer-grid segments by counting covered unit cells."""
    cells_a = set(range(int(a[0]), int(a[1])))
    cells_b = set(range(int(b[0]), int(b[1])))
    return len(cells_a & cells_b) / len(cells_a | cells_b)


def test_accuracy_reward():
    assert accuracy_reward("B", "B") == 1
    assert accuracy_reward("A", "B") == 0
    assert accuracy_reward("b", "B") == 1
    assert accuracy_reward(None, "B") == 0


@pytest.mark.parametrize("pred,gt,expected", [
    ((4, 8), (4, 8), 1.0),
    ((0, 2), (4, 8), 0.0),
    ((2, 6), (4, 8), 2 / 6),
    ((0, 4), (4, 8), 0.0),
    ((5, 6), (4, 8), 0.25),
])
def test_tiou_examples(pred, gt, expected):
    assert tiou_reward(TimeSegment(*pred), TimeSegment(*gt)) == pytest.approx(expected, abs=1e-15)


def test_tiou_degenerate_prediction_scores_zero():
    assert tiou_reward(TimeSegment(5, 5), TimeSegment(4, 8)) == 0.0
    assert tiou_reward(TimeSegment(6, 5), TimeSegment(4, 8)) == 0.0


def test_tiou_rejects_bad_ground_truth():
    with pytest.raises(ValueError):
        tiou_reward(TimeSegment(4, 8), TimeSegment(8, 4))


def test_tiou_matches_cell_counting_small_grid():
    segs = [(s, e) for s in range(9) for e in range(s + 1, 9)]
    for a, b in itertools.product(segs, segs):
        assert tiou_reward(TimeSegment(*a), TimeSegment(*b)) == cell_count_iou(a, b)


seg_strategy = st.tuples(
    st.floats(0, 1000, allow_nan=False), st.floats(0, 1000, allow_nan=False)
).map(lambda t: TimeSegment(min(t), max(t))).filter(lambda s: s.valid and s.length > 1e-6)


@given(seg_strategy, seg_strategy)
def test_tiou_symmetric_and_bounded(a, b):
    v = tiou_reward(a, b)
    assert v == tiou_reward(b, a)
    assert 0.0 <= v <= 1.0


@given(seg_strategy, seg_strategy, st.floats(0, 100), st.floats(0.01, 100))
def test_tiou_shift_scale_invariant(a, b, delta, k):
    base = tiou_reward(a, b)
    shifted = tiou_reward(TimeSegment(a.start + delta, a.end + delta), TimeSegment(b.start + delta, b.end + delta))
    scaled = tiou_reward(TimeSegment(k * a.start, k * a.end), TimeSegment(k * b.start, k * b.end))
    assert shifted == pytest.approx(base, abs=1e-6)
    assert scaled == pytest.approx(base, abs=1e-9)


@given(st.lists(st.integers(0, 64), min_size=6, max_size=6))
def test_monotone_containment(points):
    p = sorted(points)
    # pred1 within pred2 within gt
    assume(p[0] < p[1] <= p[2] < p[3] <= p[4] < p[5])
    gt = TimeSegment(p[0], p[5])
    outer = TimeSegment(p[1], p[4])
    inner = TimeSegment(p[2], p[3])
    assert tiou_reward(inner, gt) <= tiou_reward(outer, gt)


def test_ground_truth_requirements():
    with pytest.raises(ValueError):
        GroundTruth(TaskKind.MC_QA)
    with pytest.raises(ValueError):
        GroundTruth(TaskKind.TVG)
    with pytest.raises(ValueError):
        GroundTruth(TaskKind.GROUNDED_QA, gt_choice="A")
    with pytest.raises(ValueError):
        GroundTruth(TaskKind.TVG, gt_segment=TimeSegment(3, 3))
    assert GroundTruth("mc_qa", gt_choice="b").gt_choice == "B"


def test_combined_mc_correct():
    gt = GroundTruth(TaskKind.MC_QA, gt_choice="B")
    b = score_response("<think>x</think><answer>B</answer>", gt)
    assert (b.r_format, b.r_acc, b.r_iou, b.total) == (1, 1, None, 2.0)


def test_combined_grounded_half_iou():
    gt = GroundTruth(TaskKind.GROUNDED_QA, gt_choice="C", gt_segment=TimeSegment(4, 8))
    b = score_response("<think>x</think><observe>4 to 6</observe><answer>C</answer>", gt)
    assert (b.r_format, b.r_acc, b.r_iou) == (1, 1, 0.5)
    assert b.total == 1 + 0.5 * (1 + 0.5) == 1.75


def test_combined_tvg_bad_format():
    gt = GroundTruth(TaskKind.TVG, gt_segment=TimeSegment(4, 8))
    b = score_response("<answer>4 to 8</answer>", gt)
    assert (b.r_format, b.r_acc, b.r_iou, b.total) == (0, None, 0.0, 0.0)


def test_malformed_grounded_keeps_components_at_zero():
    gt = GroundTruth(TaskKind.GROUNDED_QA, gt_choice="C", gt_segment=TimeSegment(4, 8))
    b = score_response("<think>x</think><answer>C</answer>", gt)
    assert (b.r_format, b.r_acc, b.r_iou, b.total) == (0, 0, 0.0, 0.0)


def test_task_mismatch_is_an_error():
    gt = GroundTruth(TaskKind.TVG, gt_segment=TimeSegment(4, 8))
    parsed = parse_response("<think>x</think><answer>B</answer>", TaskKind.MC_QA)
    with pytest.raises(ValueError):
        combined_reward(parsed, gt)


def test_max_totals_are_two():
    seg = TimeSegment(4, 8)
    assert score_response("<think>x</think><answer>A</answer>", GroundTruth("mc_qa", gt_choice="A")).total == 2.0
    assert score_response("<think>x</think><answer>4 to 8</answer>", GroundTruth("tvg", gt_segment=seg)).total == 2.0
    gqa = GroundTruth("grounded_qa", gt_choice="A", gt_segment=seg)
    assert score_response("<think>x</think><observe>4 to 8</observe><answer>A</answer>", gqa).total == 2.0


@given(
    task=st.sampled_from(list(TaskKind)),
    letter=st.sampled_from("ABCD"),
    gt_letter=st.sampled_from("ABCD"),
    pred=seg_strategy,
    gt_seg=seg_strategy,
    broken=st.booleans(),
)
def test_total_recomputes_bit_exact_and_bounded(task, letter, gt_letter, pred, gt_seg, broken):
    gt = GroundTruth(task, gt_choice=gt_letter if task.is_discrete else None,
                     gt_segment=gt_seg if task.is_continuous else None)
    body = f"{pred.start!r} to {pred.end!r}"
    if task is TaskKind.MC_QA:
        raw = f"<think>r</think><answer>{letter}</answer>"
    elif task is TaskKind.TVG:
        raw = f"<think>r</think><answer>{body}</answer>"
    else:
        raw = f"<think>r</think><observe>{body}</observe><answer>{letter}</answer>"
    if broken:
        raw = raw.replace("<think>", "", 1)
    b = score_response(raw, gt)
    assert b.total == task_total(task, b.r_format, b.r_acc, b.r_iou)
    assert 0.0 <= b.total <= 2.0
    assert (b.r_acc is not None) == task.is_discrete
    assert (b.r_iou is not None) == task.is_continuous
    if broken:
        assert b.total == 0.0


def test_rewards_are_double_precision():
    gt = GroundTruth(TaskKind.TVG, gt_segment=TimeSegment(0, 3))
    b = score_response("<think>x</think><answer>0 to 1</answer>", gt)
    assert b.r_iou == 1 / 3
    assert isinstance(b.total, float)
    assert np.float64(b.total) == 1 + 1 / 3
