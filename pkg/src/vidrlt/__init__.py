"""Rewards, GRPO advantages and variance-aware data selection for video RL tuning."""

from .corpus import DatasetRecord, Violation, load_corpus, validate_corpus
from .difficulty import (
    DifficultyLabel,
    DifficultyRecord,
    Thresholds,
    classify_discrete,
    correct_count,
    delta_iou,
    estimate,
)
from .grpo import RolloutGroup, group_advantages, grpo_step_objective
from .metrics import evaluate_grounding, miou, qa_accuracy, recall_at
from .parsing import (
    AnswerPayload,
    ParsedResponse,
    TaskKind,
    TimeSegment,
    check_format,
    extract_segment,
    parse_response,
)
from .rewards import (
    GroundTruth,
    RewardBreakdown,
    accuracy_reward,
    combined_reward,
    score_response,
    tiou_reward,
)
from .selection import DistributionReport, SelectionConfig, distribution_report, select

__version__ = "0.1.0"
