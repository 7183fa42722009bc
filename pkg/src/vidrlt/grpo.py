"""Group-relative advantages and the clipped policy surrogate."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_ADV_EPS = 1e-6
DEFAULT_CLIP_EPS = 0.2


@dataclass
class RolloutGroup:
    prompt_id: str
    outputs: list[str]
    rewards: np.ndarray
    advantages: np.ndarray
    actions: np.ndarray | None = None
    logprobs: np.ndarray | None = None
    breakdowns: list = field(default_factory=list)

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=float)
        self.advantages = np.asarray(self.advantages, dtype=float)
        g = len(self.outputs)
        if g < 2:
            raise ValueError(f"group size must be >= 2, got {g}")
        if len(self.rewards) != g or len(self.advantages) != g:
            raise ValueError("outputs, rewards and advantages must share one length")

    @property
    def size(self) -> int:
        return len(self.outputs)


def group_advantages(rewards, eps: float = DEFAULT_ADV_EPS) -> np.ndarray:
    """Normalize rewards within a group: ``(R - mean) / (popstd + eps)``.

    A group whose rewards are all equal carries no preference signal and maps
    to all-zero advantages, whatever ``eps`` is.
    """
    r = np.asarray(rewards, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise ValueError(f"need a 1-d group of at least 2 rewards, got shape {r.shape}")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if not np.all(np.isfinite(r)):
        raise ValueError("rewards must be finite")
    if np.all(r == r[0]):
        return np.zeros_like(r)
    return (r - r.mean()) / (r.std() + eps)


def _check_inputs(logprob_new, logprob_old, advantages, clip_eps):
    new = np.asarray(logprob_new, dtype=float)
    old = np.asarray(logprob_old, dtype=float)
    adv = np.asarray(advantages, dtype=float)
    if not (new.shape == old.shape == adv.shape) or new.ndim != 1 or new.size == 0:
        raise ValueError("logprob_new, logprob_old and advantages need equal non-zero lengths")
    for name, arr in (("logprob_new", new), ("logprob_old", old), ("advantages", adv)):
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"non-finite values in {name}")
    if not clip_eps > 0:
        raise ValueError("clip_eps must be positive")
    return new, old, adv


def grpo_step_objective(logprob_new, logprob_old, advantages, clip_eps: float = DEFAULT_CLIP_EPS) -> float:
    """Clipped-ratio surrogate, averaged over the group; maximize it."""
    new, old, adv = _check_inputs(logprob_new, logprob_old, advantages, clip_eps)
    ratio = np.exp(new - old)
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps)
    return float(np.mean(np.minimum(ratio * adv, clipped * adv)))


def objective_grad_logprob(logprob_new, logprob_old, advantages, clip_eps: float = DEFAULT_CLIP_EPS) -> np.ndarray:
    """d objective / d logprob_new.

    The clipped branch has zero slope, so only samples where the unclipped
    term is the active minimum contribute ``ratio * A / G``.
    """
    new, old, adv = _check_inputs(logprob_new, logprob_old, advantages, clip_eps)
    ratio = np.exp(new - old)
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * adv
    active = unclipped <= clipped
    return np.where(active, unclipped, 0.0) / new.size
