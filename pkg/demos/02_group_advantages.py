# %% [markdown]
# # Group-relative advantages and the clipped objective
#
# Each prompt gets a group of sampled responses. Rewards are standardized
# inside the group, so a group where every answer scores the same carries
# no learning signal at all.

# %%
import numpy as np

from vidrlt import group_advantages, grpo_step_objective

# %%
for rewards in ([2, 2, 2, 2, 2, 2, 2, 2], [2, 1, 1, 1, 1, 1, 1, 1], [2, 2, 2, 2, 1, 1, 1, 1], [0, 0, 0, 0, 0, 0, 0, 0]):
    a = group_advantages(rewards)
    print(rewards, "->", np.round(a, 3), " sum|A| =", round(float(np.abs(a).sum()), 3))

# %% [markdown]
# The half-right group gives the largest total |A|. That is the reason
# medium-difficulty prompts are worth training on.
#
# The objective clips the probability ratio at 1 +/- clip_eps.

# %%
adv = np.array([1.0, -1.0])
old = np.log([0.5, 0.5])
for shift in (0.0, 0.1, 0.5):
    new = old + np.array([shift, -shift])
    print(f"shift {shift}: ratios {np.round(np.exp(new - old), 3)} objective {grpo_step_objective(new, old, adv):.4f}")
