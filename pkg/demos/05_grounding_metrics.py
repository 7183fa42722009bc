# %% [markdown]
# # Grounding metrics
#
# Recall at an IoU threshold counts predictions that overlap enough.
# Averaged over all thresholds in (0, 1], recall equals the mean IoU.

# %%
import numpy as np

from vidrlt import TimeSegment, evaluate_grounding
from vidrlt.metrics import recall_integral

rng = np.random.default_rng(5)
pairs = []
for _ in range(200):
    s, length = rng.uniform(0, 60), rng.uniform(2, 20)
    jitter = rng.normal(0, 3, 2)
    ps = max(0.0, s + jitter[0])
    pairs.append((TimeSegment(ps, ps + max(0.5, length + jitter[1])), TimeSegment(s, s + length)))

ev = evaluate_grounding(pairs)
print(ev.to_text())

# %%
print(f"mIoU {ev.miou:.5f}   integral of recall {recall_integral(ev.ious):.5f}")
