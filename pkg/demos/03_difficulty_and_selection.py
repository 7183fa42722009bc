# %% [markdown]
# # Difficulty labels and stratified selection
#
# Eight samples per item give a correct count `c`. With the defaults,
# `c >= 7` is easy, `c <= 1` is hard and everything in between is medium.
# Grounding items are kept only when their sampled IoUs vary enough
# (max minus mean at least `delta_min`).

# %%
import numpy as np

from vidrlt import SelectionConfig, Thresholds, classify_discrete, distribution_report, select
from vidrlt.difficulty import DifficultyRecord, delta_iou
from vidrlt.parsing import TaskKind

th = Thresholds()
print({c: classify_discrete(c, 8, th).value for c in range(9)})

# %% [markdown]
# ## A synthetic scored pool

# %%
rng = np.random.default_rng(0)
records = []
for k in range(600):
    c = int(rng.binomial(8, rng.uniform()))
    records.append(DifficultyRecord(f"mc-{k:04d}", ["NextQA", "PerceptionTest"][k % 2], TaskKind.MC_QA, 8,
                                    correct_count=c, label=classify_discrete(c, 8, th)))
for k in range(400):
    ious = np.clip(rng.uniform() + rng.uniform(0, 0.5) * rng.standard_normal(8), 0, 1)
    records.append(DifficultyRecord(f"tvg-{k:04d}", ["DiDeMo", "Charades-STA"][k % 2], TaskKind.TVG, 8,
                                    ious=list(ious), mean_iou=float(ious.mean()), delta_iou=delta_iou(ious)))

print(distribution_report(records).to_text(title="before selection"))

# %% [markdown]
# ## Select 60 MC items at 1:4:1 and 40 TVG items

# %%
cfg = SelectionConfig(ratio_easy_medium_hard=(1, 4, 1), target_counts={"mc_qa": 60, "tvg": 40}, rng_seed=1)
result = select(records, cfg)
print(len(result.item_ids), "selected")
print(result.counts)
print(result.per_source(records))
chosen = set(result.item_ids)
print(distribution_report([r for r in records if r.item_id in chosen]).to_text(title="after selection"))
