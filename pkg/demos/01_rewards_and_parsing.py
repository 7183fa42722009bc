# %% [markdown]
# # Parsing responses and scoring them
#
# A response is a `<think>` block, an optional `<observe>` block (grounded QA
# only) and an `<answer>` block. The format reward gates everything else:
# a malformed response scores zero no matter what it answers.

# %%
from vidrlt import GroundTruth, TaskKind, TimeSegment, parse_response, score_response

# %% [markdown]
# ## Multiple choice

# %%
gt = GroundTruth(TaskKind.MC_QA, gt_choice="B")
for raw in [
    "<think>the cup falls first</think><answer>B</answer>",
    "<think>the cup falls first</think><answer>(c)</answer>",
    "<answer>B</answer>",
]:
    b = score_response(raw, gt)
    print(f"{raw!r:60s} format={b.r_format} acc={b.r_acc} total={b.total}")

# %% [markdown]
# ## Temporal grounding
#
# Segments may be written several ways; all parse to the same interval.

# %%
for body in ["4 to 6", "from 4s to 6s", "[4, 6]", "(4.0, 6.0)", "4 - 6 seconds"]:
    parsed = parse_response(f"<think>x</think><answer>{body}</answer>", TaskKind.TVG)
    print(f"{body!r:18s} -> {parsed.payload.segment}")

gt = GroundTruth(TaskKind.TVG, gt_segment=TimeSegment(4.0, 8.0))
b = score_response("<think>x</think><answer>4 to 6</answer>", gt)
print("tIoU against [4, 8]:", b.r_iou, "total:", b.total)

# %% [markdown]
# ## Grounded QA blends the two signals

# %%
gt = GroundTruth(TaskKind.GROUNDED_QA, gt_choice="C", gt_segment=TimeSegment(4.0, 8.0))
b = score_response("<think>x</think><observe>4 to 6</observe><answer>C</answer>", gt)
print(b)
