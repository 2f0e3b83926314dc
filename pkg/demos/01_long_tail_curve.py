# %% [markdown]
# Where does the head of a similarity curve end?
#
# Build a toy image of 64 patch tokens where a handful line up with the CLS
# token, look at the sorted similarity curve and find its split point.

# %%
import numpy as np

from ltprune import cls_similarity, segment, sort_descending, split_objective, stage1_mask

rng = np.random.default_rng(0)
d = 32
cls = rng.standard_normal((1, d)).astype(np.float32)
visual = rng.standard_normal((64, d)).astype(np.float32)
salient = rng.choice(64, 8, replace=False)
visual[salient] += 1.5 * cls

# %%
sims = cls_similarity(cls, visual)
curve = sort_descending(sims)
print("top five similarities:", np.round(curve.values[:5], 4))
print("they come from patches:", curve.source_index[:5])

# %% [markdown]
# The objective is large where many tokens remain and the curve has already
# dropped a long way from its first value.

# %%
f = split_objective(curve)
for i in range(0, len(f), 8):
    bar = "#" * int(40 * f[i] / f.max())
    print(f"i={i + 1:3d}  f={f[i]:7.3f}  {bar}")

# %%
for mode in ("identity", "multiply", "expand"):
    res = segment(curve, mode=mode)
    mask = stage1_mask(curve, res.kept_count)
    hits = len(set(mask.kept) & set(salient.tolist()))
    print(f"{mode:8s}  i*={res.i_star}  kept={res.kept_count}  salient patches kept={hits}/8")
