# %% [markdown]
# Both stages on a realistically sized input: 576 visual tokens from a 24x24 patch
# grid, a 1024 -> 4096 projection and 60 text tokens.

# %%
import tempfile
from pathlib import Path

import numpy as np

from ltprune import EvictionConfig, PipelineConfig, run_pipeline, token_accounting
from ltprune.imaging import mask_image, write_pnm

rng = np.random.default_rng(2)
cls = rng.standard_normal((1, 1024)).astype(np.float32)
visual = rng.standard_normal((576, 1024)).astype(np.float32)
visual[rng.choice(576, 60, replace=False)] += 0.3 * cls
projection = (rng.standard_normal((1024, 4096)) / 32).astype(np.float32)
text = rng.standard_normal((60, 4096)).astype(np.float32)

config = PipelineConfig(
    smoothing_mode="expand",
    projection=projection,
    eviction=EvictionConfig(recent_ratio=0.5, heavy_ratio=0.5),
)
report = run_pipeline(cls, visual, text, config)
print(token_accounting(report))

# %%
out = Path(tempfile.mkdtemp())
write_pnm(mask_image(report.stage1_mask, 24, 24), out / "stage1.pgm")
final = report.final_visual_mask()
if final is not None:
    write_pnm(mask_image(final, 24, 24), out / "final.pgm")
print("masks written to", out)
