# %% [markdown]
# Step through the heavy/recent eviction cache on a short stream and watch
# which tokens get dropped.

# %%
import numpy as np

from ltprune import EvictionConfig, run_stream
from ltprune.eviction import eviction_log_csv, replay

rng = np.random.default_rng(1)
tokens = rng.standard_normal((12, 8)).astype(np.float32)
config = EvictionConfig(recent_budget=2, heavy_budget=3)


def show(state):
    live = " ".join(f"{t}:{state.scores[t]:.2f}" for t in state.live)
    print(f"after token {state.processed - 1:2d}  live [{live}]")


mask, state = run_stream(tokens, boundary=6, config=config, observer=show)
print("kept:", mask.kept)

# %%
print(eviction_log_csv(state))

# %% [markdown]
# The attention rows are kept in the state, so the same evictions can be
# recovered without the embeddings.

# %%
again = replay(state.rows, config)
print("replay matches:", again.evicted == state.evicted)

# %% [markdown]
# A stream can be continued later, for instance with generated tokens.

# %%
more = rng.standard_normal((4, 8)).astype(np.float32)
mask, state = run_stream(more, boundary=0, config=config, state=state)
print("after 4 more tokens:", mask.kept, "of", mask.total)
