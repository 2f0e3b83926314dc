# %% [markdown]
# Analytic prefill cost of a 7B decoder at three weight precisions, before and
# after pruning the prompt.

# %%
from ltprune import estimate, load_preset

rows = []
for quant in ("fp16", "int8", "int4"):
    spec = load_preset(f"vicuna-7b-{quant}")
    for label, n in (("full", 636), ("pruned", 164)):
        r = estimate(spec, n)
        rows.append((quant, label, n, r.flops / 1e12, r.prefill_time * 1e3, r.total_memory / 1e9,
                     r.activation_memory / 1e9))

print(f"{'quant':6s} {'prompt':7s} {'n':>4s} {'TFLOPs':>7s} {'ms':>7s} {'mem GB':>7s} {'act GB':>7s}")
for q, label, n, fl, ms, mem, act in rows:
    print(f"{q:6s} {label:7s} {n:4d} {fl:7.2f} {ms:7.2f} {mem:7.2f} {act:7.2f}")

# %% [markdown]
# Weights dominate memory at these prompt lengths, so pruning mostly saves
# compute and the activation share.
