# # Counting cells and clusters
#
# Blobs up to twice the typical cell area are single cells. Bigger ones are
# clusters, and their population is area divided by the image's mean
# single-cell area. Counts per 400 px block are binned in steps of 20 and
# shown on a log10(10n + 1) scale.

# %%
from wbcquant.pipeline import PipelineConfig, analyze_image
from wbcquant.quantify import build_histogram
from wbcquant.synth import SynthSpec, render

# %%
img, truth, _ = render(SynthSpec(n_discrete=40, clusters=[5, 5], seed=11))
result = analyze_image(img, PipelineConfig(), image_id="demo")
r = result.report

print("truth:", truth.counts)
print(f"found: {r.n_discrete} discrete, {r.n_clusters} clusters, "
      f"~{r.n_cells_in_clusters} cells in clusters, total {r.n_total}")
print(f"mean discrete size {r.mean_discrete_size} px")

# %% [markdown]
# Per-block counts and the display histogram.

# %%
print("per block:", r.per_block_counts)
for label, n, v in zip(r.histogram.bin_labels, r.histogram.counts, r.histogram.log_values):
    print(f"{label:>8s} {n:3d} {v:.4f}")

# %% [markdown]
# Twenty-nine empty blocks put everything in the first bin.

# %%
print(build_histogram([0] * 29).log_values[0])
