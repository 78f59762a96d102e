# # Comparing threshold methods on a synthetic corpus
#
# Detections are matched one-to-one to planted cells within 15 px, closest
# pairs first. Accuracy is matched / (matched + false positives + false
# negatives). Blank images test whether a method invents objects.

# %%
from wbcquant.benchmark import format_table, run_benchmark
from wbcquant.synth import SynthSpec, render

# %%
items = []
for i in range(6):
    img, truth, _ = render(SynthSpec(width=800, height=600, n_discrete=25, clusters=[3],
                                     noise_sigma=8, cell_intensity=130, seed=300 + i))
    items.append((img, truth.to_dict()))
for i in range(2):
    img, truth, _ = render(SynthSpec(width=800, height=600, n_discrete=0, noise_sigma=8, seed=400 + i))
    items.append((img, truth.to_dict()))

# %%
rows = run_benchmark(items)
print(format_table(rows))
