# # Global thresholds on a histogram
#
# Three classic single-threshold rules all take a 256-bin histogram and
# return a level t. Pixels at or below t are the dark class.

# %%
import numpy as np

from wbcquant.imgproc import histogram256
from wbcquant.synth import SynthSpec, render
from wbcquant.thresholding import GLOBAL_METHODS

# %% [markdown]
# A toy bimodal histogram first: two spikes at 50 and 200.

# %%
hist = np.zeros(256, dtype=np.int64)
hist[50] = hist[200] = 1000
for name, fn in GLOBAL_METHODS.items():
    print(f"{name:12s} t = {fn(hist)}")

# %% [markdown]
# Scaling every bin by the same factor does not move any of them.

# %%
print({name: fn(hist * 7) for name, fn in GLOBAL_METHODS.items()})

# %% [markdown]
# On a synthetic section the three rules land at different places.
# Otsu splits fibre texture from cells, but on a plain background with a
# little noise it still has to split *something*.

# %%
img, truth, _ = render(SynthSpec(width=800, height=600, n_discrete=30, seed=1))
h = histogram256(img)
for name, fn in GLOBAL_METHODS.items():
    t = fn(h)
    print(f"{name:12s} t = {t:3d}  dark fraction = {(img <= t).mean():.4f}")

blank, _, _ = render(SynthSpec(width=800, height=600, n_discrete=0, stripe_amplitude=0, noise_sigma=2, seed=2))
t = GLOBAL_METHODS["otsu"](histogram256(blank))
print(f"otsu on a blank image: t = {t}, dark fraction = {(blank <= t).mean():.3f}")
