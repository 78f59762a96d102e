# # Muscle edge and region of interest
#
# The section edge is dark and would be counted as cells. Two detectors mark
# the void next to it: one looks for missing fibre texture, the other for
# regions darker than a fraction of the mean. Their union, cleaned up,
# is the empty space and its outline is the edge.

# %%
from wbcquant.edge_roi import (
    EdgeDetectorParams,
    detect_fuzzy_wbc,
    detect_muscle_texture,
    exclude_near_edge,
    merge_detectors,
    score_blocks,
)
from wbcquant.imgproc import connected_components
from wbcquant.synth import SynthSpec, render

# %%
img, truth, _ = render(SynthSpec(void="half_plane", n_discrete=40, near_edge=8, seed=61))
p = EdgeDetectorParams()
texture = detect_muscle_texture(img, p)
fuzzy = detect_fuzzy_wbc(img, p)
edge = merge_detectors(img, p)

iou = (edge.empty_space & truth.void_mask).sum() / (edge.empty_space | truth.void_mask).sum()
print(f"texture {texture.mean():.3f}  fuzzy {fuzzy.mean():.3f}  empty space {edge.empty_space.mean():.3f}")
print(f"true void {truth.void_mask.mean():.3f}  IoU {iou:.3f}  edge pixels {edge.muscle_edge.sum()}")

# %% [markdown]
# Blobs whose centre is within 200 px (chessboard distance) of the edge are
# dropped. Counting then uses only blocks that score well on edge clearance,
# void fraction and object count.

# %%
blobs = [c for c in connected_components(img < 110) if c.area >= 25]
kept = exclude_near_edge(blobs, edge, d=200)
print(f"{len(blobs)} dark blobs, {len(kept)} kept after edge exclusion")

roi = score_blocks(img.shape, edge, kept, block_size=200)
print(roi.to_text())
print("void fraction of in-ROI blocks is always < 0.5:", bool((roi.void_fraction[roi.in_roi] < 0.5).all()))
