"""Muscle-edge detection and region-of-interest scoring.

Two detectors look for non-muscle area. The texture detector flags regions
without fibre texture; the fuzzy detector flags regions darker than a fraction
of the image mean, which catches void stretches that dense cells leave
texture-free. Their combination, cleaned of small pieces and holes, is the
empty space; its outline is the muscle edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .imgproc import (
    Component,
    StructuringElement,
    apply_threshold,
    box_filter,
    canny,
    chebyshev_distance_to,
    equalization_lut,
    fill_holes,
    gaussian_filter,
    global_mean,
    hist_equalize,
    histogram256,
    invert,
    label_mask,
    morph_close,
    remove_small,
    unsharp,
)
from .thresholding import otsu_threshold


@dataclass(frozen=True)
class EdgeDetectorParams:
    avg_kernel: int = 16
    gauss_sigma: float = 2.0
    sharpen_sigma: float = 8.0
    sharpen_gain: float = 1.5
    k1: float = 0.9
    corner_window: int = 20
    min_area_texture: int = 60_000
    min_area_final: int = 50_000
    edge_exclusion_d: int = 200
    se_shape: str = "disk"
    se_radius: int = 15
    morph_order: str = "erode_dilate"
    merge_mode: str = "union"
    strict_corners: bool = False
    canny_low: float = 100.0
    canny_high: float = 200.0

    def __post_init__(self):
        for name in ("avg_kernel", "gauss_sigma", "sharpen_sigma", "sharpen_gain", "k1",
                     "corner_window", "min_area_texture", "min_area_final", "edge_exclusion_d",
                     "se_radius"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be positive")
        if self.merge_mode not in ("union", "intersection"):
            raise InvalidInputError(f"unknown merge_mode {self.merge_mode!r}")
        if not 0 <= self.canny_low < self.canny_high:
            raise InvalidInputError("canny thresholds need 0 <= low < high")

    @property
    def structuring_element(self) -> StructuringElement:
        return StructuringElement(self.se_shape, self.se_radius)


@dataclass
class EdgeResult:
    empty_space: np.ndarray
    muscle_edge: np.ndarray
    confident: np.ndarray | None = field(default=None, repr=False)  # detector intersection

    @property
    def has_edge(self) -> bool:
        return bool(self.muscle_edge.any())


@dataclass
class RoiGrid:
    block_size: int
    scores: np.ndarray  # (rows, cols)
    in_roi: np.ndarray  # (rows, cols) bool
    void_fraction: np.ndarray = field(repr=False, default=None)

    def to_text(self) -> str:
        return "\n".join("".join("1" if v else "0" for v in row) for row in self.in_roi) + "\n"

    def pixel_mask(self, shape: tuple[int, int]) -> np.ndarray:
        b = self.block_size
        full = np.kron(self.in_roi.astype(np.uint8), np.ones((b, b), dtype=np.uint8)).astype(bool)
        return full[:shape[0], :shape[1]]


def corner_filter(mask: np.ndarray, window: int, strict: bool = False) -> np.ndarray:
    """Keep components reaching a ``window`` x ``window`` corner area.

    Unless ``strict``, components touching any image border are kept too.
    """
    labels, n = label_mask(mask, 8)
    if n == 0:
        return np.zeros(mask.shape, dtype=bool)
    w = window
    anchor = np.zeros(mask.shape, dtype=bool)
    anchor[:w, :w] = anchor[:w, -w:] = anchor[-w:, :w] = anchor[-w:, -w:] = True
    if not strict:
        anchor[0, :] = anchor[-1, :] = anchor[:, 0] = anchor[:, -1] = True
    keep = np.zeros(n + 1, dtype=bool)
    keep[np.unique(labels[anchor & (labels > 0)])] = True
    keep[0] = False
    return keep[labels]


def _detector_morph(mask: np.ndarray, p: EdgeDetectorParams) -> np.ndarray:
    # the image frame is not a boundary: replicate the mask outward so the
    # morphology does not nibble regions that run off the image
    pad = 2 * p.se_radius + 1
    work = np.pad(mask, pad, mode="edge")
    return morph_close(work, p.structuring_element, p.morph_order)[pad:-pad, pad:-pad]


def texture_stages(img: np.ndarray, p: EdgeDetectorParams) -> dict[str, np.ndarray]:
    """Intermediate rasters of the texture detector, keyed by stage name."""
    g = box_filter(img, p.avg_kernel)
    g2 = gaussian_filter(g, p.gauss_sigma)
    g4 = unsharp(g2, p.sharpen_sigma, p.sharpen_gain)
    g5 = hist_equalize(g4)
    # Otsu picks t on the equalised image; translate it back to g4 levels
    t5 = otsu_threshold(histogram256(g5))
    lut = equalization_lut(g4)
    t4 = int(np.flatnonzero(lut <= t5).max()) if (lut <= t5).any() else -1
    g6 = apply_threshold(g4, t4, "bright")
    g7 = _detector_morph(invert(g6), p)
    return {"avg": g, "smooth": g2, "sharp": g4, "equalized": g5, "texture": g6, "candidates": g7}


def detect_muscle_texture(img: np.ndarray, p: EdgeDetectorParams | None = None) -> np.ndarray:
    """Mask of large, corner-anchored regions lacking fibre texture."""
    p = p or EdgeDetectorParams()
    img = np.asarray(img)
    if min(img.shape) < max(p.avg_kernel, 2 * p.corner_window):
        raise InvalidInputError(f"image {img.shape} too small for the texture detector")
    g7 = texture_stages(img, p)["candidates"]
    return remove_small(corner_filter(g7, p.corner_window, p.strict_corners), p.min_area_texture)


def detect_fuzzy_wbc(img: np.ndarray, p: EdgeDetectorParams | None = None) -> np.ndarray:
    """Mask of corner-anchored regions darker than ``k1`` times the image mean."""
    p = p or EdgeDetectorParams()
    img = np.asarray(img)
    mean = global_mean(img)
    g = gaussian_filter(img, p.gauss_sigma)
    g2 = g > p.k1 * mean
    g3 = _detector_morph(invert(g2), p)
    return corner_filter(g3, p.corner_window, p.strict_corners)


def intersect_and_refine(texture: np.ndarray, fuzzy: np.ndarray,
                         p: EdgeDetectorParams | None = None) -> EdgeResult:
    p = p or EdgeDetectorParams()
    texture = np.asarray(texture, dtype=bool)
    fuzzy = np.asarray(fuzzy, dtype=bool)
    if texture.shape != fuzzy.shape:
        raise InvalidInputError(f"mask shapes differ: {texture.shape} vs {fuzzy.shape}")
    both = texture & fuzzy
    combined = both if p.merge_mode == "intersection" else texture | fuzzy
    empty = fill_holes(remove_small(combined, p.min_area_final))
    edge = canny(np.where(empty, 255, 0).astype(np.uint8), p.canny_low, p.canny_high)
    return EdgeResult(empty_space=empty, muscle_edge=edge, confident=both & empty)


def merge_detectors(img: np.ndarray, p: EdgeDetectorParams | None = None) -> EdgeResult:
    p = p or EdgeDetectorParams()
    return intersect_and_refine(detect_muscle_texture(img, p), detect_fuzzy_wbc(img, p), p)


def exclude_near_edge(objects: list[Component], edge: EdgeResult, d: float = 200) -> list[Component]:
    """Drop objects whose centroid is within Chebyshev distance ``d`` of the edge."""
    if d < 0:
        raise InvalidInputError("d must be >= 0")
    if not edge.has_edge:
        return list(objects)
    dist = chebyshev_distance_to(edge.muscle_edge)
    h, w = dist.shape
    kept = []
    for obj in objects:
        x = min(max(int(round(obj.centroid[0])), 0), w - 1)
        y = min(max(int(round(obj.centroid[1])), 0), h - 1)
        if dist[y, x] >= d:
            kept.append(obj)
    return kept


# ROI score weights and admission rule
W_CORNER, W_VOID, W_OBJECTS = 0.5, 0.3, 0.2
OBJECT_SATURATION = 5
ROI_MIN_SCORE = 0.5
ROI_MAX_VOID = 0.5


def block_score(corner_term: float, void_fraction: float, object_term: float) -> float:
    return W_CORNER * corner_term + W_VOID * (1 - void_fraction) + W_OBJECTS * object_term


def score_blocks(shape: tuple[int, int], edge: EdgeResult, effective_objects: list[Component],
                 block_size: int = 200, d: float = 200) -> RoiGrid:
    """Score ``block_size`` tiles on edge clearance, void fraction and object count."""
    h, w = shape
    rows, cols = -(-h // block_size), -(-w // block_size)
    dist = chebyshev_distance_to(edge.muscle_edge) if edge.has_edge else None

    counts = np.zeros((rows, cols), dtype=int)
    for obj in effective_objects:
        cx, cy = obj.centroid
        r = min(int(cy) // block_size, rows - 1)
        c = min(int(cx) // block_size, cols - 1)
        counts[r, c] += 1

    scores = np.zeros((rows, cols))
    voids = np.zeros((rows, cols))
    for r in range(rows):
        for c in range(cols):
            y0, x0 = r * block_size, c * block_size
            y1, x1 = min(y0 + block_size, h), min(x0 + block_size, w)
            if dist is None:
                corner = 1.0
            else:
                nearest = min(dist[y, x] for y in (y0, y1 - 1) for x in (x0, x1 - 1))
                corner = min(nearest / d, 1.0)
            void = float(edge.empty_space[y0:y1, x0:x1].mean())
            objects = min(counts[r, c] / OBJECT_SATURATION, 1.0)
            scores[r, c] = block_score(corner, void, objects)
            voids[r, c] = void
    in_roi = (scores >= ROI_MIN_SCORE) & (voids < ROI_MAX_VOID)
    return RoiGrid(block_size=block_size, scores=scores, in_roi=in_roi, void_fraction=voids)
