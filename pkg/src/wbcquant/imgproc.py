"""Raster primitives shared by every stage of the pipeline.

Gray images are 2-D ``uint8`` arrays indexed ``[y, x]``; binary masks are 2-D
``bool`` arrays of the same shape. Intensity outputs are rounded half-up and
clamped to [0, 255]; convolutions replicate edge pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import cv2
import numpy as np
from scipy import ndimage as ndi

from .errors import InvalidInputError

LEVELS = 256

# 8-connected (objects) and 4-connected (background) neighbourhoods
CONN8 = np.ones((3, 3), dtype=bool)
CONN4 = ndi.generate_binary_structure(2, 1)


def _check_gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2 or img.size == 0:
        raise InvalidInputError(f"expected a non-empty 2-D image, got shape {img.shape}")
    return img


def round_clamp(values) -> np.ndarray:
    """Round half-up and clamp to the 8-bit range."""
    return np.clip(np.floor(np.asarray(values, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def to_grayscale(rgb) -> np.ndarray:
    """Luma conversion with ITU-R 601 weights; 2-D input is passed through."""
    rgb = np.asarray(rgb)
    if rgb.size == 0:
        raise InvalidInputError("zero-sized image")
    if rgb.ndim == 2:
        return rgb.astype(np.uint8, copy=True)
    if rgb.ndim != 3 or rgb.shape[2] not in (3, 4):
        raise InvalidInputError(f"expected an RGB raster, got shape {rgb.shape}")
    r, g, b = (rgb[..., c].astype(np.float64) for c in range(3))
    return round_clamp(0.299 * r + 0.587 * g + 0.114 * b)


def histogram256(img: np.ndarray) -> np.ndarray:
    """Counts of each of the 256 intensity levels."""
    img = _check_gray(img)
    return np.bincount(img.ravel(), minlength=LEVELS).astype(np.int64)


def global_mean(img: np.ndarray) -> float:
    img = _check_gray(img)
    return float(img.sum(dtype=np.int64)) / img.size


def local_std(img: np.ndarray, block: tuple[int, int, int, int] | None = None) -> float:
    """Population standard deviation over ``block = (x0, y0, x1, y1)`` (exclusive end)."""
    img = np.asarray(img)
    if block is not None:
        x0, y0, x1, y1 = block
        if not (0 <= x0 < x1 <= img.shape[1] and 0 <= y0 < y1 <= img.shape[0]):
            raise InvalidInputError(f"block {block} outside image of shape {img.shape}")
        img = img[y0:y1, x0:x1]
    if img.size == 0:
        raise InvalidInputError("empty block")
    vals = img.astype(np.float64)
    return float(np.sqrt(np.mean((vals - vals.mean()) ** 2)))


def fill_artifacts(img: np.ndarray, artifact_mask: np.ndarray, fill: float) -> np.ndarray:
    img = _check_gray(img)
    artifact_mask = np.asarray(artifact_mask, dtype=bool)
    if artifact_mask.shape != img.shape:
        raise InvalidInputError(f"mask shape {artifact_mask.shape} != image shape {img.shape}")
    out = img.copy()
    out[artifact_mask] = round_clamp(fill)
    return out


def detect_bubbles(img: np.ndarray, level: int = 250, min_area: int = 2000) -> np.ndarray:
    """Near-saturated connected regions large enough to be air bubbles."""
    img = _check_gray(img)
    bright = img >= level
    labels, n = ndi.label(bright, structure=CONN8)
    if n == 0:
        return bright
    areas = np.bincount(labels.ravel())
    keep = areas >= min_area
    keep[0] = False
    return keep[labels]


def box_filter(img: np.ndarray, size: int) -> np.ndarray:
    """Rounded mean over a ``size`` x ``size`` window.

    The window for pixel ``i`` spans ``i - size//2 .. i - size//2 + size - 1`` on
    each axis, so even sizes lean towards the lower index. Sums are taken on an
    integral image, which keeps the rounding exact.
    """
    img = _check_gray(img)
    if size < 1:
        raise InvalidInputError("box size must be >= 1")
    if size > min(img.shape):
        raise InvalidInputError(f"box size {size} exceeds image dimensions {img.shape}")
    before = size // 2
    after = size - 1 - before
    padded = np.pad(img.astype(np.int64), ((before, after), (before, after)), mode="edge")
    integral = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.int64)
    integral[1:, 1:] = padded.cumsum(0).cumsum(1)
    h, w = img.shape
    sums = (integral[size:size + h, size:size + w] - integral[:h, size:size + w]
            - integral[size:size + h, :w] + integral[:h, :w])
    n = size * size
    # round half-up in integers: floor((2s + n) / 2n)
    return ((2 * sums + n) // (2 * n)).astype(np.uint8)


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_smooth(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian smoothing returning floats (no rounding)."""
    if sigma <= 0:
        raise InvalidInputError("sigma must be > 0")
    k = gaussian_kernel(sigma)
    return cv2.sepFilter2D(np.asarray(img, dtype=np.float64), cv2.CV_64F, k, k,
                           borderType=cv2.BORDER_REPLICATE)


def gaussian_filter(img: np.ndarray, sigma: float) -> np.ndarray:
    img = _check_gray(img)
    return round_clamp(gaussian_smooth(img, sigma))


def unsharp(img: np.ndarray, sigma: float, k: float) -> np.ndarray:
    """Gain-scaled detail layer ``k * (img - blur(img))``, clamped at zero.

    Only structure brighter than its surroundings survives the clamp, which is
    what the texture detector keys on.
    """
    img = _check_gray(img)
    if k <= 0:
        raise InvalidInputError("gain must be > 0")
    blurred = gaussian_filter(img, sigma)
    diff = img.astype(np.float64) - blurred.astype(np.float64)
    return round_clamp(k * diff)


def equalization_lut(img: np.ndarray) -> np.ndarray:
    hist = histogram256(img)
    cdf = np.cumsum(hist)
    return ((LEVELS - 1) * cdf // cdf[-1]).astype(np.uint8)


def hist_equalize(img: np.ndarray) -> np.ndarray:
    """Map each pixel to ``floor(255 * CDF(pixel))``."""
    img = _check_gray(img)
    return equalization_lut(img)[img]


def apply_threshold(img: np.ndarray, t: int, polarity: str = "dark") -> np.ndarray:
    """``dark``: foreground where pixel <= t. ``bright``: foreground where pixel > t."""
    img = np.asarray(img)
    if polarity == "dark":
        return img <= t
    if polarity == "bright":
        return img > t
    raise InvalidInputError(f"unknown polarity {polarity!r}")


def invert(mask: np.ndarray) -> np.ndarray:
    return ~np.asarray(mask, dtype=bool)


@dataclass(frozen=True)
class StructuringElement:
    shape: str = "disk"
    radius: int = 1

    def __post_init__(self):
        if self.radius < 1:
            raise InvalidInputError("structuring element radius must be >= 1")
        if self.shape not in ("disk", "square"):
            raise InvalidInputError(f"unknown structuring element shape {self.shape!r}")

    def footprint(self) -> np.ndarray:
        r = self.radius
        if self.shape == "square":
            return np.ones((2 * r + 1, 2 * r + 1), dtype=bool)
        y, x = np.mgrid[-r:r + 1, -r:r + 1]
        return x * x + y * y <= r * r


def _erode(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    out = cv2.erode(mask.astype(np.uint8), se.footprint().astype(np.uint8),
                    borderType=cv2.BORDER_CONSTANT, borderValue=0)
    return out.astype(bool)


def _dilate(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    out = cv2.dilate(mask.astype(np.uint8), se.footprint().astype(np.uint8),
                     borderType=cv2.BORDER_CONSTANT, borderValue=0)
    return out.astype(bool)


def erode(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    pad = 2 * se.radius + 1
    padded = np.pad(mask, pad, constant_values=False)
    return _erode(padded, se)[pad:-pad, pad:-pad]


def dilate(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    pad = 2 * se.radius + 1
    padded = np.pad(mask, pad, constant_values=False)
    return _dilate(padded, se)[pad:-pad, pad:-pad]


def morph_close(mask: np.ndarray, se: StructuringElement, order: str = "erode_dilate") -> np.ndarray:
    """Two-step morphology used by both edge detectors.

    ``order="erode_dilate"`` (default) erodes then dilates; ``"dilate_erode"``
    is the textbook closing. Both run on a zero-padded canvas wide enough that
    the intermediate result is never clipped, so pixels outside the image count
    as background and either order is idempotent.
    """
    mask = np.asarray(mask, dtype=bool)
    pad = 2 * se.radius + 1
    work = np.pad(mask, pad, constant_values=False)
    if order == "erode_dilate":
        work = _dilate(_erode(work, se), se)
    elif order == "dilate_erode":
        work = _erode(_dilate(work, se), se)
    else:
        raise InvalidInputError(f"unknown morphology order {order!r}")
    return work[pad:-pad, pad:-pad]


@dataclass
class Component:
    """One connected foreground region. Coordinates are ``(x, y)``."""

    label: int
    area: int
    bbox: tuple[int, int, int, int]  # min_x, min_y, max_x, max_y (inclusive)
    centroid: tuple[float, float]
    pixels: np.ndarray = field(repr=False)  # (n, 2) array of (x, y)


def label_mask(mask: np.ndarray, connectivity: int = 8) -> tuple[np.ndarray, int]:
    if connectivity not in (4, 8):
        raise InvalidInputError("connectivity must be 4 or 8")
    structure = CONN8 if connectivity == 8 else CONN4
    return ndi.label(np.asarray(mask, dtype=bool), structure=structure)


def connected_components(mask: np.ndarray, connectivity: int = 8) -> list[Component]:
    """Connected regions ordered by the top-left corner of their bounding box."""
    labels, n = label_mask(mask, connectivity)
    if n == 0:
        return []
    slices = ndi.find_objects(labels)
    order = sorted(range(n), key=lambda i: (slices[i][0].start, slices[i][1].start, i))
    comps = []
    for new_label, i in enumerate(order, start=1):
        sy, sx = slices[i]
        ys, xs = np.nonzero(labels[sy, sx] == i + 1)
        ys = ys + sy.start
        xs = xs + sx.start
        comps.append(Component(
            label=new_label,
            area=int(xs.size),
            bbox=(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())),
            centroid=(float(xs.mean()), float(ys.mean())),
            pixels=np.column_stack([xs, ys]),
        ))
    return comps


def component_areas(mask: np.ndarray, connectivity: int = 8) -> np.ndarray:
    """Areas of all components, in label order (cheaper than full Components)."""
    labels, n = label_mask(mask, connectivity)
    return np.bincount(labels.ravel(), minlength=n + 1)[1:]


def remove_small(mask: np.ndarray, min_area: int, connectivity: int = 8) -> np.ndarray:
    labels, n = label_mask(mask, connectivity)
    if n == 0:
        return np.zeros_like(mask, dtype=bool)
    keep = np.bincount(labels.ravel()) >= min_area
    keep[0] = False
    return keep[labels]


def fill_holes(mask: np.ndarray) -> np.ndarray:
    """Fill background regions that are not 4-connected to the image border."""
    return ndi.binary_fill_holes(np.asarray(mask, dtype=bool), structure=CONN4)


# non-maximum suppression offsets (dy, dx) for the 8 quantised gradient directions
_DIRS = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)]


def canny(img: np.ndarray, low: float, high: float, sigma: float = 1.4) -> np.ndarray:
    """Canny edges: Gaussian smoothing, Sobel gradient, NMS, hysteresis.

    Thresholds apply to the Sobel gradient magnitude. When two neighbours
    along the gradient tie, the one on the darker side is kept, so a clean step
    yields a one-pixel line and the result commutes with 90-degree rotations.
    """
    img = _check_gray(img)
    if not 0 <= low < high:
        raise InvalidInputError("canny requires 0 <= low < high")
    smooth = gaussian_smooth(img, sigma)
    gy = ndi.sobel(smooth, axis=0, mode="nearest")
    gx = ndi.sobel(smooth, axis=1, mode="nearest")
    # rounding absorbs float noise so symmetric ties stay ties
    mag = np.round(np.hypot(gx, gy), 6)
    octant = np.round(np.arctan2(gy, gx) / (np.pi / 4)).astype(int) % 8

    padded = np.pad(mag, 1)
    h, w = mag.shape
    keep = np.zeros_like(mag, dtype=bool)
    for d, (dy, dx) in enumerate(_DIRS):
        sel = octant == d
        if not sel.any():
            continue
        ahead = padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
        behind = padded[1 - dy:1 - dy + h, 1 - dx:1 - dx + w]
        keep |= sel & (mag >= ahead) & (mag > behind)
    keep &= mag > 0

    weak = keep & (mag >= low)
    strong = keep & (mag >= high)
    labels, n = ndi.label(weak, structure=CONN8)
    if n == 0:
        return weak
    hit = np.zeros(n + 1, dtype=bool)
    hit[labels[strong]] = True
    hit[0] = False
    return hit[labels]


def chebyshev_distance_to(mask: np.ndarray) -> np.ndarray:
    """Chessboard distance from every pixel to the nearest true pixel of ``mask``."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return np.full(mask.shape, np.inf)
    return ndi.distance_transform_cdt(~mask, metric="chessboard").astype(np.float64)
