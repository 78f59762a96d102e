"""Histogram threshold selection and block-wise iterative Otsu segmentation.

Every threshold ``t`` splits the levels into ``{<= t}`` and ``{> t}``. Only
splits with both classes non-empty are scored; a histogram with a single
occupied level returns that level. Ties go to the smallest ``t``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidInputError
from .imgproc import LEVELS, component_areas, histogram256


def _check_hist(hist) -> np.ndarray:
    hist = np.asarray(hist)
    if hist.shape != (LEVELS,):
        raise InvalidInputError(f"expected a 256-bin histogram, got shape {hist.shape}")
    if (hist < 0).any():
        raise InvalidInputError("histogram counts must be non-negative")
    if hist.sum() <= 0:
        raise InvalidInputError("empty histogram")
    return hist


def _valid_range(hist: np.ndarray) -> tuple[int, int] | None:
    """Thresholds ``lo..hi`` (inclusive) that leave both classes non-empty."""
    occupied = np.flatnonzero(hist)
    if occupied[0] == occupied[-1]:
        return None
    return int(occupied[0]), int(occupied[-1]) - 1


def otsu_threshold(hist) -> int:
    """Threshold minimising the within-class variance.

    Equivalent to maximising ``(T*S0 - n0*S)^2 / (n0*n1)``. A float pass picks
    the near-optimal candidates, then exact integer arithmetic settles them so
    ties resolve deterministically.
    """
    hist = _check_hist(hist)
    rng = _valid_range(hist)
    if rng is None:
        return int(np.flatnonzero(hist)[0])
    lo, hi = rng
    counts = hist.astype(np.int64)
    levels = np.arange(LEVELS, dtype=np.int64)
    n0 = np.cumsum(counts)
    s0 = np.cumsum(counts * levels)
    total, ssum = int(n0[-1]), int(s0[-1])

    t = np.arange(lo, hi + 1)
    a, b = n0[t].astype(np.float64), s0[t].astype(np.float64)
    between = (total * b - a * ssum) ** 2 / (a * (total - a))
    best = between.max()
    shortlist = t[between >= best * (1 - 1e-9)]

    winner, num_w, den_w = None, 0, 1
    for ti in shortlist:
        n0i, s0i = int(n0[ti]), int(s0[ti])
        num = (total * s0i - n0i * ssum) ** 2
        den = n0i * (total - n0i)
        if winner is None or num * den_w > num_w * den:
            winner, num_w, den_w = int(ti), num, den
    return winner


def _plogp(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = p[nz] * np.log(p[nz])
    return out


def max_entropy_threshold(hist) -> int:
    """Kapur's criterion: maximise the summed entropy of both classes."""
    hist = _check_hist(hist)
    rng = _valid_range(hist)
    if rng is None:
        return int(np.flatnonzero(hist)[0])
    lo, hi = rng
    p = hist / hist.sum()
    plogp = _plogp(p)
    p0 = np.cumsum(p)
    h0 = np.cumsum(plogp)
    p1 = np.cumsum(p[::-1])[::-1]  # p1[i] = sum over levels >= i
    h1 = np.cumsum(plogp[::-1])[::-1]

    t = np.arange(lo, hi + 1)
    w0, w1 = p0[t], p1[t + 1]
    crit = (np.log(w0) - h0[t] / w0) + (np.log(w1) - h1[t + 1] / w1)
    return int(t[np.argmax(crit)])


def yen_threshold(hist) -> int:
    """Yen's maximum-correlation criterion."""
    hist = _check_hist(hist)
    rng = _valid_range(hist)
    if rng is None:
        return int(np.flatnonzero(hist)[0])
    lo, hi = rng
    p = hist / hist.sum()
    p0 = np.cumsum(p)
    q0 = np.cumsum(p * p)
    p1 = np.cumsum(p[::-1])[::-1]
    q1 = np.cumsum((p * p)[::-1])[::-1]

    t = np.arange(lo, hi + 1)
    crit = 2 * np.log(p0[t] * p1[t + 1]) - np.log(q0[t] * q1[t + 1])
    return int(t[np.argmax(crit)])


GLOBAL_METHODS = {
    "otsu": otsu_threshold,
    "max_entropy": max_entropy_threshold,
    "yen": yen_threshold,
}


def global_threshold(img: np.ndarray, method: str) -> int:
    try:
        fn = GLOBAL_METHODS[method]
    except KeyError:
        raise InvalidInputError(f"unknown threshold method {method!r}") from None
    return fn(histogram256(img))


@dataclass(frozen=True)
class LiOtsuConfig:
    """Acceptance bounds and step schedule for the iterative Otsu search.

    ``F`` bounds the dark-pixel fraction and ``N_max`` the number of objects
    (components of at least ``min_object_area`` pixels) in one block.
    """

    F: float = 0.10
    N_max: int = 200
    S: float = 0.90
    t_floor: int = 10
    max_iters: int = 50
    min_object_area: int = 4

    def __post_init__(self):
        if not 0 < self.F < 1:
            raise InvalidInputError(f"F must lie in (0, 1), got {self.F}")
        if not 0.8 < self.S < 1:
            raise InvalidInputError(f"S must lie in (0.8, 1), got {self.S}")
        if self.N_max < 1:
            raise InvalidInputError("N_max must be >= 1")
        if not 0 <= self.t_floor <= 255:
            raise InvalidInputError("t_floor must lie in [0, 255]")
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be >= 1")
        if self.min_object_area < 1:
            raise InvalidInputError("min_object_area must be >= 1")


@dataclass
class ThresholdOutcome:
    t: int
    iterations: int
    foreground_ratio: float
    object_count: int
    converged: bool
    trace: tuple[int, ...] = field(default=())
    block: tuple[int, int, int, int] | None = None  # x0, y0, x1, y1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["trace"] = list(self.trace)
        d["block"] = list(self.block) if self.block is not None else None
        return d


def _measure(block: np.ndarray, t: int, min_area: int) -> tuple[float, int]:
    dark = block <= t
    ratio = float(dark.sum()) / dark.size
    if not dark.any():
        return ratio, 0
    return ratio, int((component_areas(dark, 8) >= min_area).sum())


def li_otsu(block: np.ndarray, cfg: LiOtsuConfig | None = None) -> ThresholdOutcome:
    """Lower the Otsu threshold by factor ``S`` until the dark set looks like cells.

    Accepts the first threshold whose dark fraction is below ``F`` and whose
    object count is below ``N_max``. Stops unconverged at ``t_floor`` or after
    ``max_iters`` reductions and reports the last threshold tried.
    """
    cfg = cfg or LiOtsuConfig()
    block = np.asarray(block)
    if block.size == 0:
        raise InvalidInputError("empty block")
    t = otsu_threshold(histogram256(block))
    trace = [t]
    i = 0
    while True:
        ratio, count = _measure(block, t, cfg.min_object_area)
        if ratio < cfg.F and count < cfg.N_max:
            return ThresholdOutcome(t, i, ratio, count, True, tuple(trace))
        if t <= cfg.t_floor or i >= cfg.max_iters:
            return ThresholdOutcome(t, i, ratio, count, False, tuple(trace))
        t = math.floor(cfg.S * t)
        trace.append(t)
        i += 1


def iter_blocks(shape: tuple[int, int], block_size: int):
    """Yield ``(x0, y0, x1, y1)`` tiles in row-major order; edge tiles may be smaller."""
    h, w = shape
    for y0 in range(0, h, block_size):
        for x0 in range(0, w, block_size):
            yield x0, y0, min(x0 + block_size, w), min(y0 + block_size, h)


def segment_image(img: np.ndarray, cfg: LiOtsuConfig | None = None, block_size: int = 400,
                  workers: int = 1) -> tuple[np.ndarray, list[ThresholdOutcome]]:
    """Dark-foreground mask from per-block iterative Otsu thresholds."""
    cfg = cfg or LiOtsuConfig()
    if block_size < 64:
        raise InvalidInputError("block_size must be >= 64")
    img = np.asarray(img)
    tiles = list(iter_blocks(img.shape, block_size))

    def run(tile):
        x0, y0, x1, y1 = tile
        outcome = li_otsu(img[y0:y1, x0:x1], cfg)
        outcome.block = tile
        return outcome

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            outcomes = list(pool.map(run, tiles))
    else:
        outcomes = [run(tile) for tile in tiles]

    mask = np.zeros(img.shape, dtype=bool)
    for (x0, y0, x1, y1), outcome in zip(tiles, outcomes):
        mask[y0:y1, x0:x1] = img[y0:y1, x0:x1] <= outcome.t
    return mask, outcomes
