"""Compare threshold methods against synthetic ground truth.

The iterative Otsu method runs block-wise; Otsu, Max Entropy and Yen run as
single global thresholds. Detections are 8-connected dark components.
Components under the debris floor are tallied separately and never matched.
The rest are paired one-to-one with planted objects, nearest centroids first,
within the match radius.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidInputError
from .imgproc import connected_components
from .io import list_images, read_gray
from .pipeline import PipelineConfig, preprocess
from .synth import load_truth
from .thresholding import GLOBAL_METHODS, segment_image

METHODS = ("li_otsu", "otsu", "max_entropy", "yen")


@dataclass
class BenchmarkRow:
    method: str
    false_positive: int
    false_negative: int
    debris: int
    total_count: int
    empty_space_resistant: bool
    accuracy: float


@dataclass
class ImageScore:
    matched: int
    false_positive: int
    false_negative: int
    debris: int
    detections: int


def segment_with(gray: np.ndarray, method: str, cfg: PipelineConfig) -> np.ndarray:
    if method == "li_otsu":
        return segment_image(gray, cfg.li, cfg.seg_block)[0]
    try:
        fn = GLOBAL_METHODS[method]
    except KeyError:
        raise InvalidInputError(f"unknown method {method!r}") from None
    return gray <= fn(np.bincount(gray.ravel(), minlength=256))


def truth_points(truth: dict) -> np.ndarray:
    """Planted discrete cells, plus one point per cluster at its mean centre."""
    pts = [(o["x"], o["y"]) for o in truth["objects"] if o["cluster"] is None]
    pts += [(c["x"], c["y"]) for c in truth["clusters"]]
    return np.asarray(pts, dtype=float).reshape(-1, 2)


def greedy_match(detected: np.ndarray, truth: np.ndarray, radius: float) -> list[tuple[int, int]]:
    """One-to-one pairs ``(detection, truth)`` within ``radius``, shortest distance first."""
    if len(detected) == 0 or len(truth) == 0:
        return []
    pairs = cKDTree(detected).sparse_distance_matrix(cKDTree(truth), radius, output_type="ndarray")
    # stable order: distance, then detection index, then truth index
    order = np.lexsort((pairs["j"], pairs["i"], pairs["v"]))
    used_d, used_t, out = set(), set(), []
    for k in order:
        i, j = int(pairs["i"][k]), int(pairs["j"][k])
        if i in used_d or j in used_t:
            continue
        used_d.add(i)
        used_t.add(j)
        out.append((i, j))
    return out


def score_mask(mask: np.ndarray, truth_pts: np.ndarray, match_radius: float = 15.0,
               debris_area: int = 25) -> ImageScore:
    comps = connected_components(mask, 8)
    debris = sum(1 for c in comps if c.area < debris_area)
    kept = np.asarray([c.centroid for c in comps if c.area >= debris_area], dtype=float).reshape(-1, 2)
    matched = len(greedy_match(kept, truth_pts, match_radius))
    return ImageScore(matched, len(kept) - matched, len(truth_pts) - matched, debris, len(kept))


def accuracy(matched: int, fp: int, fn: int) -> float:
    denom = matched + fp + fn
    return matched / denom if denom else 1.0


def load_corpus(corpus) -> list[tuple[Path, dict]]:
    corpus = Path(corpus)
    if not corpus.is_dir():
        raise InvalidInputError(f"corpus directory not found: {corpus}")
    pairs = []
    for img_path in list_images(corpus):
        truth_path = img_path.with_name(img_path.stem + ".truth.json")
        if not truth_path.exists():
            raise InvalidInputError(f"{img_path.name}: no ground truth file {truth_path.name}")
        pairs.append((img_path, load_truth(truth_path)))
    if not pairs:
        raise InvalidInputError(f"no images with ground truth in {corpus}")
    return pairs


def run_benchmark(items, methods=METHODS, cfg: PipelineConfig | None = None,
                  match_radius: float = 15.0, debris_area: int = 25) -> list[BenchmarkRow]:
    """Score each method over ``items``, an iterable of ``(gray image, truth dict)``."""
    cfg = cfg or PipelineConfig()
    items = [(preprocess(img, cfg), truth_points(truth)) for img, truth in items]
    rows = []
    for method in methods:
        matched = fp = fn = debris = total = 0
        resistant = True
        for gray, pts in items:
            s = score_mask(segment_with(gray, method, cfg), pts, match_radius, debris_area)
            matched += s.matched
            fp += s.false_positive
            fn += s.false_negative
            debris += s.debris
            total += s.detections
            if len(pts) == 0 and s.detections > 0:
                resistant = False
        rows.append(BenchmarkRow(method, fp, fn, debris, total, resistant, accuracy(matched, fp, fn)))
    return rows


def benchmark_corpus(corpus, methods=METHODS, cfg: PipelineConfig | None = None,
                     match_radius: float = 15.0) -> list[BenchmarkRow]:
    items = ((read_gray(p), truth) for p, truth in load_corpus(corpus))
    return run_benchmark(items, methods, cfg, match_radius)


def format_table(rows: list[BenchmarkRow]) -> str:
    header = ["method", "false_positive", "false_negative", "debris", "total_count",
              "empty_space_resistant", "accuracy"]
    cells = [[r.method, str(r.false_positive), str(r.false_negative), str(r.debris), str(r.total_count),
              "yes" if r.empty_space_resistant else "no", f"{100 * r.accuracy:.2f}%"] for r in rows]
    widths = [max(len(h), *(len(c[i]) for c in cells)) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines) + "\n"


def to_csv(rows: list[BenchmarkRow]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(BenchmarkRow.__dataclass_fields__), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        d = asdict(r)
        d["accuracy"] = f"{r.accuracy:.6f}"
        writer.writerow(d)
    return buf.getvalue()
