"""Cell/cluster classification, per-image features and block density histograms."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .edge_roi import RoiGrid
from .errors import InvalidInputError
from .imgproc import Component
from .thresholding import ThresholdOutcome, iter_blocks

DISCRETE = "discrete"
CLUSTER = "cluster"


@dataclass
class CellObject:
    component: Component
    kind: str

    @property
    def area(self) -> int:
        return self.component.area


@dataclass
class BlockHistogram:
    bin_labels: list[str]
    counts: list[int]
    log_values: list[float]


@dataclass
class QuantReport:
    image_id: str
    n_discrete: int
    n_clusters: int
    mean_discrete_size: float
    total_cluster_area: int
    n_cells_in_clusters: float
    n_total: float
    per_block_counts: list[int]
    histogram: BlockHistogram
    converged_blocks: int
    expected_cell_size: float = 0.0
    block_thresholds: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {"schema": 1}
        d.update(asdict(self))
        return d


def classify_objects(objects: list[Component], avg_cell_size: float = 500,
                     cluster_factor: float = 2.0, min_cell_area: int = 25) -> list[CellObject]:
    """Label each object discrete or cluster by area; drop debris below ``min_cell_area``."""
    if avg_cell_size <= 0:
        raise InvalidInputError("avg_cell_size must be > 0")
    limit = cluster_factor * avg_cell_size
    return [CellObject(obj, CLUSTER if obj.area > limit else DISCRETE)
            for obj in objects if obj.area >= min_cell_area]


def mean_discrete_size(cells: list[CellObject]) -> float:
    areas = [c.area for c in cells if c.kind == DISCRETE]
    return float(np.mean(areas)) if areas else 0.0


def expected_cell_size(cells: list[CellObject], avg_cell_size: float = 500) -> float:
    """Mean discrete area of this image, falling back to ``avg_cell_size``."""
    m = mean_discrete_size(cells)
    return m if m > 0 else float(avg_cell_size)


def cells_in_clusters(total_cluster_area: float, expected_size: float) -> float:
    """Estimated number of cells making up ``total_cluster_area`` pixels."""
    if expected_size <= 0:
        raise InvalidInputError("expected_size must be > 0")
    return total_cluster_area / expected_size


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def eligible_blocks(roi: RoiGrid, shape: tuple[int, int], analysis_block: int = 400):
    """Analysis tiles at least half covered by in-ROI scoring blocks."""
    if analysis_block < 1:
        raise InvalidInputError("analysis_block must be >= 1")
    roi_pixels = roi.pixel_mask(shape)
    return [tile for tile in iter_blocks(shape, analysis_block)
            if roi_pixels[tile[1]:tile[3], tile[0]:tile[2]].mean() >= 0.5]


def per_block_counts(cells: list[CellObject], roi: RoiGrid, shape: tuple[int, int],
                     analysis_block: int = 400, expected_size: float = 500) -> list[int]:
    """Cells per eligible analysis block.

    Discrete cells count where their centroid falls. Cluster pixels are split
    by block, and each block's cluster area is converted to a cell count.
    """
    tiles = eligible_blocks(roi, shape, analysis_block)
    cluster_px = np.zeros(shape, dtype=np.int32)
    for c in cells:
        if c.kind == CLUSTER:
            xs, ys = c.component.pixels[:, 0], c.component.pixels[:, 1]
            cluster_px[ys, xs] += 1
    counts = []
    for x0, y0, x1, y1 in tiles:
        n = sum(1 for c in cells if c.kind == DISCRETE
                and x0 <= c.component.centroid[0] < x1 and y0 <= c.component.centroid[1] < y1)
        area = int(cluster_px[y0:y1, x0:x1].sum())
        counts.append(n + _round_half_up(area / expected_size))
    return counts


def bin_labels(bin_width: int = 20, top: int = 160) -> list[str]:
    labels = [f"{0 if i == 0 else i * bin_width + 1}_{(i + 1) * bin_width}"
              for i in range(top // bin_width)]
    return labels + [f"gt_{top}"]


def bin_index(count: int, bin_width: int = 20, top: int = 160) -> int:
    if count > top:
        return top // bin_width
    return max(0, math.ceil(count / bin_width) - 1)


def build_histogram(counts: list[int], bin_width: int = 20, top: int = 160) -> BlockHistogram:
    """Bin block counts and attach ``log10(10 * n + 1)`` display values."""
    if bin_width < 1 or top % bin_width:
        raise InvalidInputError("top must be a positive multiple of bin_width")
    labels = bin_labels(bin_width, top)
    binned = [0] * len(labels)
    for c in counts:
        binned[bin_index(int(c), bin_width, top)] += 1
    return BlockHistogram(labels, binned, [math.log10(10 * n + 1) for n in binned])


def assemble_report(image_id: str, cells: list[CellObject], roi: RoiGrid, outcomes: list[ThresholdOutcome],
                    shape: tuple[int, int], avg_cell_size: float = 500, analysis_block: int = 400,
                    bin_width: int = 20, top: int = 160) -> QuantReport:
    discrete = [c for c in cells if c.kind == DISCRETE]
    clusters = [c for c in cells if c.kind == CLUSTER]
    expected = expected_cell_size(cells, avg_cell_size)
    cluster_area = sum(c.area for c in clusters)
    n_in_clusters = round(cells_in_clusters(cluster_area, expected), 2)
    counts = per_block_counts(cells, roi, shape, analysis_block, expected)
    return QuantReport(
        image_id=image_id,
        n_discrete=len(discrete),
        n_clusters=len(clusters),
        mean_discrete_size=round(mean_discrete_size(cells), 2),
        total_cluster_area=cluster_area,
        n_cells_in_clusters=n_in_clusters,
        n_total=len(discrete) + n_in_clusters,
        per_block_counts=counts,
        histogram=build_histogram(counts, bin_width, top),
        converged_blocks=sum(1 for o in outcomes if o.converged),
        expected_cell_size=round(expected, 2),
        block_thresholds=[o.to_dict() for o in outcomes],
    )
