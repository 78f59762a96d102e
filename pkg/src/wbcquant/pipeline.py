"""End-to-end analysis of one image and the flat ``key=value`` run configuration."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .edge_roi import EdgeDetectorParams, EdgeResult, RoiGrid, exclude_near_edge, merge_detectors, score_blocks
from .errors import ConfigError, InvalidInputError
from .imgproc import Component, connected_components, detect_bubbles, fill_artifacts, global_mean, to_grayscale
from .quantify import CellObject, QuantReport, assemble_report, classify_objects
from .thresholding import LiOtsuConfig, ThresholdOutcome, segment_image


@dataclass(frozen=True)
class PipelineConfig:
    li: LiOtsuConfig = field(default_factory=LiOtsuConfig)
    edge: EdgeDetectorParams = field(default_factory=EdgeDetectorParams)
    seg_block: int = 400
    roi_block: int = 200
    analysis_block: int = 400
    avg_cell_size: float = 500.0
    cluster_factor: float = 2.0
    min_cell_area: int = 25
    bin_width: int = 20
    bin_top: int = 160
    detect_edges: bool = True
    fill_bubbles: bool = True
    bubble_level: int = 250
    bubble_min_area: int = 2000

    def __post_init__(self):
        if self.seg_block < 64:
            raise InvalidInputError("seg_block must be >= 64")
        if self.roi_block < 1 or self.analysis_block < 1:
            raise InvalidInputError("block sizes must be >= 1")
        if self.avg_cell_size <= 0 or self.cluster_factor <= 0 or self.min_cell_area < 1:
            raise InvalidInputError("cell size parameters must be positive")


@dataclass
class Analysis:
    report: QuantReport
    gray: np.ndarray
    mask: np.ndarray
    outcomes: list[ThresholdOutcome]
    edge: EdgeResult
    roi: RoiGrid
    objects: list[Component]
    cells: list[CellObject]


def _no_edge(shape) -> EdgeResult:
    empty = np.zeros(shape, dtype=bool)
    return EdgeResult(empty_space=empty, muscle_edge=empty.copy(), confident=empty.copy())


def preprocess(img: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    """Grayscale conversion and bubble filling with the global mean."""
    gray = to_grayscale(img)
    if cfg.fill_bubbles:
        bubbles = detect_bubbles(gray, cfg.bubble_level, cfg.bubble_min_area)
        if bubbles.any():
            gray = fill_artifacts(gray, bubbles, global_mean(gray))
    return gray


def in_roi(objects: list[Component], roi: RoiGrid) -> list[Component]:
    rows, cols = roi.in_roi.shape
    b = roi.block_size
    return [o for o in objects
            if roi.in_roi[min(int(o.centroid[1]) // b, rows - 1), min(int(o.centroid[0]) // b, cols - 1)]]


def analyze_image(img: np.ndarray, cfg: PipelineConfig | None = None, image_id: str = "image") -> Analysis:
    cfg = cfg or PipelineConfig()
    gray = preprocess(img, cfg)
    mask, outcomes = segment_image(gray, cfg.li, cfg.seg_block)

    big_enough = min(gray.shape) >= max(cfg.edge.avg_kernel, 2 * cfg.edge.corner_window)
    edge = merge_detectors(gray, cfg.edge) if cfg.detect_edges and big_enough else _no_edge(gray.shape)

    objects = connected_components(mask, 8)
    effective = exclude_near_edge(objects, edge, cfg.edge.edge_exclusion_d)
    roi = score_blocks(gray.shape, edge, effective, cfg.roi_block, cfg.edge.edge_exclusion_d)
    cells = classify_objects(in_roi(effective, roi), cfg.avg_cell_size, cfg.cluster_factor, cfg.min_cell_area)
    report = assemble_report(image_id, cells, roi, outcomes, gray.shape, cfg.avg_cell_size,
                             cfg.analysis_block, cfg.bin_width, cfg.bin_top)
    return Analysis(report, gray, mask, outcomes, edge, roi, objects, cells)


# -- flat key=value configuration ---------------------------------------------

_NESTED = {"li": LiOtsuConfig, "edge": EdgeDetectorParams}


def _coerce(value: str, target):
    if target is bool:
        low = value.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    return target(value.strip())


def _field_types(cls) -> dict:
    out = {}
    for f in dataclasses.fields(cls):
        default = f.default if f.default is not dataclasses.MISSING else None
        out[f.name] = type(default) if default is not None else str
    return out


def config_keys() -> dict[str, tuple[str | None, type]]:
    """Map every accepted key to ``(nested section or None, python type)``."""
    keys = {}
    for section, cls in _NESTED.items():
        for name, typ in _field_types(cls).items():
            keys[name] = (section, typ)
    for name, typ in _field_types(PipelineConfig).items():
        if name not in _NESTED:
            keys[name] = (None, typ)
    return keys


def parse_config_text(text: str) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def build_config(values: dict[str, object] | None = None) -> PipelineConfig:
    """Build a validated ``PipelineConfig`` from flat overrides."""
    known = config_keys()
    nested: dict[str, dict] = {k: {} for k in _NESTED}
    top: dict[str, object] = {}
    for key, value in (values or {}).items():
        if key not in known:
            raise ConfigError(f"unknown configuration key {key!r}")
        section, typ = known[key]
        try:
            value = _coerce(value, typ) if isinstance(value, str) else typ(value)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
        (nested[section] if section else top)[key] = value
    try:
        return PipelineConfig(li=LiOtsuConfig(**nested["li"]), edge=EdgeDetectorParams(**nested["edge"]), **top)
    except InvalidInputError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text)
