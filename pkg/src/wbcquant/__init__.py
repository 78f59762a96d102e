"""Segmentation and counting of white blood cells in 100x muscle micrographs."""

from .edge_roi import EdgeDetectorParams, EdgeResult, RoiGrid, merge_detectors
from .errors import ConfigError, GenerationError, InvalidInputError
from .pipeline import PipelineConfig, analyze_image, build_config
from .quantify import QuantReport
from .synth import SynthSpec, render
from .thresholding import LiOtsuConfig, li_otsu, max_entropy_threshold, otsu_threshold, segment_image, yen_threshold

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "EdgeDetectorParams", "EdgeResult", "GenerationError", "InvalidInputError",
    "LiOtsuConfig", "PipelineConfig", "QuantReport", "RoiGrid", "SynthSpec", "analyze_image",
    "build_config", "li_otsu", "max_entropy_threshold", "merge_detectors", "otsu_threshold",
    "render", "segment_image", "yen_threshold",
]
