"""Color-class quantization, class rebalancing, harmonization and metrics for colorization."""

from .classgrid import ClassMap, GridParams, decode_class, decode_map, encode_class, encode_image, make_grid
from .classopt import ApprovedClassSet, ClassHistogram, accumulate_histogram, remap_map, select_classes
from .colorspace import lab_to_rgb, rgb_to_lab
from .config import PipelineConfig

__all__ = [
    "ApprovedClassSet",
    "ClassHistogram",
    "ClassMap",
    "GridParams",
    "PipelineConfig",
    "accumulate_histogram",
    "decode_class",
    "decode_map",
    "encode_class",
    "encode_image",
    "lab_to_rgb",
    "make_grid",
    "remap_map",
    "rgb_to_lab",
    "select_classes",
]
