"""Perceptually optimized rendering: choose display luminances that minimize
the normalized Laplacian pyramid distance (NLPD) to the scene."""

__version__ = "0.1.0"

from ._accel import BACKEND
from .core import (
    CalibratedHDR,
    CalibratedLDR,
    DisplayModel,
    GammaMapping,
    LuminanceImage,
    UncalibratedLinear,
    acquire,
    affine_rescale,
    decode_from_display,
    encode_for_display,
)
from .dither import DitherConfig, equally_spaced_levels, floyd_steinberg, greedy_dither
from .errors import (
    ConfigurationError,
    ConstraintViolation,
    DimensionError,
    DomainError,
    FormatError,
    NlpRenderError,
    NumericalError,
)
from .fileio import load_image, save_image
from .metric import Nlpd, distance, gradient
from .optimizer import Box, BoxMean, DiscreteLevels, OptimizationTrace, OptimizerConfig, minimize
from .pyramid import build, collapse
from .tasks import RenderTask, ablation_suite, detail_enhance, energy_curve, render
from .transform import AblationConfig, NlpParams, transform

__all__ = [
    "BACKEND",
    "AblationConfig",
    "Box",
    "BoxMean",
    "CalibratedHDR",
    "CalibratedLDR",
    "ConfigurationError",
    "ConstraintViolation",
    "DimensionError",
    "DiscreteLevels",
    "DisplayModel",
    "DitherConfig",
    "DomainError",
    "FormatError",
    "GammaMapping",
    "LuminanceImage",
    "NlpParams",
    "NlpRenderError",
    "Nlpd",
    "NumericalError",
    "OptimizationTrace",
    "OptimizerConfig",
    "RenderTask",
    "UncalibratedLinear",
    "ablation_suite",
    "acquire",
    "affine_rescale",
    "build",
    "collapse",
    "decode_from_display",
    "detail_enhance",
    "distance",
    "encode_for_display",
    "energy_curve",
    "equally_spaced_levels",
    "floyd_steinberg",
    "gradient",
    "greedy_dither",
    "load_image",
    "minimize",
    "render",
    "save_image",
    "transform",
]
