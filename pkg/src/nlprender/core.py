"""Physical data model: luminance images, displays and acquisition mappings.

All luminances are in cd/m^2 and held as float64 arrays of shape
``(height, width)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConfigurationError, ConstraintViolation, DomainError

REC709_LUMA = (0.2126, 0.7152, 0.0722)


def _first_bad(mask: np.ndarray) -> tuple[int, ...]:
    return tuple(int(i) for i in np.argwhere(mask)[0])


@dataclass(frozen=True)
class LuminanceImage:
    """Immutable grid of nonnegative luminances (cd/m^2)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.size == 0:
            raise DomainError(f"luminance image must be a non-empty 2-D grid, got shape {arr.shape}")
        bad = ~np.isfinite(arr)
        if bad.any():
            raise DomainError(f"non-finite luminance at pixel {_first_bad(bad)}")
        neg = arr < 0
        if neg.any():
            idx = _first_bad(neg)
            raise DomainError(f"negative luminance {arr[idx]!r} at pixel {idx}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def as_array(img) -> np.ndarray:
    """Float64 view of a :class:`LuminanceImage` or array-like."""
    if isinstance(img, LuminanceImage):
        return img.data
    return np.asarray(img, dtype=np.float64)


@dataclass(frozen=True)
class DisplayModel:
    """Display producing ``i_min + (i_max - i_min) * v ** gamma_display`` for
    a normalized drive value ``v`` in [0, 1]."""

    i_min: float = 5.0
    i_max: float = 300.0
    gamma_display: float = 2.2

    def __post_init__(self):
        if not (np.isfinite(self.i_min) and np.isfinite(self.i_max)):
            raise ConfigurationError("display bounds must be finite")
        if not 0 <= self.i_min < self.i_max:
            raise ConfigurationError(f"need 0 <= i_min < i_max, got [{self.i_min}, {self.i_max}]")
        if not self.gamma_display > 0:
            raise ConfigurationError(f"gamma_display must be positive, got {self.gamma_display}")

    @property
    def span(self) -> float:
        return self.i_max - self.i_min


def encode_for_display(img, display: DisplayModel) -> np.ndarray:
    """Normalized drive values in [0, 1] that reproduce ``img`` on ``display``.

    Values may exceed the display range by ``1e-9 * (i_max - i_min)`` (they
    are clipped); anything further out raises :class:`ConstraintViolation`.
    """
    lum = as_array(img)
    tol = 1e-9 * display.span
    out_of_range = (lum < display.i_min - tol) | (lum > display.i_max + tol) | ~np.isfinite(lum)
    if out_of_range.any():
        idx = _first_bad(out_of_range)
        raise ConstraintViolation(
            f"luminance {lum[idx]!r} at pixel {idx} outside display range "
            f"[{display.i_min}, {display.i_max}]"
        )
    rel = np.clip((lum - display.i_min) / display.span, 0.0, 1.0)
    return rel ** (1.0 / display.gamma_display)


def decode_from_display(v, display: DisplayModel) -> LuminanceImage:
    """Luminance emitted by ``display`` for drive values ``v`` in [0, 1]."""
    v = np.asarray(v, dtype=np.float64)
    bad = ~((v >= 0) & (v <= 1))
    if bad.any():
        idx = _first_bad(bad)
        raise DomainError(f"drive value {v[idx]!r} at pixel {idx} outside [0, 1]")
    return LuminanceImage(display.i_min + display.span * v ** display.gamma_display)


# ---------------------------------------------------------------------------
# acquisition


@dataclass(frozen=True)
class GammaMapping:
    """Default camera mapping: ``s_min + (s_max - s_min) * (R / r_max) ** gamma_cam``."""

    s_min: float = 5.0
    s_max: float = 300.0
    gamma_cam: float = 2.2
    r_max: float = 255.0

    kind = "gamma"

    def __post_init__(self):
        if not 0 <= self.s_min < self.s_max:
            raise ConfigurationError(f"need 0 <= s_min < s_max, got [{self.s_min}, {self.s_max}]")
        if not (self.gamma_cam > 0 and self.r_max > 0):
            raise ConfigurationError("gamma_cam and r_max must be positive")

    def __call__(self, recorded: np.ndarray) -> np.ndarray:
        return self.s_min + (self.s_max - self.s_min) * (recorded / self.r_max) ** self.gamma_cam


def mapping_from_dict(desc: dict) -> GammaMapping:
    """Build a pixel-to-luminance mapping from a descriptor such as
    ``{"kind": "gamma", "s_min": 5, "s_max": 300, "gamma_cam": 2.2}``.

    ``kind="linear"`` is shorthand for ``gamma_cam = 1``.
    """
    desc = dict(desc)
    kind = desc.pop("kind", "gamma")
    if kind == "linear":
        if "gamma_cam" in desc:
            raise ConfigurationError("linear mapping does not take gamma_cam")
        desc["gamma_cam"] = 1.0
    elif kind != "gamma":
        raise ConfigurationError(f"unknown pixel-to-luminance mapping kind {kind!r}")
    try:
        return GammaMapping(**desc)
    except TypeError as exc:
        raise ConfigurationError(f"bad mapping descriptor: {exc}") from None


@dataclass(frozen=True)
class CalibratedHDR:
    """Data already in cd/m^2."""


@dataclass(frozen=True)
class CalibratedLDR:
    mapping: GammaMapping = field(default_factory=GammaMapping)


@dataclass(frozen=True)
class UncalibratedLinear:
    s_min: float = 0.01
    s_max: float = 1e4

    def __post_init__(self):
        if not 0 <= self.s_min < self.s_max:
            raise ConfigurationError(f"need 0 <= s_min < s_max, got [{self.s_min}, {self.s_max}]")


AcquisitionSpec = Union[CalibratedHDR, CalibratedLDR, UncalibratedLinear]


def scene_from_uncalibrated(normalized, s_min: float, s_max: float) -> LuminanceImage:
    """Map normalized linear measurements in [0, 1] onto ``[s_min, s_max]``."""
    if not 0 <= s_min < s_max:
        raise ConfigurationError(f"need 0 <= s_min < s_max, got [{s_min}, {s_max}]")
    arr = np.asarray(normalized, dtype=np.float64)
    bad = ~((arr >= 0) & (arr <= 1))
    if bad.any():
        idx = _first_bad(bad)
        raise DomainError(f"normalized value {arr[idx]!r} at pixel {idx} outside [0, 1]")
    return LuminanceImage((s_max - s_min) * arr + s_min)


def scene_from_ldr(recorded, mapping=None) -> LuminanceImage:
    """Apply a pixel-to-luminance mapping to recorded LDR pixel values."""
    if mapping is None:
        mapping = GammaMapping()
    elif isinstance(mapping, dict):
        mapping = mapping_from_dict(mapping)
    elif not isinstance(mapping, GammaMapping):
        raise ConfigurationError(f"unknown mapping descriptor {mapping!r}")
    arr = np.asarray(recorded, dtype=np.float64)
    bad = ~((arr >= 0) & (arr <= mapping.r_max))
    if bad.any():
        idx = _first_bad(bad)
        raise DomainError(f"recorded value {arr[idx]!r} at pixel {idx} outside [0, {mapping.r_max}]")
    return LuminanceImage(mapping(arr))


def normalize_linear(values) -> np.ndarray:
    """Min/max normalize linear measurements into [0, 1] (constant -> zeros)."""
    arr = np.asarray(values, dtype=np.float64)
    lo, hi = float(arr.min()), float(arr.max())
    if hi <= lo:
        return np.zeros_like(arr)
    return np.clip((arr - lo) / (hi - lo), 0.0, 1.0)


def acquire(data, spec: AcquisitionSpec) -> LuminanceImage:
    """Scene luminances from recorded ``data`` under an acquisition spec."""
    if isinstance(spec, CalibratedHDR):
        return LuminanceImage(data)
    if isinstance(spec, CalibratedLDR):
        return scene_from_ldr(data, spec.mapping)
    if isinstance(spec, UncalibratedLinear):
        return scene_from_uncalibrated(normalize_linear(data), spec.s_min, spec.s_max)
    raise ConfigurationError(f"unknown acquisition spec {spec!r}")


def to_grayscale(rgb) -> np.ndarray:
    """Rec. 709 luma of linear RGB; 2-D input is returned as float64."""
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] == 1:
        return arr[..., 0]
    if arr.ndim == 3 and arr.shape[2] >= 3:
        return arr[..., :3] @ np.asarray(REC709_LUMA)
    raise DomainError(f"cannot convert array of shape {arr.shape} to grayscale")


def affine_rescale(img, i_min: float, i_max: float) -> LuminanceImage:
    """Linear min/max rescale into ``[i_min, i_max]``.

    A constant image is clamped into the range instead.
    """
    arr = as_array(img)
    lo, hi = float(arr.min()), float(arr.max())
    if hi <= lo:
        return LuminanceImage(np.clip(arr, i_min, i_max))
    out = i_min + (arr - lo) * ((i_max - i_min) / (hi - lo))
    return LuminanceImage(np.clip(out, i_min, i_max))
