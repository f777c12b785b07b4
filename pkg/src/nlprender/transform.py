"""The normalized Laplacian pyramid (NLP) transform.

Luminances go through a power law, a Laplacian pyramid, and per-channel
divisive normalization by a local weighted sum of amplitudes.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import kernels, pyramid
from .core import as_array
from .errors import ConfigurationError, DomainError

P_BAND = (
    (0.04, 0.04, 0.05, 0.04, 0.04),
    (0.04, 0.03, 0.04, 0.03, 0.04),
    (0.05, 0.04, 0.05, 0.04, 0.05),
    (0.04, 0.03, 0.04, 0.03, 0.04),
    (0.04, 0.04, 0.05, 0.04, 0.04),
)

PARAM_KEYS = ("gamma", "l_taps", "p_band", "sigma_band", "p_low", "sigma_low", "n_levels", "alpha", "beta")


@dataclass(frozen=True)
class NlpParams:
    """Constants of the transform and of the distance.

    ``n_levels=None`` picks :func:`pyramid.default_n_levels` per image.
    """

    gamma: float = 1 / 2.6
    l_taps: tuple = pyramid.L_TAPS
    p_band: tuple = P_BAND
    sigma_band: float = 0.17
    p_low: float = 1.0
    sigma_low: float = 4.86
    n_levels: int | None = None
    alpha: float = 2.0
    beta: float = 0.6

    def __post_init__(self):
        object.__setattr__(self, "l_taps", pyramid.FilterKernel(tuple(self.l_taps)).taps)
        p = np.asarray(self.p_band, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] % 2 != 1 or p.shape[1] % 2 != 1:
            raise ConfigurationError(f"p_band must be an odd-sized 2-D grid, got shape {p.shape}")
        object.__setattr__(self, "p_band", tuple(tuple(float(v) for v in row) for row in p))
        if not (self.sigma_band > 0 and self.sigma_low > 0):
            raise ConfigurationError("sigma_band and sigma_low must be positive")
        if not self.gamma > 0:
            raise ConfigurationError(f"gamma must be positive, got {self.gamma}")
        if not self.alpha >= 1:
            raise ConfigurationError(f"alpha must be >= 1, got {self.alpha}")
        if not self.beta > 0:
            raise ConfigurationError(f"beta must be positive, got {self.beta}")
        if self.n_levels is not None and int(self.n_levels) < 1:
            raise ConfigurationError(f"n_levels must be >= 1, got {self.n_levels}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["l_taps"] = list(self.l_taps)
        d["p_band"] = [list(r) for r in self.p_band]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NlpParams":
        unknown = set(d) - set(PARAM_KEYS)
        if unknown:
            raise ConfigurationError(f"unknown parameter keys: {sorted(unknown)}")
        kw = dict(d)
        if "l_taps" in kw:
            kw["l_taps"] = tuple(kw["l_taps"])
        if "p_band" in kw:
            kw["p_band"] = tuple(tuple(r) for r in kw["p_band"])
        return cls(**kw)


def load_params(path) -> NlpParams:
    """Read parameters from a JSON file; missing keys keep their defaults."""
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(d, dict):
        raise ConfigurationError(f"{path}: expected a JSON object")
    return NlpParams.from_dict(d)


def save_params(params: NlpParams, path) -> None:
    Path(path).write_text(json.dumps(params.to_dict(), indent=2) + "\n")


@dataclass(frozen=True)
class AblationConfig:
    disable_front_nonlinearity: bool = False
    disable_multiscale: bool = False
    disable_normalization: bool = False

    @property
    def name(self) -> str:
        flags = [
            ("no-nonlinearity", self.disable_front_nonlinearity),
            ("no-multiscale", self.disable_multiscale),
            ("no-normalization", self.disable_normalization),
        ]
        return "+".join(n for n, on in flags if on) or "full"


FULL = AblationConfig()


@dataclass(frozen=True)
class Resolved:
    """Parameters after applying ablation flags and the image-size default."""

    gamma: float
    taps: tuple
    p_band: np.ndarray = field(repr=False)
    sigma_band: float
    p_low: float
    sigma_low: float
    n_levels: int
    alpha: float
    beta: float


def resolve(params: NlpParams, ablate: AblationConfig, shape) -> Resolved:
    n_levels = params.n_levels if params.n_levels is not None else pyramid.default_n_levels(shape)
    gamma = 1.0 if ablate.disable_front_nonlinearity else params.gamma
    if ablate.disable_multiscale:
        n_levels = 1
    p_band = np.asarray(params.p_band, dtype=np.float64)
    sb, pl, sl = params.sigma_band, params.p_low, params.sigma_low
    if ablate.disable_normalization:
        p_band = np.zeros_like(p_band)
        sb, pl, sl = 1.0, 0.0, 1.0
    pyramid.check_levels(tuple(shape), int(n_levels))
    return Resolved(gamma, params.l_taps, p_band, sb, pl, sl, int(n_levels), params.alpha, params.beta)


@dataclass
class NlpRepresentation:
    """Normalized channels, finest bandpass first and the lowpass last."""

    channels: list
    level_dims: list

    @property
    def n_channels(self) -> int:
        return len(self.channels)


def front_nonlinearity(lum, gamma: float) -> np.ndarray:
    arr = as_array(lum)
    if (arr < 0).any() or not np.isfinite(arr).all():
        raise DomainError("power law needs finite nonnegative luminances")
    return arr ** gamma


def normalize_channel(z, p, sigma: float) -> np.ndarray:
    """Divide each coefficient by ``sigma`` plus a weighted local sum of
    amplitudes. ``p`` is a 2-D weighting grid (convolved, mirror boundary)
    or a scalar multiplying the coefficient's own amplitude."""
    return _normalize(np.asarray(z, dtype=np.float64), p, sigma)[0]


def _normalize(z, p, sigma):
    if np.ndim(p) == 0:
        den = sigma + float(p) * np.abs(z)
    else:
        kern = np.flip(np.asarray(p, dtype=np.float64))
        den = sigma + kernels.window_apply(np.abs(z), np.ascontiguousarray(kern))
    return z / den, den


@dataclass
class ForwardState:
    """Intermediates of one transform evaluation, kept for the gradient."""

    lum: np.ndarray
    bands: list
    dens: list
    channels: list
    cfg: Resolved


def forward(lum, cfg: Resolved) -> ForwardState:
    x = np.asarray(lum, dtype=np.float64) ** cfg.gamma
    pyr = pyramid.build(x, cfg.n_levels, cfg.taps)
    outs = [_normalize(z, cfg.p_band, cfg.sigma_band) for z in pyr.bands]
    outs.append(_normalize(pyr.lowpass, cfg.p_low, cfg.sigma_low))
    return ForwardState(
        lum=np.asarray(lum, dtype=np.float64),
        bands=pyr.channels,
        dens=[d for _, d in outs],
        channels=[y for y, _ in outs],
        cfg=cfg,
    )


def transform(lum, params: NlpParams | None = None, ablate: AblationConfig = FULL) -> NlpRepresentation:
    """Apply the NLP transform to a luminance image."""
    params = NlpParams() if params is None else params
    arr = as_array(lum)
    if (arr < 0).any() or not np.isfinite(arr).all():
        raise DomainError("transform needs finite nonnegative luminances")
    cfg = resolve(params, ablate, arr.shape)
    st = forward(arr, cfg)
    dims = [(c.shape[1], c.shape[0]) for c in st.channels]
    return NlpRepresentation(st.channels, dims)


def with_levels(params: NlpParams, n_levels: int | None) -> NlpParams:
    return replace(params, n_levels=n_levels)
