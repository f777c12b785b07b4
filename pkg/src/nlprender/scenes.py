"""Deterministic synthetic scenes for demos, benchmarks and tests."""

from __future__ import annotations

import numpy as np

from .core import LuminanceImage


def pink_noise(shape, seed: int = 0, exponent: float = 1.0) -> np.ndarray:
    """Zero-mean, unit-variance noise with a ``1/f**exponent`` amplitude spectrum."""
    rng = np.random.default_rng(seed)
    h, w = shape
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.rfftfreq(w)[None, :]
    f = np.hypot(fy, fx)
    f[0, 0] = 1.0
    spec = (rng.standard_normal(f.shape) + 1j * rng.standard_normal(f.shape)) / f ** exponent
    spec[0, 0] = 0.0
    field = np.fft.irfft2(spec, s=(h, w))
    return (field - field.mean()) / field.std()


def hdr_scene(shape=(256, 256), seed: int = 0, s_min: float = 0.78, s_max: float = 16200.0) -> LuminanceImage:
    """Log-distributed scene spanning exactly ``[s_min, s_max]``.

    Textured background plus a bright "window" and a deep shadow, so that
    detail exists at both ends of the range.
    """
    h, w = shape
    rng = np.random.default_rng(seed + 7919)
    logl = 0.35 * pink_noise(shape, seed)
    yy, xx = np.mgrid[0:h, 0:w]
    cy, cx = rng.uniform(0.2, 0.45) * h, rng.uniform(0.55, 0.8) * w
    window = (np.abs(yy - cy) < 0.15 * h) & (np.abs(xx - cx) < 0.12 * w)
    logl = logl + 1.6 * window
    shadow = np.exp(-(((yy - 0.75 * h) / (0.2 * h)) ** 2 + ((xx - 0.3 * w) / (0.25 * w)) ** 2))
    logl = logl - 1.4 * shadow
    t = (logl - logl.min()) / (logl.max() - logl.min())
    return LuminanceImage(s_min * (s_max / s_min) ** t)


def ldr_scene(shape=(64, 64), seed: int = 0) -> np.ndarray:
    """Smooth normalized image in [0, 1]."""
    f = pink_noise(shape, seed, exponent=1.2)
    return (f - f.min()) / (f.max() - f.min())
