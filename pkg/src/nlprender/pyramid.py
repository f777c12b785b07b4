"""Laplacian pyramid with mirror boundaries and ceil-halving decimation.

Level ``k + 1`` keeps the even-indexed samples of the blurred level ``k``.
Expansion zero-stuffs back to the parent shape and blurs with the taps
doubled per axis, so a constant image has identically zero bandpass levels.
Reconstruction is exact by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, DimensionError

L_TAPS = (0.05, 0.25, 0.4, 0.25, 0.05)
MAX_DEFAULT_LEVELS = 6


@dataclass(frozen=True)
class FilterKernel:
    taps: tuple = L_TAPS

    def __post_init__(self):
        taps = tuple(float(t) for t in self.taps)
        if len(taps) % 2 != 1:
            raise ConfigurationError(f"filter must have odd length, got {len(taps)}")
        if not all(math.isfinite(t) for t in taps):
            raise ConfigurationError("filter taps must be finite")
        object.__setattr__(self, "taps", taps)

    @property
    def radius(self) -> int:
        return len(self.taps) // 2


def _taps(kernel) -> tuple:
    if kernel is None:
        return L_TAPS
    if isinstance(kernel, FilterKernel):
        return kernel.taps
    return FilterKernel(tuple(kernel)).taps


@dataclass
class PyramidStack:
    """Bandpass levels (finest first) plus the lowpass residual.

    ``level_dims`` holds ``(width, height)`` for every level, finest first.
    """

    bands: list
    lowpass: np.ndarray
    level_dims: list

    @property
    def n_levels(self) -> int:
        return len(self.bands) + 1

    @property
    def channels(self) -> list:
        return [*self.bands, self.lowpass]


def halve(n: int) -> int:
    return (n + 1) // 2


def level_shapes(shape: tuple[int, int], n_levels: int) -> list[tuple[int, int]]:
    """Array shapes ``(height, width)`` of every pyramid level."""
    shapes = [tuple(shape)]
    for _ in range(n_levels - 1):
        h, w = shapes[-1]
        shapes.append((halve(h), halve(w)))
    return shapes


def max_levels(shape: tuple[int, int]) -> int:
    """Largest level count with ``min(shape) >= 2 ** (n_levels - 1)``."""
    return int(math.floor(math.log2(min(shape)))) + 1


def default_n_levels(shape: tuple[int, int]) -> int:
    """Level count leaving the coarsest level at least 8 px, capped at 6."""
    return min(MAX_DEFAULT_LEVELS, max(1, int(math.floor(math.log2(min(shape)))) - 2))


def check_levels(shape: tuple[int, int], n_levels: int) -> None:
    if n_levels < 1:
        raise DimensionError(f"n_levels must be >= 1, got {n_levels}")
    if min(shape) < 2 ** (n_levels - 1):
        raise DimensionError(
            f"image of shape {tuple(shape)} too small for {n_levels} levels "
            f"(needs min side >= {2 ** (n_levels - 1)})"
        )


def downsample(x: np.ndarray) -> np.ndarray:
    """Keep even-indexed rows and columns."""
    return np.ascontiguousarray(np.asarray(x)[::2, ::2])


def upsample(x: np.ndarray, target_shape: tuple[int, int]) -> np.ndarray:
    """Zero-stuff ``x`` onto the even indices of a ``target_shape`` grid."""
    x = np.asarray(x, dtype=np.float64)
    th, tw = target_shape
    if x.shape != (halve(th), halve(tw)):
        raise DimensionError(f"cannot upsample {x.shape} to {tuple(target_shape)}")
    out = np.zeros((th, tw))
    out[::2, ::2] = x
    return out


def filter_separable(x: np.ndarray, kernel=None) -> np.ndarray:
    """Correlate rows, then columns, with ``kernel`` under mirror boundaries."""
    taps = _taps(kernel)
    x = np.asarray(x, dtype=np.float64)
    h, w = x.shape
    return kernels.sep_apply(x, kernels.filter_op(h, taps), kernels.filter_op(w, taps))


def reduce(x: np.ndarray, taps=L_TAPS) -> np.ndarray:
    """Blur then downsample: one step down the Gaussian pyramid."""
    h, w = x.shape
    return kernels.sep_apply(x, kernels.reduce_op(h, taps), kernels.reduce_op(w, taps))


def expand(x: np.ndarray, shape: tuple[int, int], taps=L_TAPS) -> np.ndarray:
    """Upsample to ``shape`` then blur with doubled taps."""
    h, w = shape
    if x.shape != (halve(h), halve(w)):
        raise DimensionError(f"cannot expand {x.shape} to {tuple(shape)}")
    return kernels.sep_apply(x, kernels.expand_op(h, taps), kernels.expand_op(w, taps))


def gaussian_levels(x: np.ndarray, n_levels: int, taps=L_TAPS) -> list[np.ndarray]:
    levels = [x]
    for _ in range(n_levels - 1):
        levels.append(reduce(levels[-1], taps))
    return levels


def build(x, n_levels: int, kernel=None) -> PyramidStack:
    """Decompose ``x`` into ``n_levels - 1`` bandpass levels and a lowpass."""
    taps = _taps(kernel)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"expected a 2-D grid, got shape {x.shape}")
    check_levels(x.shape, n_levels)
    gauss = gaussian_levels(x, n_levels, taps)
    bands = [g - expand(gn, g.shape, taps) for g, gn in zip(gauss[:-1], gauss[1:])]
    dims = [(g.shape[1], g.shape[0]) for g in gauss]
    return PyramidStack(bands, gauss[-1], dims)


def collapse(p: PyramidStack, kernel=None) -> np.ndarray:
    """Invert :func:`build`."""
    taps = _taps(kernel)
    shapes = [(h, w) for w, h in p.level_dims]
    if len(shapes) != p.n_levels:
        raise DimensionError(f"{len(shapes)} level dims for {p.n_levels} channels")
    for k, c in enumerate(p.channels):
        if c.shape != shapes[k]:
            raise DimensionError(f"level {k} has shape {c.shape}, expected {shapes[k]}")
        if k and shapes[k] != (halve(shapes[k - 1][0]), halve(shapes[k - 1][1])):
            raise DimensionError(f"level {k} dims break the ceil-halving law")
    x = np.asarray(p.lowpass, dtype=np.float64)
    for band in reversed(p.bands):
        x = band + expand(x, band.shape, taps)
    return x


def build_adjoint(band_grads, lowpass_grad, kernel=None) -> np.ndarray:
    """Transpose of the linear map ``x -> (bands, lowpass)``.

    Given gradients with respect to every channel, returns the gradient with
    respect to the input image.
    """
    taps = _taps(kernel)
    acc = np.asarray(lowpass_grad, dtype=np.float64)
    for g_band in reversed(band_grads):
        h, w = g_band.shape
        # band = x_k - expand(x_{k+1}); x_{k+1} = reduce(x_k)
        acc = acc - kernels.sep_adjoint(g_band, kernels.expand_op(h, taps), kernels.expand_op(w, taps))
        acc = g_band + kernels.sep_adjoint(acc, kernels.reduce_op(h, taps), kernels.reduce_op(w, taps))
    return acc
