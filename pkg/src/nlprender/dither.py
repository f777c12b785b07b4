"""Rendering with a discrete set of gray levels.

:func:`greedy_dither` starts from a continuous rendering and visits pixels in
raster order, giving each the level that minimizes NLPD of the intermediate
image (visited pixels discrete, the rest still continuous).
:func:`floyd_steinberg` is the classic error-diffusion baseline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import kernels, pyramid
from .core import LuminanceImage, affine_rescale, as_array
from .errors import ConfigurationError, DimensionError
from .metric import Nlpd, pool
from .optimizer import Box, OptimizerConfig, minimize
from .transform import FULL, AblationConfig, NlpParams

log = logging.getLogger(__name__)

AUTO_WINDOW_PIXELS = 128 * 128


def equally_spaced_levels(n: int, i_min: float, i_max: float) -> tuple:
    """``n`` luminances evenly spaced (in cd/m^2) from ``i_min`` to ``i_max``."""
    if n < 2:
        raise ConfigurationError(f"need at least 2 levels, got {n}")
    if not i_min < i_max:
        raise ConfigurationError(f"need i_min < i_max, got [{i_min}, {i_max}]")
    return tuple(float(v) for v in np.linspace(i_min, i_max, n))


@dataclass(frozen=True)
class DitherConfig:
    """Level set and evaluation mode.

    ``window_radius=None`` selects exact mode (full NLPD per candidate);
    otherwise only the pyramid coefficients within ``window_radius`` pixels
    of the visited pixel are recomputed.
    """

    levels: tuple
    window_radius: int | None = None

    def __post_init__(self):
        lv = tuple(float(v) for v in self.levels)
        if len(lv) < 2:
            raise ConfigurationError(f"need at least 2 levels, got {len(lv)}")
        if any(b <= a for a, b in zip(lv, lv[1:])):
            raise ConfigurationError(f"levels must be strictly increasing, got {lv}")
        if lv[0] < 0 or not np.isfinite(lv).all():
            raise ConfigurationError("levels must be finite nonnegative luminances")
        object.__setattr__(self, "levels", lv)
        if self.window_radius is not None and self.window_radius < 0:
            raise ConfigurationError(f"window_radius must be nonnegative, got {self.window_radius}")


# ---------------------------------------------------------------------------
# receptive fields


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _affected(p: int, dims: list[int], r: int, rp: int):
    """Per-level index intervals touched when level-0 sample ``p`` changes.

    Returns ``(x_iv, z_iv, y_iv)``: lists of inclusive ``(lo, hi)`` intervals
    for the Gaussian levels, the pyramid channels and the normalized channels.
    ``dims`` are the level lengths along this axis; pass huge values to get
    unclipped intervals.
    """
    n_lev = len(dims)
    x_iv = [(p, p)]
    for k in range(1, n_lev):
        a, b = x_iv[-1]
        lo = max(0, _ceil_div(a - r, 2))
        hi = min(dims[k] - 1, (b + r) // 2)
        x_iv.append((lo, hi))
    z_iv, y_iv = [], []
    for k in range(n_lev - 1):
        a, b = x_iv[k]
        a2, b2 = x_iv[k + 1]
        lo = max(0, min(a, 2 * a2 - r))
        hi = min(dims[k] - 1, max(b, 2 * b2 + r))
        z_iv.append((lo, hi))
        y_iv.append((max(0, lo - rp), min(dims[k] - 1, hi + rp)))
    z_iv.append(x_iv[-1])
    y_iv.append(x_iv[-1])
    return x_iv, z_iv, y_iv


def receptive_field_radius(n_levels: int, filter_radius: int = 2, norm_radius: int = 2) -> int:
    """Smallest window radius (level-0 pixels) containing every normalized
    coefficient that a single pixel can influence."""
    big = 1 << 40
    period = 1 << max(n_levels - 1, 0)
    base = 1 << 30
    dims = [big >> k for k in range(n_levels)]
    radius = 0
    for p in range(base, base + period):
        _, _, y_iv = _affected(p, dims, filter_radius, norm_radius)
        for k, (lo, hi) in enumerate(y_iv):
            radius = max(radius, p - (lo << k), (hi << k) - p)
    return radius


# ---------------------------------------------------------------------------
# incremental NLP state


class _LocalEvaluator:
    """Keeps every pyramid/normalization level of the intermediate image and
    re-evaluates NLPD after a single-pixel change by recomputing only the
    affected rectangles (truncated to the window)."""

    def __init__(self, objective: Nlpd, image: np.ndarray, window_radius: int):
        cfg = objective.cfg
        self.cfg = cfg
        self.radius = window_radius
        self.image = image
        self.n_lev = cfg.n_levels
        self.taps = cfg.taps
        self.r = len(cfg.taps) // 2
        self.kern = np.ascontiguousarray(np.flip(cfg.p_band))
        self.rp = cfg.p_band.shape[0] // 2
        self.shapes = pyramid.level_shapes(image.shape, self.n_lev)
        self.red = [
            (kernels.reduce_op(h, self.taps), kernels.reduce_op(w, self.taps)) for h, w in self.shapes[:-1]
        ]
        self.exp = [
            (kernels.expand_op(h, self.taps), kernels.expand_op(w, self.taps)) for h, w in self.shapes[:-1]
        ]
        self.target = objective.ref_state.channels
        self.counts = np.array([c.size for c in self.target], dtype=np.float64)
        self.refresh()

    def refresh(self) -> None:
        """Recompute all levels and channel sums from ``self.image``."""
        cfg = self.cfg
        self.x = pyramid.gaussian_levels(self.image ** cfg.gamma, self.n_lev, self.taps)
        self.z = [
            self.x[k] - pyramid.expand(self.x[k + 1], self.shapes[k], self.taps) for k in range(self.n_lev - 1)
        ]
        self.z.append(self.x[-1])
        self.absz = [np.abs(z) for z in self.z]
        self.y = []
        for k in range(self.n_lev):
            if k < self.n_lev - 1:
                den = cfg.sigma_band + kernels.window_apply(self.absz[k], self.kern)
            else:
                den = cfg.sigma_low + cfg.p_low * self.absz[k]
            self.y.append(self.z[k] / den)
        self.sums = np.array(
            [np.sum(np.abs(y - t) ** cfg.alpha) for y, t in zip(self.y, self.target)]
        )

    def _window(self, p: int, k: int, n: int):
        lo = max(0, _ceil_div(p - self.radius, 1 << k))
        hi = min(n - 1, (p + self.radius) >> k)
        return lo, hi

    def _regions(self, i: int, j: int):
        rows_dims = [s[0] for s in self.shapes]
        cols_dims = [s[1] for s in self.shapes]
        rx, rz, ry = _affected(i, rows_dims, self.r, self.rp)
        cx, cz, cy = _affected(j, cols_dims, self.r, self.rp)

        def clip(ivs, p, dims):
            out = []
            for k, (lo, hi) in enumerate(ivs):
                wlo, whi = self._window(p, k, dims[k])
                out.append((max(lo, wlo), min(hi, whi) + 1))
            return out

        return (
            list(zip(clip(rx, i, rows_dims), clip(cx, j, cols_dims))),
            list(zip(clip(rz, i, rows_dims), clip(cz, j, cols_dims))),
            list(zip(clip(ry, i, rows_dims), clip(cy, j, cols_dims))),
        )

    def old_partials(self, regions) -> np.ndarray:
        _, _, yreg = regions
        alpha = self.cfg.alpha
        out = np.zeros(self.n_lev)
        for k, ((r0, r1), (c0, c1)) in enumerate(yreg):
            if r1 > r0 and c1 > c0:
                out[k] = np.sum(np.abs(self.y[k][r0:r1, c0:c1] - self.target[k][r0:r1, c0:c1]) ** alpha)
        return out

    def apply(self, i: int, j: int, value: float, regions) -> np.ndarray:
        """Set pixel ``(i, j)`` to ``value``, update the affected regions and
        return the new partial sums over the normalized regions."""
        cfg = self.cfg
        xreg, zreg, yreg = regions
        self.image[i, j] = value
        self.x[0][i, j] = value ** cfg.gamma
        for k in range(1, self.n_lev):
            (r0, r1), (c0, c1) = xreg[k]
            if r1 > r0 and c1 > c0:
                op_r, op_c = self.red[k - 1]
                self.x[k][r0:r1, c0:c1] = kernels.sep_apply(self.x[k - 1], op_r, op_c, (r0, r1), (c0, c1))
        for k in range(self.n_lev - 1):
            (r0, r1), (c0, c1) = zreg[k]
            if r1 > r0 and c1 > c0:
                op_r, op_c = self.exp[k]
                up = kernels.sep_apply(self.x[k + 1], op_r, op_c, (r0, r1), (c0, c1))
                self.z[k][r0:r1, c0:c1] = self.x[k][r0:r1, c0:c1] - up
                self.absz[k][r0:r1, c0:c1] = np.abs(self.z[k][r0:r1, c0:c1])
        (r0, r1), (c0, c1) = zreg[-1]
        self.absz[-1][r0:r1, c0:c1] = np.abs(self.z[-1][r0:r1, c0:c1])
        alpha = cfg.alpha
        out = np.zeros(self.n_lev)
        for k, ((r0, r1), (c0, c1)) in enumerate(yreg):
            if not (r1 > r0 and c1 > c0):
                continue
            zk = self.z[k][r0:r1, c0:c1]
            if k < self.n_lev - 1:
                den = cfg.sigma_band + kernels.window_apply(self.absz[k], self.kern, (r0, r1), (c0, c1))
            else:
                den = cfg.sigma_low + cfg.p_low * self.absz[k][r0:r1, c0:c1]
            yk = zk / den
            self.y[k][r0:r1, c0:c1] = yk
            out[k] = np.sum(np.abs(yk - self.target[k][r0:r1, c0:c1]) ** alpha)
        return out

    def total(self, sums: np.ndarray) -> float:
        return pool(sums / self.counts, self.cfg.alpha, self.cfg.beta)


# ---------------------------------------------------------------------------
# public API


def greedy_dither(
    scene,
    cfg: DitherConfig,
    params: NlpParams | None = None,
    continuous_init=None,
    ablate: AblationConfig = FULL,
    opt_cfg: OptimizerConfig | None = None,
) -> LuminanceImage:
    """Greedy raster-scan NLPD minimization over a discrete level set.

    Parameters
    ----------
    scene
        Scene luminances.
    cfg
        Level set and evaluation mode.
    continuous_init
        Continuous rendering to start from. Defaults to the optimizer's
        solution under ``Box(levels[0], levels[-1])``.

    Returns
    -------
    LuminanceImage
        Every pixel is exactly one of ``cfg.levels``.
    """
    scene = as_array(scene)
    levels = np.asarray(cfg.levels)
    objective = Nlpd(scene, params, ablate)
    if continuous_init is None:
        continuous_init, _ = minimize(scene, Box(levels[0], levels[-1]), params, opt_cfg, ablate=ablate)
    img = np.clip(as_array(continuous_init), levels[0], levels[-1]).copy()
    if img.shape != scene.shape:
        raise DimensionError(f"init shape {img.shape} differs from scene shape {scene.shape}")

    if cfg.window_radius is None:
        return LuminanceImage(_greedy_exact(objective, img, levels))

    needed = receptive_field_radius(objective.cfg.n_levels, len(objective.cfg.taps) // 2,
                                    objective.cfg.p_band.shape[0] // 2)
    if cfg.window_radius < needed:
        raise ConfigurationError(
            f"window_radius {cfg.window_radius} is below the receptive field radius {needed} "
            f"for {objective.cfg.n_levels} pyramid levels"
        )
    return LuminanceImage(_greedy_windowed(objective, img, levels, cfg.window_radius))


def _greedy_exact(objective: Nlpd, img: np.ndarray, levels: np.ndarray) -> np.ndarray:
    h, w = img.shape
    for i in range(h):
        for j in range(w):
            best_v, best_d = levels[0], np.inf
            for v in levels:
                img[i, j] = v
                d = objective(img)
                if d < best_d:
                    best_v, best_d = v, d
            img[i, j] = best_v
    return img


def _greedy_windowed(objective: Nlpd, img: np.ndarray, levels: np.ndarray, radius: int) -> np.ndarray:
    ev = _LocalEvaluator(objective, img, radius)
    h, w = img.shape
    for i in range(h):
        for j in range(w):
            regions = ev._regions(i, j)
            old = ev.old_partials(regions)
            best_v, best_d, best_sums = levels[0], np.inf, None
            for v in levels:
                sums = ev.sums - old + ev.apply(i, j, v, regions)
                d = ev.total(sums)
                if d < best_d:
                    best_v, best_d, best_sums = v, d, sums
            if best_v != levels[-1]:
                ev.apply(i, j, best_v, regions)
            ev.sums = best_sums
        # drop accumulated rounding in the running sums
        ev.refresh()
    return ev.image


def floyd_steinberg(scene, levels) -> LuminanceImage:
    """Error diffusion baseline on the scene rescaled into the level range."""
    lv = np.asarray(DitherConfig(tuple(levels)).levels)
    base = affine_rescale(scene, lv[0], lv[-1]).data
    return LuminanceImage(kernels.floyd_steinberg_kernel(base, lv))
