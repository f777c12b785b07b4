"""NLPD: distance between NLP representations and its gradient.

Within a channel the coefficient differences are pooled with an L_alpha
mean; channel values are pooled with an L_beta mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, pyramid
from .core import as_array
from .errors import DimensionError, DomainError
from .transform import FULL, AblationConfig, ForwardState, NlpParams, forward, resolve

EPS_GRAD = 1e-6


@dataclass
class DistanceBreakdown:
    total: float
    per_channel: list

    def to_dict(self) -> dict:
        return {"total": self.total, "per_channel": list(self.per_channel)}


def _check_pair(ref, img):
    a, b = as_array(ref), as_array(img)
    if a.shape != b.shape:
        raise DimensionError(f"image shapes differ: {a.shape} vs {b.shape}")
    for name, arr in (("reference", a), ("rendered", b)):
        if arr.ndim != 2 or not np.isfinite(arr).all() or (arr < 0).any():
            raise DomainError(f"{name} image must be a 2-D grid of finite nonnegative luminances")
    return a, b


def _channel_means(ref_channels, img_channels, alpha):
    return np.array([np.mean(np.abs(yt - y) ** alpha) for y, yt in zip(ref_channels, img_channels)])


def pool(means: np.ndarray, alpha: float, beta: float) -> float:
    """Combine per-channel mean powered differences into the distance."""
    return float(np.mean(means ** (beta / alpha)) ** (1.0 / beta))


class Nlpd:
    """NLPD against a fixed reference scene, caching the reference transform.

    Parameters
    ----------
    reference
        Scene luminances ``S``.
    params, ablate
        Transform constants and ablation switches.
    """

    def __init__(self, reference, params: NlpParams | None = None, ablate: AblationConfig = FULL):
        self.params = NlpParams() if params is None else params
        self.ablate = ablate
        ref = as_array(reference)
        _check_pair(ref, ref)
        self.reference = ref
        self.cfg = resolve(self.params, ablate, ref.shape)
        self.ref_state = forward(ref, self.cfg)

    @property
    def shape(self):
        return self.reference.shape

    def breakdown(self, img) -> DistanceBreakdown:
        _, img = _check_pair(self.reference, img)
        st = forward(img, self.cfg)
        means = _channel_means(self.ref_state.channels, st.channels, self.cfg.alpha)
        return DistanceBreakdown(
            pool(means, self.cfg.alpha, self.cfg.beta),
            [float(m ** (1.0 / self.cfg.alpha)) for m in means],
        )

    def __call__(self, img) -> float:
        return self.breakdown(img).total

    def value_and_grad(self, img) -> tuple[float, np.ndarray]:
        """Distance and its gradient with respect to the rendered image."""
        _, img = _check_pair(self.reference, img)
        st = forward(img, self.cfg)
        means = _channel_means(self.ref_state.channels, st.channels, self.cfg.alpha)
        total = pool(means, self.cfg.alpha, self.cfg.beta)
        return total, _backward(self.ref_state, st, means, total)


def _backward(ref: ForwardState, st: ForwardState, means, total) -> np.ndarray:
    cfg = st.cfg
    alpha, beta = cfg.alpha, cfg.beta
    if total == 0.0:
        return np.zeros_like(st.lum)
    n_ch = len(st.channels)
    grads = []
    for k, (y, yt, z, den) in enumerate(zip(ref.channels, st.channels, st.bands, st.dens)):
        if means[k] == 0.0:
            grads.append(np.zeros_like(z))
            continue
        diff = yt - y
        coef = total ** (1.0 - beta) / n_ch * means[k] ** (beta / alpha - 1.0) / diff.size
        if alpha == 2.0:
            g_y = coef * diff
        else:
            g_y = coef * np.abs(diff) ** (alpha - 1.0) * np.sign(diff)
        # normalization Jacobian transpose; sgn(0) = 0
        if k < n_ch - 1:
            kern = np.ascontiguousarray(np.flip(cfg.p_band))
            back = kernels.window_adjoint(g_y * z / den ** 2, kern)
        else:
            back = cfg.p_low * g_y * z / den ** 2
        grads.append(g_y / den - np.sign(z) * back)
    g_x = pyramid.build_adjoint(grads[:-1], grads[-1], cfg.taps)
    if cfg.gamma == 1.0:
        return g_x
    base = np.maximum(st.lum, EPS_GRAD) if cfg.gamma < 1.0 else st.lum
    return g_x * cfg.gamma * base ** (cfg.gamma - 1.0)


def distance(ref, img, params: NlpParams | None = None, ablate: AblationConfig = FULL) -> DistanceBreakdown:
    """NLPD between scene ``ref`` and rendered ``img``."""
    ref, img = _check_pair(ref, img)
    return Nlpd(ref, params, ablate).breakdown(img)


def gradient(ref, img, params: NlpParams | None = None, ablate: AblationConfig = FULL) -> np.ndarray:
    """Gradient of NLPD with respect to ``img`` (units 1/(cd/m^2))."""
    ref, img = _check_pair(ref, img)
    return Nlpd(ref, params, ablate).value_and_grad(img)[1]
