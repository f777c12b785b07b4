import os
import subprocess
import sys

import numpy as np
import pytest

from nlprender.core import LuminanceImage

NATURAL = ("camera", "moon", "coins", "text", "page", "brick", "grass", "gravel")


def _gray(name):
    from skimage import data

    img = getattr(data, name)()
    if img.ndim == 3:
        img = img[..., :3] @ np.array([0.2126, 0.7152, 0.0722])
    return img.astype(np.float64)


def _fit(img, shape):
    """Block-average then center-crop to ``shape``."""
    h, w = shape
    f = max(1, min(img.shape[0] // h, img.shape[1] // w))
    hh, ww = img.shape[0] // f * f, img.shape[1] // f * f
    img = img[:hh, :ww].reshape(hh // f, f, ww // f, f).mean(axis=(1, 3))
    y0 = (img.shape[0] - h) // 2
    x0 = (img.shape[1] - w) // 2
    return img[y0 : y0 + h, x0 : x0 + w]


def natural_images(shape=(64, 64), count=5):
    """Grayscale test photographs scaled to [0, 1]."""
    out = []
    for name in NATURAL[:count]:
        img = _fit(_gray(name), shape)
        out.append((img - img.min()) / (img.max() - img.min()))
    return out


def natural_hdr(shape=(64, 64), count=3, s_min=0.78, s_max=16200.0):
    """Photographs stretched log-linearly over an HDR luminance range."""
    return [LuminanceImage(s_min * (s_max / s_min) ** t) for t in natural_images(shape, count)]


def display_images(shape=(64, 64), count=5, i_min=5.0, i_max=300.0):
    return [LuminanceImage(i_min + (i_max - i_min) * t ** 2.2) for t in natural_images(shape, count)]


def run_cli(*args, cwd=None, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "nlprender", *map(str, args)],
        capture_output=True,
        cwd=cwd,
        env=env,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
