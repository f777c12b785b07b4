import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlprender import pyramid
from nlprender.errors import ConfigurationError, DimensionError
from nlprender.pyramid import PyramidStack, build, build_adjoint, collapse

import oracle


def test_filter_kernel_invariants():
    assert sum(pyramid.L_TAPS) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ConfigurationError):
        pyramid.FilterKernel((0.5, 0.5))


def test_downsample_even_indices():
    x = np.arange(5.0)[None, :]
    assert pyramid.downsample(x).tolist() == [[0.0, 2.0, 4.0]]


def test_upsample_zero_stuff():
    out = pyramid.upsample(np.array([[1.0, 2.0]]), (1, 4))
    assert out.tolist() == [[1.0, 0.0, 2.0, 0.0]]
    with pytest.raises(DimensionError):
        pyramid.upsample(np.ones((1, 2)), (1, 5))


def test_filter_constant():
    out = pyramid.filter_separable(np.full((7, 4), 3.25))
    np.testing.assert_allclose(out, 3.25, rtol=1e-15)


def test_level_law():
    for shape in [(31, 47), (64, 64), (257, 129), (9, 5)]:
        n = pyramid.default_n_levels(shape)
        p = build(np.zeros(shape), n)
        dims = [(w, h) for w, h in p.level_dims]
        for (w0, h0), (w1, h1) in zip(dims, dims[1:]):
            assert (w1, h1) == ((w0 + 1) // 2, (h0 + 1) // 2)
        assert p.n_levels == n == len(p.channels)


def test_default_levels():
    assert pyramid.default_n_levels((4, 4)) == 1
    assert pyramid.default_n_levels((32, 32)) == 3
    assert pyramid.default_n_levels((256, 256)) == 6
    assert pyramid.default_n_levels((4096, 4096)) == 6


def test_too_many_levels():
    with pytest.raises(DimensionError):
        build(np.zeros((7, 20)), 4)
    build(np.zeros((8, 20)), 4)


def test_single_level():
    x = np.random.default_rng(0).random((5, 6))
    p = build(x, 1)
    assert p.bands == [] and np.array_equal(p.lowpass, x)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_constant_image(n):
    p = build(np.full((16, 12), 7.5), n)
    for band in p.bands:
        assert np.abs(band).max() <= 1e-12
    np.testing.assert_allclose(p.lowpass, 7.5, rtol=1e-14)


def test_impulse_matches_dense_oracle():
    x = np.zeros((8, 8))
    x[3, 3] = 1.0
    p = build(x, 2)
    bands, low = oracle.laplacian(x, 2)
    np.testing.assert_allclose(p.bands[0], bands[0], atol=1e-15)
    np.testing.assert_allclose(p.lowpass, low, atol=1e-15)
    np.testing.assert_allclose(collapse(p), x, atol=1e-14)


@pytest.mark.parametrize("shape,n", [((11, 7), 3), ((16, 16), 4), ((9, 13), 2)])
def test_random_matches_oracle(shape, n):
    x = np.random.default_rng(1).random(shape)
    p = build(x, n)
    bands, low = oracle.laplacian(x, n)
    for a, b in zip(p.bands, bands):
        np.testing.assert_allclose(a, b, atol=1e-13)
    np.testing.assert_allclose(p.lowpass, low, atol=1e-13)


def test_collapse_zero_bands():
    shapes = pyramid.level_shapes((10, 6), 3)
    stack = PyramidStack(
        [np.zeros(s) for s in shapes[:-1]], np.full(shapes[-1], 2.0), [(w, h) for h, w in shapes]
    )
    np.testing.assert_allclose(collapse(stack), 2.0, rtol=1e-14)


def test_collapse_bad_dims():
    p = build(np.zeros((8, 8)), 3)
    bad = PyramidStack(p.bands, np.zeros((3, 3)), p.level_dims)
    with pytest.raises(DimensionError):
        collapse(bad)


def test_reconstruction_sizes():
    rng = np.random.default_rng(2)
    for shape in [(31, 47), (64, 64), (257, 129), (2, 3), (1, 1)]:
        x = rng.random(shape)
        n = pyramid.max_levels(shape)
        rec = collapse(build(x, n))
        assert np.linalg.norm(rec - x) <= 1e-10 * np.linalg.norm(x)


def test_linearity():
    rng = np.random.default_rng(3)
    x, y = rng.random((20, 24)), rng.random((20, 24))
    a, b = 1.7, -0.3
    pz = build(a * x + b * y, 3)
    px, py = build(x, 3), build(y, 3)
    for cz, cx, cy in zip(pz.channels, px.channels, py.channels):
        np.testing.assert_allclose(cz, a * cx + b * cy, rtol=1e-12, atol=1e-12)


def test_adjoint_dot_product():
    rng = np.random.default_rng(4)
    for shape in [(13, 9), (32, 32), (17, 40)]:
        n = pyramid.default_n_levels(shape) + 1
        x = rng.standard_normal(shape)
        p = build(x, n)
        gs = [rng.standard_normal(c.shape) for c in p.channels]
        lhs = sum(float((c * g).sum()) for c, g in zip(p.channels, gs))
        rhs = float((x * build_adjoint(gs[:-1], gs[-1])).sum())
        assert lhs == pytest.approx(rhs, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_reconstruction_property(h, w, seed):
    x = np.random.default_rng(seed).standard_normal((h, w))
    n = pyramid.max_levels((h, w))
    rec = collapse(build(x, n))
    assert np.abs(rec - x).max() <= 1e-10 * max(1.0, np.abs(x).max())
