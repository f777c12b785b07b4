import numpy as np
import pytest

from nlprender.errors import DimensionError, DomainError
from nlprender.metric import Nlpd, distance, gradient, pool
from nlprender.tasks import ABLATIONS
from nlprender.transform import FULL

import oracle
from fdcheck import fd_check, random_pair


def test_identical_is_zero():
    S = np.random.default_rng(0).uniform(5, 300, (16, 16))
    b = distance(S, S)
    assert b.total == 0.0 and all(c == 0.0 for c in b.per_channel)
    assert (gradient(S, S) == 0).all()


def test_symmetry_and_nonnegativity():
    rng = np.random.default_rng(1)
    for _ in range(20):
        S, I = random_pair(rng, (16, 16))
        a, b = distance(S, I).total, distance(I, S).total
        assert a > 0 and abs(a - b) <= 1e-12 * a


@pytest.mark.parametrize("shape", [(16, 16), (13, 21)])
def test_matches_straight_line_oracle(shape):
    rng = np.random.default_rng(2)
    S, I = random_pair(rng, shape, 0.5, 2000)
    assert distance(S, I).total == pytest.approx(oracle.nlpd(S, I), rel=1e-10)


def test_breakdown_consistent():
    rng = np.random.default_rng(3)
    S, I = random_pair(rng, (32, 32))
    b = distance(S, I)
    per = np.asarray(b.per_channel)
    assert len(per) == 3
    assert b.total == pytest.approx(pool(per ** 2, 2.0, 0.6), rel=1e-14)
    assert b.to_dict()["total"] == b.total


def test_scale_not_invariant():
    S = np.random.default_rng(4).uniform(5, 300, (16, 16))
    assert distance(S, 2 * S).total > 0


def test_errors():
    with pytest.raises(DimensionError):
        distance(np.ones((4, 4)), np.ones((4, 5)))
    with pytest.raises(DomainError):
        distance(np.ones((4, 4)), -np.ones((4, 4)))


@pytest.mark.parametrize("name", list(ABLATIONS))
def test_gradient_matches_small_step_fd(name):
    """Away from |z| kinks a small central step must agree tightly."""
    rng = np.random.default_rng(5)
    S, I = random_pair(rng, (16, 16))
    rep = fd_check(S, I, ABLATIONS[name], rel_step=1e-5, tol=1e-4, skip_kinks=True)
    assert rep.n_checked >= 200
    assert rep.max_rel < 1e-4, rep


def test_gradient_descent_direction():
    rng = np.random.default_rng(6)
    for _ in range(3):
        S, I = random_pair(rng, (24, 24))
        obj = Nlpd(S)
        d0, g = obj.value_and_grad(I)
        for t in (1e-3, 1e-4):
            step = t * 300 / np.abs(g).max()
            assert obj(I - step * g) < d0


def test_constant_shift_gradient_translation_invariant():
    """For S and S + c with S constant, interior gradient is constant."""
    S = np.full((32, 32), 50.0)
    g = gradient(S, S + 10.0)
    interior = g[12:20, 12:20]
    assert np.ptp(interior) <= 1e-8 * max(np.abs(interior).max(), 1e-300) + 1e-15
    assert np.abs(g).max() > 0


def test_zero_pixel_clamped():
    S = np.random.default_rng(7).uniform(5, 300, (16, 16))
    I = S.copy()
    I[3, 3] = 0.0
    assert np.isfinite(gradient(S, I)).all()


def test_nlpd_cache_matches_function():
    rng = np.random.default_rng(8)
    S, I = random_pair(rng, (16, 16))
    obj = Nlpd(S, ablate=FULL)
    assert obj(I) == distance(S, I).total
    np.testing.assert_array_equal(obj.value_and_grad(I)[1], gradient(S, I))
