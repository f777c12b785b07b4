import json

import numpy as np
import pytest

from nlprender import optimizer
from nlprender.errors import ConfigurationError, DimensionError, NumericalError
from nlprender.metric import Nlpd
from nlprender.optimizer import (
    Box,
    BoxMean,
    DiscreteLevels,
    OptimizerConfig,
    load_optimizer_config,
    minimize,
    project_box,
    project_box_mean,
)

from conftest import display_images, natural_hdr


def random_feasible_box_mean(rng, shape, lo, hi, mean, n):
    """Feasible points y' = mean + t (y - mean(y)) with t as large as fits."""
    out = []
    for _ in range(n):
        y = rng.uniform(lo, hi, shape)
        d = y - y.mean()
        with np.errstate(divide="ignore"):
            t_hi = np.where(d > 0, (hi - mean) / d, np.inf).min()
            t_lo = np.where(d < 0, (lo - mean) / d, np.inf).min()
        t = min(t_hi, t_lo, 1.0) * rng.uniform(0, 1)
        out.append(mean + t * d)
    return out


class TestProjections:
    def test_box_examples(self):
        assert project_box(np.array([0.0, 10.0]), 2, 5).tolist() == [2.0, 5.0]
        x = np.array([[2.5, 4.0]])
        np.testing.assert_array_equal(project_box(x, 2, 5), x)
        with pytest.raises(ConfigurationError):
            project_box(x, 5, 2)

    def test_box_mean_examples(self):
        np.testing.assert_allclose(project_box_mean(np.array([1.0, 1.0]), 0, 4, 2), [2, 2], atol=1e-9)
        np.testing.assert_allclose(project_box_mean(np.array([0.0, 10.0]), 0, 4, 3), [2, 4], atol=1e-9)
        x = np.array([1.0, 3.0])
        np.testing.assert_array_equal(project_box_mean(x, 0, 4, 2), x)
        with pytest.raises(ConfigurationError):
            project_box_mean(x, 0, 4, 5)

    def test_box_mean_extremes(self):
        x = np.random.default_rng(0).normal(size=(8, 8))
        assert (project_box_mean(x, 0, 4, 0) == 0).all()
        assert (project_box_mean(x, 0, 4, 4) == 4).all()

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        x = rng.normal(100, 200, (10, 10))
        p = project_box(x, 5, 300)
        np.testing.assert_array_equal(project_box(p, 5, 300), p)
        q = project_box_mean(x, 5, 300, 80)
        assert abs(q.mean() - 80) <= 1e-6 * 295
        np.testing.assert_array_equal(project_box_mean(q, 5, 300, 80), q)

    def test_random_feasible_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            x = rng.normal(150, 200, (6, 6))
            p = project_box(x, 5, 300)
            for y in rng.uniform(5, 300, (100, 6, 6)):
                assert np.linalg.norm(p - x) <= np.linalg.norm(y - x)
            q = project_box_mean(x, 5, 300, 120)
            for y in random_feasible_box_mean(rng, x.shape, 5, 300, 120, 100):
                assert np.linalg.norm(q - x) <= np.linalg.norm(y - x) + 1e-9


class TestConstraints:
    def test_validation(self):
        with pytest.raises(ConfigurationError):
            Box(3, 3)
        with pytest.raises(ConfigurationError):
            BoxMean(0, 1, 2)
        with pytest.raises(ConfigurationError):
            DiscreteLevels(())
        with pytest.raises(ConfigurationError):
            DiscreteLevels((5, 5))
        assert DiscreteLevels([5, 300]).levels == (5.0, 300.0)

    def test_config(self, tmp_path):
        with pytest.raises(ConfigurationError):
            OptimizerConfig(max_iters=0)
        with pytest.raises(ConfigurationError):
            OptimizerConfig(beta1=1.0)
        with pytest.raises(ConfigurationError):
            OptimizerConfig.from_dict({"lr": 1})
        assert OptimizerConfig().step_for(5, 300) == pytest.approx(0.1 * 295 / 300)
        (tmp_path / "o.json").write_text(json.dumps({"max_iters": 7, "step_size": 0.5}))
        cfg = load_optimizer_config(tmp_path / "o.json")
        assert (cfg.max_iters, cfg.step_size) == (7, 0.5)


class TestMinimize:
    def test_feasible_scene_is_optimum(self):
        S = display_images((32, 32), 1)[0]
        img, trace = minimize(S, Box(5, 300), init=S, cfg=OptimizerConfig(max_iters=5))
        assert trace.final_distance <= 1e-6
        assert Nlpd(S)(img) <= 1e-6

    def test_hdr_box(self):
        S = natural_hdr((32, 32), 1)[0]
        img, trace = minimize(S, Box(5, 300), cfg=OptimizerConfig(max_iters=150))
        assert img.data.min() >= 5 and img.data.max() <= 300
        assert trace.final_distance < trace.iterations[0][1]
        assert trace.final_distance == pytest.approx(Nlpd(S)(img), rel=1e-12)
        assert trace.final_distance == min(trace.distances)

    def test_box_mean(self):
        S = natural_hdr((32, 32), 1)[0]
        img, trace = minimize(S, BoxMean(5, 300, 40), cfg=OptimizerConfig(max_iters=80))
        assert img.data.min() >= 5 and img.data.max() <= 300
        assert abs(img.data.mean() - 40) <= 1e-3 * 40
        assert all(abs(m - 40) <= 1e-6 * 295 for _, _, m in trace.iterations)

    def test_deterministic(self):
        S = natural_hdr((32, 32), 1)[0]
        a, ta = minimize(S, Box(5, 300), cfg=OptimizerConfig(max_iters=30))
        b, tb = minimize(S, Box(5, 300), cfg=OptimizerConfig(max_iters=30))
        assert np.array_equal(a.data, b.data) and ta.iterations == tb.iterations

    def test_trace_csv(self, tmp_path):
        S = natural_hdr((16, 16), 1)[0]
        seen = []
        _, trace = minimize(S, Box(5, 300), cfg=OptimizerConfig(max_iters=4), callback=lambda i, x, d: seen.append(i))
        assert seen == [0, 1, 2, 3, 4]
        trace.write_csv(tmp_path / "t.csv")
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == "iter,distance,mean_luminance" and len(lines) == 6
        assert not trace.converged

    def test_rejects(self):
        S = np.ones((8, 8))
        with pytest.raises(ConfigurationError):
            minimize(S, DiscreteLevels((1, 2)))
        with pytest.raises(DimensionError):
            minimize(S, Box(0, 2), init=np.ones((4, 4)))

    def test_non_finite_gradient(self, monkeypatch):
        def bad(self, img):
            return 1.0, np.full(np.shape(img), np.nan)

        monkeypatch.setattr(optimizer.Nlpd, "value_and_grad", bad)
        with pytest.raises(NumericalError, match="pixel"):
            minimize(np.full((8, 8), 10.0), Box(5, 300))
