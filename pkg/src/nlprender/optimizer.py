"""Projected Adam minimization of NLPD over display-feasible images."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .core import LuminanceImage, affine_rescale, as_array
from .errors import ConfigurationError, DimensionError, NumericalError
from .metric import Nlpd
from .transform import FULL, AblationConfig, NlpParams

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# constraint sets


@dataclass(frozen=True)
class Box:
    i_min: float
    i_max: float

    def __post_init__(self):
        if not (np.isfinite(self.i_min) and np.isfinite(self.i_max)) or not self.i_min < self.i_max:
            raise ConfigurationError(f"need finite i_min < i_max, got [{self.i_min}, {self.i_max}]")

    def project(self, x):
        return project_box(x, self.i_min, self.i_max)


@dataclass(frozen=True)
class BoxMean:
    i_min: float
    i_max: float
    i_mean: float

    def __post_init__(self):
        Box(self.i_min, self.i_max)
        if not self.i_min <= self.i_mean <= self.i_max:
            raise ConfigurationError(
                f"target mean {self.i_mean} outside [{self.i_min}, {self.i_max}]"
            )

    def project(self, x):
        return project_box_mean(x, self.i_min, self.i_max, self.i_mean)


@dataclass(frozen=True)
class DiscreteLevels:
    levels: tuple

    def __post_init__(self):
        lv = tuple(float(v) for v in self.levels)
        if not lv:
            raise ConfigurationError("level set is empty")
        if any(b <= a for a, b in zip(lv, lv[1:])):
            raise ConfigurationError(f"levels must be strictly increasing, got {lv}")
        if not all(np.isfinite(lv)) or lv[0] < 0:
            raise ConfigurationError("levels must be finite nonnegative luminances")
        object.__setattr__(self, "levels", lv)

    @property
    def i_min(self) -> float:
        return self.levels[0]

    @property
    def i_max(self) -> float:
        return self.levels[-1]


ConstraintSpec = Union[Box, BoxMean, DiscreteLevels]


def project_box(x, i_min: float, i_max: float) -> np.ndarray:
    """Clamp every pixel into ``[i_min, i_max]``."""
    if not i_min < i_max:
        raise ConfigurationError(f"need i_min < i_max, got [{i_min}, {i_max}]")
    return np.clip(as_array(x), i_min, i_max)


def project_box_mean(x, i_min: float, i_max: float, i_mean: float) -> np.ndarray:
    """Euclidean projection onto the box intersected with the mean hyperplane.

    The projection has the form ``clip(x + delta)``; the scalar shift is
    found by bisection on the (nondecreasing) mean of the clipped image.
    """
    if not i_min < i_max:
        raise ConfigurationError(f"need i_min < i_max, got [{i_min}, {i_max}]")
    if not i_min <= i_mean <= i_max:
        raise ConfigurationError(f"target mean {i_mean} outside [{i_min}, {i_max}]")
    x = as_array(x)
    if i_mean in (i_min, i_max):
        # the only feasible point is constant
        return np.full(x.shape, float(i_mean))
    tol = 1e-6 * (i_max - i_min)
    if x.min() >= i_min and x.max() <= i_max and abs(x.mean() - i_mean) <= tol:
        return x.copy()
    lo = i_min - float(x.max())
    hi = i_max - float(x.min())
    mean_lo = np.clip(x + lo, i_min, i_max).mean()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        m = np.clip(x + mid, i_min, i_max).mean()
        assert m >= mean_lo - 1e-12 * (i_max - i_min), "clipped mean must be monotone in the shift"
        if m < i_mean:
            lo, mean_lo = mid, m
        else:
            hi = mid
    out_lo = np.clip(x + lo, i_min, i_max)
    out_hi = np.clip(x + hi, i_min, i_max)
    if abs(out_lo.mean() - i_mean) <= abs(out_hi.mean() - i_mean):
        return out_lo
    return out_hi


# ---------------------------------------------------------------------------
# optimizer


@dataclass(frozen=True)
class OptimizerConfig:
    """Adam settings. ``step_size=None`` scales with the constraint range:
    ``0.1 * (i_max - i_min) / 300``."""

    max_iters: int = 2000
    step_size: float | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    tol_rel: float = 1e-6
    window: int = 20
    seed: int = 0

    def __post_init__(self):
        if int(self.max_iters) < 1:
            raise ConfigurationError(f"max_iters must be >= 1, got {self.max_iters}")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigurationError("beta1 and beta2 must lie in (0, 1)")
        if self.step_size is not None and not self.step_size > 0:
            raise ConfigurationError(f"step_size must be positive, got {self.step_size}")
        if not self.epsilon > 0 or self.tol_rel < 0 or self.window < 1:
            raise ConfigurationError("epsilon must be positive, tol_rel >= 0, window >= 1")

    def step_for(self, i_min: float, i_max: float) -> float:
        if self.step_size is not None:
            return float(self.step_size)
        return 0.1 * (i_max - i_min) / 300.0

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown optimizer keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def load_optimizer_config(path) -> OptimizerConfig:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(d, dict):
        raise ConfigurationError(f"{path}: expected a JSON object")
    return OptimizerConfig.from_dict(d)


@dataclass
class OptimizationTrace:
    """Per-iteration record; iteration 0 is the initial image."""

    iterations: list = field(default_factory=list)
    final_distance: float = float("nan")
    converged: bool = False

    def record(self, it: int, dist: float, mean: float) -> None:
        self.iterations.append((it, dist, mean))

    @property
    def distances(self) -> np.ndarray:
        return np.array([d for _, d, _ in self.iterations])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "distance", "mean_luminance"])
            for it, d, m in self.iterations:
                w.writerow([it, repr(float(d)), repr(float(m))])


def default_init(scene, constraint) -> np.ndarray:
    """Affine rescale of the scene into the box (then mean-projected)."""
    base = affine_rescale(scene, constraint.i_min, constraint.i_max).data
    if isinstance(constraint, BoxMean):
        return project_box_mean(base, constraint.i_min, constraint.i_max, constraint.i_mean)
    return base


def minimize(
    scene,
    constraint: Box | BoxMean,
    params: NlpParams | None = None,
    cfg: OptimizerConfig | None = None,
    init=None,
    ablate: AblationConfig = FULL,
    callback=None,
) -> tuple[LuminanceImage, OptimizationTrace]:
    """Minimize NLPD(scene, I) over images I satisfying ``constraint``.

    Adam steps alternate with projection onto the constraint set; the
    feasible iterate with the lowest distance is returned.

    Parameters
    ----------
    scene
        Scene luminances (cd/m^2).
    constraint
        :class:`Box` or :class:`BoxMean`.
    init
        Starting image; defaults to :func:`default_init`. It is projected
        before the first evaluation.
    callback
        Optional ``callback(it, image, distance)`` called every iteration.

    Raises
    ------
    NumericalError
        If the distance or its gradient becomes non-finite.
    """
    if isinstance(constraint, DiscreteLevels):
        raise ConfigurationError("discrete level sets are handled by the dither module")
    if not isinstance(constraint, (Box, BoxMean)):
        raise ConfigurationError(f"unsupported constraint {constraint!r}")
    cfg = OptimizerConfig() if cfg is None else cfg
    scene = as_array(scene)
    objective = Nlpd(scene, params, ablate)

    x = default_init(scene, constraint) if init is None else as_array(init).copy()
    if x.shape != scene.shape:
        raise DimensionError(f"init shape {x.shape} differs from scene shape {scene.shape}")
    x = constraint.project(x)

    lr = cfg.step_for(constraint.i_min, constraint.i_max)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    trace = OptimizationTrace()

    dist, grad = objective.value_and_grad(x)
    _check_finite(dist, grad, 0)
    best_x, best_d = x.copy(), dist
    trace.record(0, dist, float(x.mean()))
    if callback is not None:
        callback(0, x, dist)

    for it in range(1, int(cfg.max_iters) + 1):
        m = cfg.beta1 * m + (1 - cfg.beta1) * grad
        v = cfg.beta2 * v + (1 - cfg.beta2) * grad * grad
        m_hat = m / (1 - cfg.beta1 ** it)
        v_hat = v / (1 - cfg.beta2 ** it)
        x = constraint.project(x - lr * m_hat / (np.sqrt(v_hat) + cfg.epsilon))

        dist, grad = objective.value_and_grad(x)
        _check_finite(dist, grad, it)
        trace.record(it, dist, float(x.mean()))
        if dist < best_d:
            best_x, best_d = x.copy(), dist
        if callback is not None:
            callback(it, x, dist)
        if dist == 0.0:
            trace.converged = True
            break
        if it >= cfg.window:
            past = trace.iterations[it - cfg.window][1]
            if abs(past - dist) <= cfg.tol_rel * max(dist, 1e-300):
                trace.converged = True
                break

    if not trace.converged:
        log.info("iteration budget of %d exhausted; returning best iterate", cfg.max_iters)
    trace.final_distance = best_d
    return LuminanceImage(best_x), trace


def _check_finite(dist, grad, it):
    if not np.isfinite(dist):
        raise NumericalError(f"non-finite distance at iteration {it}")
    if not np.isfinite(grad).all():
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(grad))[0])
        raise NumericalError(f"non-finite gradient at pixel {bad}, iteration {it}")
