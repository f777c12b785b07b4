"""End-to-end rendering workflows and named presets."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    AcquisitionSpec,
    CalibratedHDR,
    CalibratedLDR,
    DisplayModel,
    GammaMapping,
    LuminanceImage,
    UncalibratedLinear,
    acquire,
    affine_rescale,
    as_array,
    scene_from_uncalibrated,
)
from .dither import AUTO_WINDOW_PIXELS, DitherConfig, floyd_steinberg, greedy_dither, receptive_field_radius
from .errors import ConfigurationError
from .metric import Nlpd
from .optimizer import (
    Box,
    BoxMean,
    ConstraintSpec,
    DiscreteLevels,
    OptimizationTrace,
    OptimizerConfig,
    default_init,
    minimize,
    project_box_mean,
)
from .transform import FULL, AblationConfig, NlpParams, resolve

log = logging.getLogger(__name__)

PRESETS = ("tonemap-hdr", "tonemap-ldr", "uncalibrated", "detail", "haze", "energy", "dither", "ablation")


@dataclass(frozen=True)
class RenderTask:
    acquisition: AcquisitionSpec = CalibratedHDR()
    constraint: ConstraintSpec = Box(5.0, 300.0)
    display: DisplayModel = DisplayModel()
    optimizer: OptimizerConfig = OptimizerConfig()
    ablation: AblationConfig = FULL
    params: NlpParams = NlpParams()
    window_radius: int | str | None = "auto"
    preset_name: str | None = None

    def __post_init__(self):
        c, d = self.constraint, self.display
        tol = 1e-9 * d.span
        if c.i_min < d.i_min - tol or c.i_max > d.i_max + tol:
            raise ConfigurationError(
                f"constraint range [{c.i_min}, {c.i_max}] exceeds display range [{d.i_min}, {d.i_max}]"
            )


@dataclass
class Rendition:
    """An optimized rendering alongside its affine-rescale baseline."""

    scene: LuminanceImage
    image: LuminanceImage
    baseline: LuminanceImage
    trace: OptimizationTrace | None
    distance: float
    baseline_distance: float
    label: str = ""

    def __iter__(self):
        yield self.image
        yield self.trace


def baseline_for(scene, constraint) -> np.ndarray:
    if isinstance(constraint, DiscreteLevels):
        return floyd_steinberg(scene, constraint.levels).data
    return default_init(scene, constraint)


def window_for(task: RenderTask, shape) -> int | None:
    wr = task.window_radius
    if wr == "auto":
        if shape[0] * shape[1] <= AUTO_WINDOW_PIXELS:
            return None
        cfg = resolve(task.params, task.ablation, shape)
        return receptive_field_radius(cfg.n_levels, len(cfg.taps) // 2, cfg.p_band.shape[0] // 2)
    if wr == "exact":
        return None
    return wr


def render_scene(scene: LuminanceImage, task: RenderTask, init=None, label: str = "") -> Rendition:
    """Optimize a rendering of known scene luminances under ``task``."""
    c = task.constraint
    baseline = baseline_for(scene, c)
    if isinstance(c, DiscreteLevels):
        continuous, trace = minimize(
            scene, Box(c.i_min, c.i_max), task.params, task.optimizer, ablate=task.ablation
        )
        dcfg = DitherConfig(c.levels, window_for(task, scene.shape))
        image = greedy_dither(scene, dcfg, task.params, continuous, task.ablation)
    else:
        image, trace = minimize(scene, c, task.params, task.optimizer, init=init, ablate=task.ablation)
    objective = Nlpd(scene, task.params, task.ablation)
    return Rendition(
        scene=scene,
        image=image,
        baseline=LuminanceImage(baseline),
        trace=trace,
        distance=objective(image),
        baseline_distance=objective(baseline),
        label=label or (task.preset_name or ""),
    )


def render(scene_source, task: RenderTask) -> Rendition:
    """Build scene luminances per the task's acquisition spec and render them."""
    if isinstance(scene_source, LuminanceImage) and isinstance(task.acquisition, CalibratedHDR):
        scene = scene_source
    else:
        scene = acquire(as_array(scene_source), task.acquisition)
    return render_scene(scene, task)


def detail_enhance(
    normalized,
    s_max_list,
    display: DisplayModel = DisplayModel(),
    s_min: float = 0.01,
    params: NlpParams = NlpParams(),
    optimizer: OptimizerConfig = OptimizerConfig(),
) -> list[Rendition]:
    """One rendering per assumed maximum scene luminance."""
    out = []
    for s_max in s_max_list:
        scene = scene_from_uncalibrated(normalized, s_min, s_max)
        task = RenderTask(
            acquisition=UncalibratedLinear(s_min, s_max),
            constraint=Box(display.i_min, display.i_max),
            display=display,
            optimizer=optimizer,
            params=params,
            preset_name="detail",
        )
        out.append(render_scene(scene, task, label=f"s_max={s_max:g}"))
    return out


# ---------------------------------------------------------------------------
# energy


def rescale_to_mean(base, i_min: float, i_max: float, i_mean: float) -> np.ndarray:
    """Linear dimming of ``base`` about the black level to mean ``i_mean``.

    Brightening beyond the base mean cannot stay linear inside the box; it
    falls back to the box/mean projection.
    """
    base = as_array(base)
    cur = base.mean() - i_min
    want = i_mean - i_min
    if cur > 0 and 0 <= want <= cur:
        return i_min + (base - i_min) * (want / cur)
    return project_box_mean(base, i_min, i_max, i_mean)


@dataclass
class EnergyPoint:
    i_mean: float
    d_optimized: float
    d_rescaled: float
    achieved_mean: float
    energy_saved: float = float("nan")
    image: LuminanceImage | None = field(default=None, repr=False)
    rescaled: LuminanceImage | None = field(default=None, repr=False)


def _smallest_mean_reaching(curve: list[tuple[float, float]], target: float) -> float:
    """Smallest mean on the piecewise-linear (mean, D) curve with D <= target."""
    pts = sorted(curve)
    if pts[0][1] <= target:
        return pts[0][0]
    for (m0, d0), (m1, d1) in zip(pts, pts[1:]):
        if d1 <= target:
            if d0 == d1:
                return m1
            return m0 + (d0 - target) / (d0 - d1) * (m1 - m0)
    return float("nan")


def energy_curve(
    scene,
    display: DisplayModel = DisplayModel(),
    mean_fractions=(0.25, 0.4, 0.55, 0.7, 0.85, 1.0),
    params: NlpParams = NlpParams(),
    optimizer: OptimizerConfig = OptimizerConfig(),
) -> list[EnergyPoint]:
    """Distortion versus mean luminance, optimized against linearly dimmed.

    Target means are ``i_min + f * (m_full - i_min)`` where ``m_full`` is the
    mean of the full-range rescaled scene. Each point also reports the
    fraction of luminance (energy) saved: ``1 - m_opt / i_mean`` where
    ``m_opt`` is the smallest mean on the optimized curve, linearly
    interpolated and anchored at the all-black image, whose distortion does
    not exceed the dimmed rendering's.
    """
    scene = as_array(scene)
    lo, hi = display.i_min, display.i_max
    base = affine_rescale(scene, lo, hi).data
    m_full = float(base.mean())
    objective = Nlpd(scene, params)
    points = []
    for f in mean_fractions:
        target = lo + f * (m_full - lo)
        if not lo <= target <= hi:
            log.warning("skipping infeasible target mean %g", target)
            continue
        dimmed = rescale_to_mean(base, lo, hi, target)
        image, trace = minimize(scene, BoxMean(lo, hi, target), params, optimizer, init=dimmed)
        points.append(
            EnergyPoint(
                i_mean=target,
                d_optimized=trace.final_distance,
                d_rescaled=objective(dimmed),
                achieved_mean=float(image.data.mean()),
                image=image,
                rescaled=LuminanceImage(dimmed),
            )
        )
    anchor = (lo, objective(np.full(scene.shape, lo)))
    curve = [anchor] + [(p.i_mean, p.d_optimized) for p in points]
    for p in points:
        m_opt = _smallest_mean_reaching(curve, p.d_rescaled)
        p.energy_saved = 1.0 - m_opt / p.i_mean
    return points


# ---------------------------------------------------------------------------
# ablations

ABLATIONS = {
    "full": FULL,
    "no-nonlinearity": AblationConfig(disable_front_nonlinearity=True),
    "no-multiscale": AblationConfig(disable_multiscale=True),
    "no-normalization": AblationConfig(disable_normalization=True),
}


def ablation_suite(scene, task: RenderTask = RenderTask()) -> dict:
    """Render with the full transform and with each component removed.

    Returns ``{variant: (image, distance under the full metric)}``.
    """
    scene = as_array(scene)
    full_metric = Nlpd(scene, task.params)
    out = {}
    for name, ab in ABLATIONS.items():
        image, _ = minimize(scene, task.constraint, task.params, task.optimizer, ablate=ab)
        out[name] = (image, full_metric(image))
    return out


# ---------------------------------------------------------------------------
# presets


def preset(name: str, display: DisplayModel = DisplayModel(), **overrides) -> RenderTask:
    """A :class:`RenderTask` for one of :data:`PRESETS`.

    ``s_min``/``s_max`` override the acquisition range, ``levels`` the
    dither level set; remaining keyword arguments replace task fields.
    """
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    s_min = overrides.pop("s_min", None)
    s_max = overrides.pop("s_max", None)
    levels = overrides.pop("levels", None)
    box = Box(display.i_min, display.i_max)
    acq: AcquisitionSpec = CalibratedHDR()
    constraint: ConstraintSpec = box
    if name == "tonemap-ldr":
        acq = CalibratedLDR(GammaMapping(s_min if s_min is not None else 0.5, s_max if s_max is not None else 5000.0))
    elif name in ("uncalibrated", "detail"):
        acq = UncalibratedLinear(s_min if s_min is not None else 0.01, s_max if s_max is not None else 1e4)
    elif name == "haze":
        acq = UncalibratedLinear(s_min if s_min is not None else 5.0, s_max if s_max is not None else 1e4)
    elif name == "dither":
        constraint = DiscreteLevels(levels if levels is not None else (display.i_min, display.i_max))
    elif name == "energy":
        constraint = BoxMean(display.i_min, display.i_max, 0.5 * (display.i_min + display.i_max))
    elif s_min is not None or s_max is not None:
        acq = UncalibratedLinear(s_min if s_min is not None else 0.01, s_max if s_max is not None else 1e4)
    task = RenderTask(acquisition=acq, constraint=constraint, display=display, preset_name=name)
    return replace(task, **overrides) if overrides else task
