"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(unreadable, malformed or out-of-domain input), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, fileio, tasks
from .core import (
    CalibratedHDR,
    CalibratedLDR,
    DisplayModel,
    GammaMapping,
    LuminanceImage,
    UncalibratedLinear,
    acquire,
    normalize_linear,
)
from .dither import DitherConfig, equally_spaced_levels, floyd_steinberg, greedy_dither
from .errors import ConfigurationError, NlpRenderError, NumericalError
from .iqa import IqaManifest, score_database
from .metric import Nlpd, distance
from .optimizer import Box, DiscreteLevels, OptimizerConfig, minimize
from .transform import NlpParams, load_params, transform

log = logging.getLogger("nlprender")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _window(text: str):
    if text in ("exact", "auto"):
        return text
    try:
        r = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("window must be an integer radius, 'exact' or 'auto'") from None
    if r < 0:
        raise argparse.ArgumentTypeError("window radius must be nonnegative")
    return r


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--smin", type=float, help="minimum scene luminance for LDR/uncalibrated inputs (cd/m^2)")
    g.add_argument("--smax", type=float, help="maximum scene luminance for LDR/uncalibrated inputs (cd/m^2)")
    g.add_argument("--imin", type=float, default=5.0, help="display black level (cd/m^2, default 5)")
    g.add_argument("--imax", type=float, default=300.0, help="display peak luminance (cd/m^2, default 300)")
    g.add_argument("--display-gamma", type=float, default=2.2, help="display gamma (default 2.2)")
    g.add_argument("--levels-count", type=int, help="number of output gray levels (dither)")
    g.add_argument("--pyramid-levels", type=int, help="pyramid depth N_k (default from image size)")
    g.add_argument("--iters", type=int, help="maximum optimizer iterations (default 2000)")
    g.add_argument("--step", type=float, help="Adam step size in cd/m^2 (default 0.1*(imax-imin)/300)")
    g.add_argument("--params-json", type=Path, help="JSON file with transform/metric constants")
    g.add_argument("--trace-csv", type=Path, help="write the optimization trace here")
    g.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    g.add_argument(
        "--calibration",
        choices=("auto", "hdr", "ldr", "uncalibrated"),
        default="auto",
        help="how input values map to scene luminance (auto: hdr for PFM/HDR, ldr for PNG)",
    )
    g.add_argument("--camera-gamma", type=float, default=2.2, help="camera gamma for LDR inputs")
    g.add_argument("--bits", type=int, choices=(8, 16), default=8, help="PNG output bit depth")
    g.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="nlprender", description="Perceptually optimized rendering by NLPD minimization.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("render", parents=[common], help="optimize a rendering for the display")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--preset", choices=("tonemap-hdr", "tonemap-ldr", "uncalibrated", "haze"))
    p.add_argument("--baseline-out", help="also write the affine-rescale baseline")

    p = sub.add_parser("distance", parents=[common], help="NLPD between two images")
    p.add_argument("reference")
    p.add_argument("rendered")

    p = sub.add_parser("dither", parents=[common], help="render with a discrete set of gray levels")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--levels", dest="levels_count", type=int, help="alias of --levels-count")
    p.add_argument("--level-values", type=_floats, help="explicit levels in cd/m^2, comma separated")
    p.add_argument("--method", choices=("greedy", "fs"), default="greedy")
    p.add_argument("--window", type=_window, default="auto", help="radius, 'exact' or 'auto'")

    p = sub.add_parser("energy", parents=[common], help="distortion versus mean luminance")
    p.add_argument("input")
    p.add_argument("--fractions", type=_floats, default=[0.25, 0.4, 0.55, 0.7, 0.85, 1.0])
    p.add_argument("--out-dir", type=Path, help="write optimized and dimmed images here")

    p = sub.add_parser("detail", parents=[common], help="renditions for several assumed peak luminances")
    p.add_argument("input")
    p.add_argument("out_dir", type=Path)
    p.add_argument("--smax-list", type=_floats, default=[1e3, 1e4, 1e5])

    p = sub.add_parser("iqa", parents=[common], help="correlate NLPD with MOS over a CSV manifest")
    p.add_argument("manifest")

    p = sub.add_parser("ablate", parents=[common], help="optimize under each ablated transform")
    p.add_argument("input")
    p.add_argument("--out-dir", type=Path)

    p = sub.add_parser("transform-dump", parents=[common], help="summarize (and dump) the NLP channels")
    p.add_argument("input")
    p.add_argument("--out-dir", type=Path, help="write each channel as PFM")
    return parser


# ---------------------------------------------------------------------------
# helpers


def _display(a) -> DisplayModel:
    return DisplayModel(a.imin, a.imax, a.display_gamma)


def _params(a) -> NlpParams:
    params = load_params(a.params_json) if a.params_json else NlpParams()
    if a.pyramid_levels is not None:
        params = replace(params, n_levels=a.pyramid_levels)
    return params


def _optimizer(a) -> OptimizerConfig:
    kw = {"seed": a.seed}
    if a.iters is not None:
        kw["max_iters"] = a.iters
    if a.step is not None:
        kw["step_size"] = a.step
    return OptimizerConfig(**kw)


def _acquisition(a, fmt: str, preset: str | None = None):
    kind = a.calibration
    if preset is not None and kind == "auto":
        kind = {"tonemap-hdr": "hdr", "tonemap-ldr": "ldr"}.get(preset, "uncalibrated")
    if kind == "auto":
        kind = "ldr" if fmt == "png" else "hdr"
    if kind == "hdr":
        return CalibratedHDR()
    if kind == "ldr":
        s_min = 0.5 if a.smin is None else a.smin
        s_max = 5000.0 if a.smax is None else a.smax
        return CalibratedLDR(GammaMapping(s_min, s_max, a.camera_gamma))
    s_min = (5.0 if preset == "haze" else 0.01) if a.smin is None else a.smin
    s_max = 1e4 if a.smax is None else a.smax
    return UncalibratedLinear(s_min, s_max)


def _load_scene(a, path, preset: str | None = None) -> LuminanceImage:
    fmt = fileio.detect_format(path)
    spec = _acquisition(a, fmt, preset)
    if fmt == "png":
        if isinstance(spec, CalibratedHDR):
            return fileio.load_image(path, "png", _display(a))
        codes, r_max = fileio.read_codes(path)
        if isinstance(spec, CalibratedLDR):
            spec = CalibratedLDR(replace(spec.mapping, r_max=float(r_max)))
            return acquire(codes, spec)
        return acquire(codes / r_max, spec)
    if isinstance(spec, CalibratedLDR):
        raise ConfigurationError("LDR calibration needs PNG code values; use --calibration hdr or uncalibrated")
    return acquire(fileio.read_linear(path, fmt), spec)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _save(a, img, path) -> None:
    fileio.save_image(img, path, display=_display(a), bits=a.bits)


def _trace(a, trace) -> None:
    if a.trace_csv is not None and trace is not None:
        trace.write_csv(a.trace_csv)


def _mkdir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# subcommands


def cmd_render(a) -> None:
    display = _display(a)
    scene = _load_scene(a, a.input, a.preset)
    task = tasks.RenderTask(
        constraint=Box(display.i_min, display.i_max),
        display=display,
        optimizer=_optimizer(a),
        params=_params(a),
        preset_name=a.preset or "tonemap-hdr",
    )
    r = tasks.render_scene(scene, task)
    _save(a, r.image, a.output)
    if a.baseline_out:
        _save(a, r.baseline, a.baseline_out)
    _trace(a, r.trace)
    _emit({
        "distance": r.distance,
        "baseline_distance": r.baseline_distance,
        "iterations": len(r.trace.iterations) - 1,
        "converged": r.trace.converged,
    })


def cmd_distance(a) -> None:
    display = _display(a)
    ref = fileio.load_image(a.reference, display=display)
    img = fileio.load_image(a.rendered, display=display)
    _emit(distance(ref, img, _params(a)).to_dict())


def cmd_dither(a) -> None:
    display = _display(a)
    if a.level_values is not None and a.levels_count is not None:
        raise ConfigurationError("give either --levels-count or --level-values, not both")
    if a.level_values is not None:
        levels = DiscreteLevels(tuple(a.level_values)).levels
    else:
        levels = equally_spaced_levels(2 if a.levels_count is None else a.levels_count, display.i_min, display.i_max)
    scene = _load_scene(a, a.input)
    params = _params(a)
    trace = None
    if a.method == "fs":
        image = floyd_steinberg(scene, levels)
    else:
        continuous, trace = minimize(scene, Box(levels[0], levels[-1]), params, _optimizer(a))
        task = tasks.RenderTask(
            constraint=DiscreteLevels(levels), display=display, params=params, window_radius=a.window
        )
        image = greedy_dither(scene, DitherConfig(levels, tasks.window_for(task, scene.shape)), params, continuous)
    _save(a, image, a.output)
    _trace(a, trace)
    _emit({
        "method": a.method,
        "levels": list(levels),
        "distance": Nlpd(scene, params)(image),
    })


def cmd_energy(a) -> None:
    scene = _load_scene(a, a.input)
    points = tasks.energy_curve(scene, _display(a), a.fractions, _params(a), _optimizer(a))
    rows = []
    for k, p in enumerate(points):
        rows.append({
            "i_mean": p.i_mean,
            "achieved_mean": p.achieved_mean,
            "d_optimized": p.d_optimized,
            "d_rescaled": p.d_rescaled,
            "energy_saved": p.energy_saved,
        })
        if a.out_dir is not None:
            out = _mkdir(a.out_dir)
            _save(a, p.image, out / f"optimized_{k:02d}.pfm")
            _save(a, p.rescaled, out / f"rescaled_{k:02d}.pfm")
    _emit({"points": rows})


def cmd_detail(a) -> None:
    display = _display(a)
    fmt = fileio.detect_format(a.input)
    if fmt == "png":
        codes, r_max = fileio.read_codes(a.input)
        normalized = normalize_linear(codes / r_max)
    else:
        normalized = normalize_linear(fileio.read_linear(a.input, fmt))
    s_min = 0.01 if a.smin is None else a.smin
    out = _mkdir(a.out_dir)
    rows = []
    for r, s_max in zip(
        tasks.detail_enhance(normalized, a.smax_list, display, s_min, _params(a), _optimizer(a)), a.smax_list
    ):
        name = f"detail_smax_{s_max:g}.png"
        _save(a, r.image, out / name)
        rows.append({"s_max": s_max, "file": name, "distance": r.distance, "baseline_distance": r.baseline_distance})
    _emit({"s_min": s_min, "renditions": rows})


def cmd_iqa(a) -> None:
    manifest = IqaManifest.from_csv(a.manifest, _display(a))
    _emit(score_database(manifest, _params(a)).to_dict())


def cmd_ablate(a) -> None:
    display = _display(a)
    scene = _load_scene(a, a.input)
    task = tasks.RenderTask(
        constraint=Box(display.i_min, display.i_max), display=display, optimizer=_optimizer(a), params=_params(a)
    )
    results = tasks.ablation_suite(scene, task)
    if a.out_dir is not None:
        out = _mkdir(a.out_dir)
        for name, (img, _) in results.items():
            _save(a, img, out / f"{name}.png")
    _emit({name: d for name, (_, d) in results.items()})


def cmd_transform_dump(a) -> None:
    scene = _load_scene(a, a.input)
    rep = transform(scene, _params(a))
    rows = []
    for k, (ch, (w, h)) in enumerate(zip(rep.channels, rep.level_dims)):
        kind = "lowpass" if k == rep.n_channels - 1 else "band"
        row = {
            "channel": k + 1,
            "kind": kind,
            "width": w,
            "height": h,
            "mean": float(ch.mean()),
            "std": float(ch.std()),
            "min": float(ch.min()),
            "max": float(ch.max()),
        }
        if a.out_dir is not None:
            name = f"channel_{k + 1:02d}.pfm"
            fileio.write_pfm(_mkdir(a.out_dir) / name, ch)
            row["file"] = name
        rows.append(row)
    _emit({"n_channels": rep.n_channels, "channels": rows})


COMMANDS = {
    "render": cmd_render,
    "distance": cmd_distance,
    "dither": cmd_dither,
    "energy": cmd_energy,
    "detail": cmd_detail,
    "iqa": cmd_iqa,
    "ablate": cmd_ablate,
    "transform-dump": cmd_transform_dump,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (NlpRenderError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
