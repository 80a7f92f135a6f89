"""Command-line front end: ``rootseg run | evaluate | synth | bench``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import crf, lines
from .errors import RootsegError
from .evaluation import evaluate_directory
from .pipeline import PipelineConfig, benchmark_backends, run_pipeline
from .raster import CropRect
from .synth import SynthParams, generate_suite


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys use flag names."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def _add_run_args(p):
    p.add_argument("inputs", nargs="*", help="PGM/PNG/JPEG images")
    p.add_argument("--config", help="key=value file; flags given on the command line win")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--crop", type=CropRect.parse, help="X,Y,W,H applied to every input")
    p.add_argument("--wu", type=float, default=2.0)
    p.add_argument("--wp", type=float, default=1.0)
    p.add_argument("--theta-p", type=float, default=1.0)
    p.add_argument("--theta-x", type=float, default=None, help="omit to estimate per image")
    p.add_argument("--alpha", type=int, default=20, help="minimum skeleton segment area")
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--backend", choices=crf.BACKENDS, default="truncated")
    p.add_argument("--radius", type=int, default=None, help="truncation radius (default ceil(4*theta_p))")
    p.add_argument("--exact-cap", type=int, default=4096, help="pixel cap for the exact backend")
    p.add_argument("--lengths", default=",".join(map(str, lines.DEFAULT_LENGTHS)))
    p.add_argument("--angles", default=",".join(map(str, lines.DEFAULT_ANGLES)))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance-px", type=int, default=0)
    p.add_argument("--invert-unary", action="store_true")
    p.add_argument("--emit-intermediates", action="store_true")
    p.add_argument("--jobs", type=int, default=1)


_BOOL_KEYS = {"invert_unary", "emit_intermediates"}


def _apply_config_file(parser, sub, argv):
    pre, _ = parser.parse_known_args(argv)
    if getattr(pre, "config", None):
        values = read_config(pre.config)
        for k in _BOOL_KEYS & values.keys():
            values[k] = values[k].lower() in ("1", "true", "yes", "on")
        if "crop" in values:
            values["crop"] = CropRect.parse(values["crop"])
        for action in sub._actions:
            if action.dest in values and action.type is not None and isinstance(values[action.dest], str):
                values[action.dest] = action.type(values[action.dest])
        sub.set_defaults(**values)


def config_from_args(args) -> PipelineConfig:
    line_params = lines.LineDetectorParams(
        lengths=tuple(int(v) for v in str(args.lengths).split(",")),
        angles_deg=tuple(float(v) for v in str(args.angles).split(",")),
    )
    crf_params = crf.CrfParams(
        w_u=args.wu,
        w_p=args.wp,
        theta_p=args.theta_p,
        theta_x=args.theta_x,
        max_iters=args.iters,
        tol=args.tol,
        backend=args.backend,
        truncation_radius=args.radius,
        invert_unary=args.invert_unary,
        max_exact_pixels=args.exact_cap,
    )
    return PipelineConfig(
        inputs=list(args.inputs),
        out_dir=args.out,
        crop=args.crop,
        lines=line_params,
        crf=crf_params,
        alpha=args.alpha,
        tolerance_px=args.tolerance_px,
        seed=args.seed,
        emit_intermediates=args.emit_intermediates,
        jobs=args.jobs,
    )


def cmd_run(args) -> int:
    config = config_from_args(args)
    summary = run_pipeline(config)
    for rec in summary["images"]:
        if "error" in rec:
            print(f"{rec['image_id']}: FAILED {rec['error']}", file=sys.stderr)
            continue
        stages = " ".join(f"{k}={v:.1f}ms" for k, v in rec["stage_timings_ms"].items())
        print(f"{rec['image_id']}: {stages}")
    print(f"{summary['n_images']} images, {summary['n_failed']} failed")
    return 1 if summary["n_failed"] else 0


def cmd_evaluate(args) -> int:
    report = evaluate_directory(args.pred_dir, args.ref_dir, args.manifest, args.tolerance_px)
    json_path, csv_path = report.write(args.out)
    for tag, stats in report.per_class.items():
        print(f"{tag}: {stats['mean']:.4f} +/- {stats['std']:.4f} (n={stats['n']})")
    print(f"overall: {report.overall_mean:.4f} +/- {report.overall_std:.4f}")
    for e in report.errors:
        print(f"{e.image_id}: {e.error}", file=sys.stderr)
    print(f"wrote {json_path} and {csv_path}")
    return 1 if report.errors else 0


def cmd_synth(args) -> int:
    params = SynthParams(
        width=args.size,
        height=args.size,
        n_laterals=args.laterals,
        noise_sigma=args.noise,
        leaf_radius=args.leaf_radius,
        stroke_width=args.stroke_width,
    )
    manifest = generate_suite(args.n, params, args.seed, args.out_dir)
    print(manifest)
    return 0


def cmd_bench(args) -> int:
    report = benchmark_backends(args.size, args.iters, args.radius, args.seed)
    print(json.dumps(report, indent=2))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="rootseg", description="Root architecture segmentation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    subs = parser.add_subparsers(dest="command", required=True)

    run = subs.add_parser("run", help="segment images")
    _add_run_args(run)
    run.set_defaults(func=cmd_run)

    ev = subs.add_parser("evaluate", help="score skeletons against reference masks")
    ev.add_argument("manifest", help="CSV with image_id,class,pred_path,ref_path")
    ev.add_argument("--pred-dir", default=None)
    ev.add_argument("--ref-dir", default=None)
    ev.add_argument("--tolerance-px", type=int, default=0)
    ev.add_argument("--out", default=".", help="where report.json / report.csv go")
    ev.set_defaults(func=cmd_evaluate)

    sy = subs.add_parser("synth", help="write a synthetic image suite with ground truth")
    sy.add_argument("n", type=int)
    sy.add_argument("out_dir")
    sy.add_argument("--size", type=int, default=256)
    sy.add_argument("--laterals", type=int, default=3)
    sy.add_argument("--noise", type=float, default=8.0)
    sy.add_argument("--leaf-radius", type=int, default=0)
    sy.add_argument("--stroke-width", type=int, default=2)
    sy.add_argument("--seed", type=int, default=42)
    sy.set_defaults(func=cmd_synth)

    be = subs.add_parser("bench", help="time exact vs truncated mean field")
    be.add_argument("--size", type=int, default=256)
    be.add_argument("--iters", type=int, default=1)
    be.add_argument("--radius", type=int, default=5)
    be.add_argument("--seed", type=int, default=0)
    be.set_defaults(func=cmd_bench)
    return parser, run


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, run = build_parser()
    if "run" in argv[:2]:
        _apply_config_file(parser, run, argv)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (RootsegError, OSError, ValueError) as exc:
        print(f"rootseg: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
