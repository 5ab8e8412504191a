"""Command line entry point.

Exit status is 0 on success, 1 for domain and I/O errors and 2 for usage
errors. Diagnostics go to stderr; results go to files or stdout. Relative
``--out`` paths resolve against ``$RADARLEVEL_OUT_DIR`` when it is set.
"""

import argparse
import json
import os
import sys
from pathlib import Path

from . import io as rio
from .errors import RadarLevelError
from .estimator import DEFAULT_BIN_WIDTH_M, estimate_run
from .evaluation import DEFAULT_MAX_GAP_S, evaluate_deployment, grid_search
from .filtering import FilterParams
from .scenesim import SceneSpec, linear_trajectory, synth_deployment, synth_run

OUT_DIR_ENV = "RADARLEVEL_OUT_DIR"


def _out_path(value, default_name):
    base = Path(os.environ.get(OUT_DIR_ENV, "."))
    if value is None:
        return base / default_name
    p = Path(value)
    return p if p.is_absolute() else base / p


def _params(args):
    return rio.read_params(args.params) if args.params else FilterParams()


def _cmd_simulate(args):
    spec = rio.read_scene(args.scene) if args.scene else SceneSpec()
    if args.n_runs is None:
        out = _out_path(args.out, "run.jsonl")
        out.parent.mkdir(parents=True, exist_ok=True)
        run = synth_run(spec, args.duration_s, args.rate_hz, seed=args.seed)
        rio.write_run_file(run, out)
    else:
        out = _out_path(args.out, "deployment/manifest.json")
        out.parent.mkdir(parents=True, exist_ok=True)
        total = max((args.n_runs - 1) * args.run_interval_s, 1.0)
        dep = synth_deployment(
            spec,
            linear_trajectory(spec.true_distance_m, args.level_change_m, total),
            n_runs=args.n_runs,
            run_interval_s=args.run_interval_s,
            run_duration_s=args.duration_s,
            groundtruth_interval_s=args.groundtruth_interval_s,
            seed=args.seed,
            rate_hz=args.rate_hz,
            initial_depth_m=args.initial_depth_m,
            groundtruth_noise_std_m=args.groundtruth_noise_m,
        )
        rio.write_deployment(dep, out)
    print(f"wrote {out}", file=sys.stderr)


def _cmd_estimate(args):
    run = rio.parse_run_file(args.run)
    est = estimate_run(run, _params(args), args.bin_width_m)
    text = rio.estimate_to_json(est) + "\n"
    if args.out:
        rio._atomic_write(_out_path(args.out, "estimate.jsonl"), text)
    else:
        sys.stdout.write(text)


def _cmd_evaluate(args):
    dep = rio.parse_deployment(args.manifest)
    report = evaluate_deployment(dep, _params(args), args.max_gap_s, args.bin_width_m)
    text = rio.report_to_json(report)
    if args.out:
        rio._atomic_write(_out_path(args.out, "report.json"), text)
    sys.stdout.write(text)


def _cmd_tune(args):
    dep = rio.parse_deployment(args.manifest)
    grid = rio.read_grid(args.grid) if args.grid else rio.default_grid()
    result = grid_search(dep, grid, args.max_gap_s, args.bin_width_m)
    out = _out_path(args.out, "tune")
    out.mkdir(parents=True, exist_ok=True)
    rio.write_params(result.best_params, out / "best_params.json")
    rio.write_report(result.best_report, out / "report.json")
    rio.write_results_table(result.table, out / "results.csv")
    for cell, reason in result.invalid:
        print(f"invalid cell {json.dumps(cell.to_dict())}: {reason}", file=sys.stderr)
    sys.stdout.write(rio.report_to_json(result.best_report))


def _cmd_plot(args):
    report = rio.read_report(args.report)
    csv_path, svg_path = rio.write_plot(report, _out_path(args.out, "plot"))
    print(f"wrote {csv_path} and {svg_path}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radarlevel", description="Radar water-level pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic run or deployment")
    p.add_argument("--scene", help="SceneSpec JSON (defaults to the built-in scene)")
    p.add_argument("--out", help="run file, or manifest path with --n-runs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration-s", type=float, default=180.0)
    p.add_argument("--rate-hz", type=float, default=10.0)
    p.add_argument("--n-runs", type=int, help="generate a deployment of this many runs")
    p.add_argument("--run-interval-s", type=float, default=1800.0)
    p.add_argument("--groundtruth-interval-s", type=float, default=900.0)
    p.add_argument("--level-change-m", type=float, default=0.0,
                   help="change of sensor-to-surface distance over the deployment")
    p.add_argument("--initial-depth-m", type=float, default=1.0)
    p.add_argument("--groundtruth-noise-m", type=float, default=0.0)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the water distance of one run")
    p.add_argument("--run", required=True)
    p.add_argument("--params")
    p.add_argument("--bin-width-m", type=float, default=DEFAULT_BIN_WIDTH_M)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_estimate)

    for name, helptext in (("evaluate", "score a deployment with fixed parameters"),
                           ("tune", "grid-search filter parameters on a deployment")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--manifest", required=True)
        if name == "evaluate":
            p.add_argument("--params")
        else:
            p.add_argument("--grid", help="grid JSON (defaults to the packaged grid)")
        p.add_argument("--max-gap-s", type=float, default=DEFAULT_MAX_GAP_S)
        p.add_argument("--bin-width-m", type=float, default=DEFAULT_BIN_WIDTH_M)
        p.add_argument("--out")
        p.set_defaults(func=_cmd_evaluate if name == "evaluate" else _cmd_tune)

    p = sub.add_parser("plot", help="delta series CSV and SVG from a report")
    p.add_argument("--report", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        args.func(args)
    except (RadarLevelError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
