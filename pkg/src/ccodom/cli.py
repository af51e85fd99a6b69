"""Command-line entry point.

    ccodom simulate  --config run.cfg --out-dir data/
    ccodom odometry  --scans data/scans.csv --method cc_means --out-dir out/
    ccodom evaluate  --estimate out/relative_cc_means.csv --ground-truth data/ground_truth.csv
    ccodom report    --out-dir out/
    ccodom pipeline  --config run.cfg --seed 3 --segment-lengths 10,20,40

Every config key can be given in a ``key = value`` file (``--config``) and
overridden by the flag of the same name (underscores become dashes).
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path
import sys

from . import io
from .errors import OdometryError
from .evaluation import accumulate, segment_errors
from .pipeline import load_inputs, run_pipeline
from .report import emit_report, report_from_dir, write_metrics

HELP = {
    "seed": "master seed for the simulator and per-frame RANSAC streams",
    "method": "comma list of full_svd, ransac, cc_svd, cc_means, or 'all'",
    "q_lo": "lower theta quantile of the kept band (default 0.35)",
    "q_hi": "upper theta quantile of the kept band (default 0.65)",
    "segment_lengths": "comma list of evaluation segment lengths in metres",
    "association": "landmark_id (use scan ids) or spectral (compatibility matching)",
    "scans": "scan CSV (scan_index, landmark_id, range_m, bearing_rad); omit to simulate",
    "ground_truth": "relative pose CSV (scan_index, dx_m, dy_m, dtheta_rad)",
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat 'key = value' config file")
    for name in io.config_keys():
        p.add_argument("--" + name.replace("_", "-"), dest=name, default=None, help=HELP.get(name))


def _config(args) -> io.RunConfig:
    overrides = {k: getattr(args, k) for k in io.config_keys()}
    if args.config:
        return io.load_config(args.config, overrides)
    return io.config_from_mapping(overrides)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if not cfg.simulated:
        raise OdometryError("simulate does not take --scans")
    scans, gt = load_inputs(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_scans(out / "scans.csv", scans)
    io.write_poses(out / "ground_truth.csv", gt)
    (out / "run.cfg").write_text(io.dump_config(cfg), encoding="utf-8")
    print(f"wrote {len(scans)} scans to {out}")
    return 0


def cmd_odometry(args) -> int:
    cfg = _config(args).with_updates(evaluate=False)
    result = run_pipeline(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for m, run in result.runs.items():
        io.write_poses(out / f"relative_{m.value}.csv", run.relative)
        print(f"{m.value}: {len(run.relative)} poses, {run.fallback_count} fallback frame(s)")
    return 0


def cmd_evaluate(args) -> int:
    lengths = io.config_from_mapping({"segment_lengths": args.segment_lengths}).segment_lengths
    gt = accumulate(io.load_ground_truth(args.ground_truth))
    reports = {}
    for path in args.estimate:
        name = Path(path).stem.removeprefix("relative_")
        reports[name] = segment_errors(gt, accumulate(io.load_poses(path)), lengths)
        print(f"{name}: translational {reports[name].translational:.4f} %, rotational {reports[name].rotational:.6f} deg/m")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics(out / "metrics.csv", reports)
    return 0


def cmd_report(args) -> int:
    for path in report_from_dir(args.out_dir):
        print(path)
    return 0


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    result = run_pipeline(cfg)
    emit_report(result, cfg.out_dir)
    (Path(cfg.out_dir) / "run.cfg").write_text(io.dump_config(cfg), encoding="utf-8")
    for m, run in result.runs.items():
        line = f"{m.value:>9}: fallbacks {run.fallback_count}"
        if run.report is not None:
            line += f", translational {run.report.translational:.4f} %, rotational {run.report.rotational:.6f} deg/m"
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccodom", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, text in [
        ("simulate", cmd_simulate, "write a synthetic scan file and ground truth"),
        ("odometry", cmd_odometry, "estimate relative poses for each method"),
        ("pipeline", cmd_pipeline, "simulate or load, solve, evaluate and report"),
    ]:
        p = sub.add_parser(name, help=text)
        _add_config_flags(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("evaluate", help="segment errors of estimated relative poses")
    p.add_argument("--estimate", nargs="+", required=True, help="relative pose CSV(s)")
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--segment-lengths", default=",".join(str(x) for x in io.RunConfig().segment_lengths))
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render SVGs from CSVs in an output directory")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (OdometryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
