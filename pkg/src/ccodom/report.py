"""CSV and static SVG output for pipeline runs.

SVGs are written by hand (plain polylines and polygons) so the output is
byte-stable and easy to inspect structurally.
"""

from __future__ import annotations

import csv
from html import escape
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .evaluation import LengthError, SegmentErrorReport, Trajectory
from .geom2d import Pose2
from .io import load_poses, load_trajectory, write_csv, write_poses, write_trajectory

PALETTE = {
    "ground_truth": "#222222",
    "full_svd": "#d62728",
    "ransac": "#ff7f0e",
    "cc_svd": "#1f77b4",
    "cc_means": "#2ca02c",
}
METRIC_FIELDS = ("translational_pct", "rotational_deg_per_m", "translational_std", "rotational_std")


def _num(x: float) -> str:
    return f"{x:.3f}"


class _Canvas:
    """Maps data coordinates into one SVG panel."""

    def __init__(self, x0, y0, w, h, xlim, ylim, equal=False):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        (xa, xb), (ya, yb) = xlim, ylim
        if xb - xa <= 0:
            xa, xb = xa - 1, xb + 1
        if yb - ya <= 0:
            ya, yb = ya - 1, yb + 1
        if equal:
            span = max(xb - xa, yb - ya)
            cx, cy = (xa + xb) / 2, (ya + yb) / 2
            xa, xb, ya, yb = cx - span / 2, cx + span / 2, cy - span / 2, cy + span / 2
        self.xlim, self.ylim = (xa, xb), (ya, yb)

    def pts(self, xs, ys) -> str:
        (xa, xb), (ya, yb) = self.xlim, self.ylim
        px = self.x0 + (np.asarray(xs) - xa) / (xb - xa) * self.w
        py = self.y0 + self.h - (np.asarray(ys) - ya) / (yb - ya) * self.h
        return " ".join(f"{_num(a)},{_num(b)}" for a, b in zip(px, py))

    def frame(self, title, xlabel, ylabel) -> list[str]:
        (xa, xb), (ya, yb) = self.xlim, self.ylim
        return [
            f'<rect x="{self.x0}" y="{self.y0}" width="{self.w}" height="{self.h}" fill="none" stroke="#999"/>',
            f'<text x="{self.x0 + self.w / 2}" y="{self.y0 - 8}" text-anchor="middle" font-size="13">{escape(title)}</text>',
            f'<text x="{self.x0 + self.w / 2}" y="{self.y0 + self.h + 30}" text-anchor="middle" font-size="11">{escape(xlabel)}</text>',
            f'<text x="{self.x0 - 40}" y="{self.y0 + self.h / 2}" font-size="11" transform="rotate(-90 {self.x0 - 40} {self.y0 + self.h / 2})" text-anchor="middle">{escape(ylabel)}</text>',
            f'<text x="{self.x0}" y="{self.y0 + self.h + 14}" font-size="9">{xa:.4g}</text>',
            f'<text x="{self.x0 + self.w}" y="{self.y0 + self.h + 14}" font-size="9" text-anchor="end">{xb:.4g}</text>',
            f'<text x="{self.x0 - 4}" y="{self.y0 + self.h}" font-size="9" text-anchor="end">{ya:.4g}</text>',
            f'<text x="{self.x0 - 4}" y="{self.y0 + 9}" font-size="9" text-anchor="end">{yb:.4g}</text>',
        ]


def _svg(width, height, body: list[str]) -> str:
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>', *body, "</svg>", ""])


def _legend(x, y, names) -> list[str]:
    out = []
    for i, name in enumerate(names):
        colour = PALETTE.get(name, "#555")
        out.append(f'<line x1="{x}" y1="{y + 14 * i}" x2="{x + 18}" y2="{y + 14 * i}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{x + 22}" y="{y + 14 * i + 4}" font-size="10">{escape(name)}</text>')
    return out


def ground_trace_svg(gt: Trajectory | None, estimates: Mapping[str, Trajectory]) -> str:
    """Top-down trajectories: one polyline per method plus ground truth."""
    series = dict(estimates)
    arrays = [t.as_array() for t in series.values()]
    if gt is not None:
        arrays.append(gt.as_array())
    xy = np.vstack([a[:, :2] for a in arrays])
    c = _Canvas(60, 40, 520, 520, (xy[:, 0].min(), xy[:, 0].max()), (xy[:, 1].min(), xy[:, 1].max()), equal=True)
    body = c.frame("Ground trace", "x [m]", "y [m]")
    if gt is not None:
        a = gt.as_array()
        body.append(
            f'<polyline data-series="ground_truth" fill="none" stroke="{PALETTE["ground_truth"]}" '
            f'stroke-width="2" stroke-dasharray="6 3" points="{c.pts(a[:, 0], a[:, 1])}"/>'
        )
    for name, traj in series.items():
        a = traj.as_array()
        body.append(
            f'<polyline data-method="{escape(name)}" fill="none" stroke="{PALETTE.get(name, "#555")}" '
            f'stroke-width="1.5" points="{c.pts(a[:, 0], a[:, 1])}"/>'
        )
    names = (["ground_truth"] if gt is not None else []) + list(series)
    return _svg(700, 620, body + _legend(600, 60, names))


def segment_error_svg(reports: Mapping[str, SegmentErrorReport]) -> str:
    """Mean segment errors against segment length with +-1 std envelopes."""
    body: list[str] = []
    panels = [("translational", "translational_std", "Translational error", "[%]"),
              ("rotational", "rotational_std", "Rotational error", "[deg/m]")]
    for p, (mean_key, std_key, title, unit) in enumerate(panels):
        curves = {}
        for name, rep in reports.items():
            L = np.array(sorted(rep.per_length))
            mu = np.array([getattr(rep.per_length[l], mean_key) for l in L])
            sd = np.array([getattr(rep.per_length[l], std_key) for l in L])
            curves[name] = (L, mu, sd)
        if not curves:
            continue
        allL = np.concatenate([v[0] for v in curves.values()])
        lo = min(float((v[1] - v[2]).min()) for v in curves.values())
        hi = max(float((v[1] + v[2]).max()) for v in curves.values())
        c = _Canvas(70 + p * 420, 40, 340, 300, (allL.min(), allL.max()), (min(lo, 0.0), hi))
        body += c.frame(title, "segment length [m]", f"{title.split()[0]} {unit}")
        for name, (L, mu, sd) in curves.items():
            colour = PALETTE.get(name, "#555")
            env = c.pts(np.concatenate([L, L[::-1]]), np.concatenate([mu + sd, (mu - sd)[::-1]]))
            body.append(f'<polygon data-envelope="{escape(name)}" fill="{colour}" fill-opacity="0.15" stroke="none" points="{env}"/>')
            body.append(f'<polyline data-method="{escape(name)}" fill="none" stroke="{colour}" stroke-width="1.5" points="{c.pts(L, mu)}"/>')
    return _svg(880, 400, body + _legend(800, 60, list(reports)))


def lateral_motion_svg(gt: Sequence[Pose2] | None, estimates: Mapping[str, Sequence[Pose2]]) -> str:
    """Per-frame lateral displacement for each method against ground truth."""
    series = {name: np.array([p.dy for p in rel]) for name, rel in estimates.items()}
    if gt is not None:
        series = {"ground_truth": np.array([p.dy for p in gt]), **series}
    vals = np.concatenate([v for v in series.values() if len(v)] or [np.zeros(1)])
    n = max((len(v) for v in series.values()), default=1)
    c = _Canvas(70, 40, 720, 300, (0, max(n - 1, 1)), (float(vals.min()), float(vals.max())))
    body = c.frame("Lateral motion per frame", "frame", "dy [m]")
    for name, v in series.items():
        attr = "data-series" if name == "ground_truth" else "data-method"
        body.append(
            f'<polyline {attr}="{escape(name)}" fill="none" stroke="{PALETTE.get(name, "#555")}" '
            f'stroke-width="1" points="{c.pts(np.arange(len(v)), v)}"/>'
        )
    return _svg(900, 400, body + _legend(800, 60, list(series)))


def write_metrics(path, reports: Mapping[str, SegmentErrorReport]) -> Path:
    """One row per segment length plus an ``overall`` row; method metrics as columns."""
    names = list(reports)
    lengths = sorted({L for r in reports.values() for L in r.per_length})
    header = ["segment_length_m", "segment_count"] + [f"{n}_{f}" for n in names for f in METRIC_FIELDS]
    rows = []
    for L in lengths:
        first = next(r.per_length[L] for r in reports.values() if L in r.per_length)
        row: list = [L, first.segment_count]
        for n in names:
            e = reports[n].per_length.get(L)
            row += [e.translational, e.rotational, e.translational_std, e.rotational_std] if e else ["", "", "", ""]
        rows.append(row)
    overall: list = ["overall", next(iter(reports.values())).segment_count]
    for n in names:
        r = reports[n]
        overall += [r.translational, r.rotational, "", ""]
    rows.append(overall)
    return write_csv(path, header, rows)


def read_metrics(path) -> dict[str, dict[str, dict[str, float]]]:
    """``{method: {length_or_overall: {field: value}}}`` from a metrics CSV."""
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    # column order is the method order of the run
    methods = [k.removesuffix("_translational_pct") for k in rows[0] if k.endswith("_translational_pct")] if rows else []
    out: dict = {m: {} for m in methods}
    for row in rows:
        for m in methods:
            out[m][row["segment_length_m"]] = {
                f: float(row[f"{m}_{f}"]) for f in METRIC_FIELDS if row.get(f"{m}_{f}", "") != ""
            }
    return out


def emit_report(result, out_dir) -> list[Path]:
    """Write every CSV and SVG for a :class:`~ccodom.pipeline.PipelineResult`."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    names = {m.value: run for m, run in result.runs.items()}

    for name, run in names.items():
        written.append(write_poses(out / f"relative_{name}.csv", run.relative))
    written.append(write_estimated_trajectories(out / "trajectory_est.csv", {n: r.trajectory for n, r in names.items()}))
    if result.gt_trajectory is not None:
        written.append(write_trajectory(out / "trajectory_gt.csv", result.gt_trajectory))
        written.append(write_poses(out / "ground_truth.csv", result.gt_relative))

    reports = {n: r.report for n, r in names.items() if r.report is not None}
    if reports:
        written.append(write_metrics(out / "metrics.csv", reports))
    written.append(write_frame_diagnostics(out / "frames.csv", result))
    stride = result.config.theta_dump_stride
    if stride:
        for d in result.frames[::stride]:
            lo, hi = d.band
            rows = ((i, t, lo <= i < hi) for i, t in enumerate(d.sorted_thetas))
            written.append(write_csv(out / f"sorted_thetas_{d.frame}.csv", ("rank", "theta_rad", "in_band"), rows))

    svgs = {
        "ground_trace.svg": ground_trace_svg(result.gt_trajectory, {n: r.trajectory for n, r in names.items()}),
        "lateral_motion.svg": lateral_motion_svg(result.gt_relative, {n: r.relative for n, r in names.items()}),
    }
    if reports:
        svgs["segment_errors.svg"] = segment_error_svg(reports)
    for fname, text in svgs.items():
        path = out / fname
        path.write_text(text, encoding="utf-8", newline="\n")
        written.append(path)
    return written


def write_estimated_trajectories(path, trajectories: Mapping[str, Trajectory]) -> Path:
    rows = (
        (name, k, p.dx, p.dy, p.dtheta)
        for name, traj in trajectories.items()
        for k, p in enumerate(traj.poses)
    )
    return write_csv(path, ("method", "scan_index", "x_m", "y_m", "theta_rad"), rows)


def load_estimated_trajectories(path) -> dict[str, Trajectory]:
    poses: dict[str, list[Pose2]] = {}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            poses.setdefault(row["method"], []).append(
                Pose2(float(row["x_m"]), float(row["y_m"]), float(row["theta_rad"]))
            )
    return {k: Trajectory(v) for k, v in poses.items()}


def write_frame_diagnostics(path, result) -> Path:
    methods = [m.value for m in result.runs]
    header = ["frame", "match_count", "true_outliers", "band_lo", "band_hi"]
    header += [f"{m}_inliers" for m in methods] + [f"{m}_fallback" for m in methods]
    rows = []
    for d in result.frames:
        row = [d.frame, d.match_count, "" if d.true_outliers is None else d.true_outliers, *d.band]
        row += [d.inliers.get(m, 0) for m in result.runs]
        row += [d.fallback.get(m, False) for m in result.runs]
        rows.append(row)
    return write_csv(path, header, rows)


def report_from_dir(out_dir) -> list[Path]:
    """Re-render SVGs from CSVs already written to ``out_dir``."""
    out = Path(out_dir)
    est = load_estimated_trajectories(out / "trajectory_est.csv")
    gt = load_trajectory(out / "trajectory_gt.csv") if (out / "trajectory_gt.csv").exists() else None
    written = []
    p = out / "ground_trace.svg"
    p.write_text(ground_trace_svg(gt, est), encoding="utf-8", newline="\n")
    written.append(p)
    rel = {n: load_poses(out / f"relative_{n}.csv") for n in est if (out / f"relative_{n}.csv").exists()}
    gt_rel = load_poses(out / "ground_truth.csv") if (out / "ground_truth.csv").exists() else None
    if rel:
        p = out / "lateral_motion.svg"
        p.write_text(lateral_motion_svg(gt_rel, rel), encoding="utf-8", newline="\n")
        written.append(p)
    if (out / "metrics.csv").exists():
        p = out / "segment_errors.svg"
        p.write_text(segment_error_svg(_reports_from_metrics(out / "metrics.csv")), encoding="utf-8", newline="\n")
        written.append(p)
    return written


def _reports_from_metrics(path) -> dict[str, SegmentErrorReport]:
    table = read_metrics(path)
    reports = {}
    for m, rows in table.items():
        per = {
            float(k): LengthError(v["translational_pct"], v["rotational_deg_per_m"], 0, v.get("translational_std", 0.0), v.get("rotational_std", 0.0))
            for k, v in rows.items()
            if k != "overall"
        }
        ov = rows.get("overall", {})
        reports[m] = SegmentErrorReport(per, ov.get("translational_pct", 0.0), ov.get("rotational_deg_per_m", 0.0))
    return reports

