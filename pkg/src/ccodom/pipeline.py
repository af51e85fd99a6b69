"""Scan sequence -> associations -> per-method relative poses -> trajectories -> metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
from pathlib import Path

import numpy as np

from .association import LandmarkSet, associate, associate_by_id
from .errors import ConfigError, OdometryError
from .evaluation import SegmentErrorReport, Trajectory, accumulate, segment_errors
from .geom2d import Pose2
from .io import RunConfig, load_ground_truth, load_scans
from .simulator import corrupt_matches, random_trajectory_spec, simulate_sequence
from .single_match import estimate_arrays
from .solvers import MatchArrays, Method, quantile_band, solve

log = logging.getLogger(__name__)


@dataclass
class FrameDiagnostics:
    frame: int  # relative pose from scan `frame` to scan `frame + 1`
    match_count: int
    true_outliers: int | None
    inliers: dict[Method, int] = field(default_factory=dict)
    fallback: dict[Method, bool] = field(default_factory=dict)
    sorted_thetas: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    band: tuple[int, int] = (0, 0)


@dataclass
class MethodRun:
    method: Method
    relative: list[Pose2]
    trajectory: Trajectory
    report: SegmentErrorReport | None = None
    fallback_count: int = 0


@dataclass
class PipelineResult:
    config: RunConfig
    runs: dict[Method, MethodRun]
    frames: list[FrameDiagnostics]
    gt_relative: list[Pose2] | None
    gt_trajectory: Trajectory | None
    scans: list[LandmarkSet] = field(repr=False, default_factory=list)


def load_inputs(cfg: RunConfig) -> tuple[list[LandmarkSet], list[Pose2] | None]:
    """Scans and optional ground truth, from files or the simulator.

    Configuration problems are raised before any simulation or solving.
    """
    if cfg.simulated:
        if cfg.ground_truth is not None:
            raise ConfigError("ground_truth given without scans")
        spec = random_trajectory_spec(cfg.steps, cfg.seed, (cfg.speed_min, cfg.speed_max), cfg.max_turn)
        seq = simulate_sequence(cfg.world(), spec, cfg.corruption(), cfg.max_range)
        return seq.scans, seq.gt_relative
    if not Path(cfg.scans).is_file():
        raise ConfigError(f"scan file not found: {cfg.scans}")
    if cfg.evaluate and cfg.ground_truth is None:
        raise ConfigError("evaluation requested but no ground_truth file configured")
    if cfg.ground_truth is not None and not Path(cfg.ground_truth).is_file():
        raise ConfigError(f"ground truth file not found: {cfg.ground_truth}")
    scans = load_scans(cfg.scans)
    gt = load_ground_truth(cfg.ground_truth) if cfg.ground_truth is not None else None
    if gt is not None and len(gt) != len(scans) - 1:
        raise ConfigError(f"{len(scans)} scans need {len(scans) - 1} ground-truth poses, got {len(gt)}")
    return scans, gt


def frame_matches(cfg: RunConfig, prev: LandmarkSet, curr: LandmarkSet, frame: int):
    """Associate two scans, then apply the configured match corruption."""
    if cfg.association == "spectral":
        matches = associate(prev, curr, cfg.association_config())
    else:
        matches = associate_by_id(prev, curr)
    spec = cfg.corruption()
    if spec.outlier_fraction > 0:
        matches, labels = corrupt_matches(matches, spec, stream=frame)
        return matches, labels.count(False)
    return matches, None


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    """Run every configured method over the scan sequence.

    A frame whose association or solve fails repeats the method's previous
    relative pose (identity on the first frame) and is counted as a fallback.
    """
    scans, gt = load_inputs(cfg)
    if cfg.evaluate and gt is None:
        raise ConfigError("evaluation requested but no ground truth available")
    rel: dict[Method, list[Pose2]] = {m: [] for m in cfg.method}
    fallbacks = {m: 0 for m in cfg.method}
    frames: list[FrameDiagnostics] = []

    for k in range(len(scans) - 1):
        try:
            matches, n_out = frame_matches(cfg, scans[k], scans[k + 1], k)
        except OdometryError as exc:
            log.warning("frame %d: association failed (%s)", k, exc)
            matches, n_out = [], None
        arr = MatchArrays.from_pairs(matches)
        diag = FrameDiagnostics(k, len(arr), n_out)
        if len(arr):
            est = estimate_arrays(arr.r0, arr.b0, arr.r1, arr.b1)
            diag.sorted_thetas = np.sort(est["theta"][est["valid"]])
            if len(diag.sorted_thetas):
                diag.band = quantile_band(len(diag.sorted_thetas), cfg.q_lo, cfg.q_hi)
        for m in cfg.method:
            try:
                if len(arr) == 0:
                    raise OdometryError("no matches")
                result = solve(arr, cfg.solver_config(m, k), keep_estimates=False)
                pose, ok = result.pose, True
                diag.inliers[m] = len(result.inlier_ids)
            except OdometryError as exc:
                pose = rel[m][-1] if rel[m] else Pose2.identity()
                ok = False
                fallbacks[m] += 1
                diag.inliers[m] = 0
                log.warning("frame %d, %s: solver failed (%s); repeating previous motion", k, m.value, exc)
            diag.fallback[m] = not ok
            rel[m].append(pose)
        frames.append(diag)

    gt_traj = accumulate(gt) if gt is not None else None
    runs = {}
    for m in cfg.method:
        traj = accumulate(rel[m])
        report = segment_errors(gt_traj, traj, cfg.segment_lengths) if cfg.evaluate else None
        runs[m] = MethodRun(m, rel[m], traj, report, fallbacks[m])
    return PipelineResult(cfg, runs, frames, gt, gt_traj, scans)
