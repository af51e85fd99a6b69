"""Trajectory accumulation and distance-normalised segment errors.

For every start pose and every segment length ``L``, the segment ends at the
first pose whose ground-truth path length from the start reaches ``L``. The
error pose ``inv(gt_rel) @ est_rel`` is normalised by the actual ground-truth
length of that segment, so no interpolation is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Sequence

import numpy as np

from .errors import TrajectoryTooShort
from .geom2d import Pose2, compose

DEFAULT_LENGTHS = (100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0)
SYNTHETIC_LENGTHS = (10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0)


@dataclass(frozen=True)
class Trajectory:
    poses: list[Pose2]

    def __post_init__(self):
        if not self.poses:
            raise ValueError("trajectory needs at least one pose")

    def __len__(self) -> int:
        return len(self.poses)

    def as_array(self) -> np.ndarray:
        return np.array([p.as_tuple() for p in self.poses], dtype=float)


@dataclass(frozen=True)
class LengthError:
    translational: float  # percent
    rotational: float  # degrees per metre
    segment_count: int
    translational_std: float = 0.0
    rotational_std: float = 0.0
    total_length: float = 0.0


@dataclass(frozen=True)
class SegmentErrorReport:
    per_length: dict[float, LengthError]
    translational: float  # distance-weighted over every segment
    rotational: float
    total_length: float = field(default=0.0)

    @property
    def segment_count(self) -> int:
        return sum(e.segment_count for e in self.per_length.values())


def accumulate(rel_poses: Sequence[Pose2]) -> Trajectory:
    poses = [Pose2.identity()]
    for rel in rel_poses:
        poses.append(compose(poses[-1], rel))
    return Trajectory(poses)


def path_distances(traj: Trajectory) -> np.ndarray:
    xy = traj.as_array()[:, :2]
    steps = np.hypot(*np.diff(xy, axis=0).T)
    return np.concatenate(([0.0], np.cumsum(steps)))


def _relative(xyt: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Vectorised ``inv(pose_i) @ pose_j`` as ``(m, 3)`` rows."""
    c, s = np.cos(xyt[i, 2]), np.sin(xyt[i, 2])
    dx = xyt[j, 0] - xyt[i, 0]
    dy = xyt[j, 1] - xyt[i, 1]
    return np.column_stack((c * dx + s * dy, -s * dx + c * dy, xyt[j, 2] - xyt[i, 2]))


def _compose_inv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rows of ``inv(a) @ b``."""
    c, s = np.cos(a[:, 2]), np.sin(a[:, 2])
    dx, dy = b[:, 0] - a[:, 0], b[:, 1] - a[:, 1]
    dth = np.remainder(b[:, 2] - a[:, 2] + np.pi, 2 * np.pi) - np.pi
    return np.column_stack((c * dx + s * dy, -s * dx + c * dy, dth))


def segment_errors(gt: Trajectory, est: Trajectory, lengths: Sequence[float] = DEFAULT_LENGTHS) -> SegmentErrorReport:
    if len(gt) != len(est):
        raise ValueError(f"trajectory lengths differ: {len(gt)} vs {len(est)}")
    if len(gt) < 2:
        raise TrajectoryTooShort("need at least two poses")
    dist = path_distances(gt)
    g, e = gt.as_array(), est.as_array()
    starts = np.arange(len(gt))

    per_length: dict[float, LengthError] = {}
    all_t, all_r, all_w = [], [], []
    for length in lengths:
        ends = np.searchsorted(dist, dist + length - 1e-9, side="left")
        ok = ends < len(gt)
        i, j = starts[ok], ends[ok]
        if len(i) == 0:
            continue
        seg_len = dist[j] - dist[i]
        err = _compose_inv(_relative(g, i, j), _relative(e, i, j))
        t_err = np.hypot(err[:, 0], err[:, 1]) / seg_len * 100.0
        r_err = np.degrees(np.abs(err[:, 2])) / seg_len
        per_length[float(length)] = LengthError(
            float(t_err.mean()),
            float(r_err.mean()),
            int(len(i)),
            float(t_err.std()),
            float(r_err.std()),
            float(seg_len.sum()),
        )
        all_t.append(t_err)
        all_r.append(r_err)
        all_w.append(seg_len)
    if not per_length:
        raise TrajectoryTooShort(f"path length {dist[-1]:.3f} m shorter than {min(lengths)} m")
    w = np.concatenate(all_w)
    return SegmentErrorReport(
        per_length,
        float(np.average(np.concatenate(all_t), weights=w)),
        float(np.average(np.concatenate(all_r), weights=w)),
        float(w.sum()),
    )


def aggregate(reports: Sequence[SegmentErrorReport]) -> SegmentErrorReport:
    """Segment-count weighted average across sequences.

    Per-length standard deviations are pooled (within plus between sequences).
    """
    if not reports:
        raise ValueError("nothing to aggregate")
    lengths = sorted({L for r in reports for L in r.per_length})
    per_length = {}
    for L in lengths:
        items = [r.per_length[L] for r in reports if L in r.per_length]
        n = np.array([it.segment_count for it in items], dtype=float)
        t = np.array([it.translational for it in items])
        rr = np.array([it.rotational for it in items])
        t_mean, r_mean = float(np.average(t, weights=n)), float(np.average(rr, weights=n))
        t_var = np.average([it.translational_std**2 for it in items] + (t - t_mean) ** 2, weights=n)
        r_var = np.average([it.rotational_std**2 for it in items] + (rr - r_mean) ** 2, weights=n)
        per_length[L] = LengthError(
            t_mean,
            r_mean,
            int(n.sum()),
            float(math.sqrt(t_var)),
            float(math.sqrt(r_var)),
            float(sum(it.total_length for it in items)),
        )
    w = np.array([r.total_length for r in reports], dtype=float)
    if w.sum() <= 0:
        w = np.ones(len(reports))
    return SegmentErrorReport(
        per_length,
        float(np.average([r.translational for r in reports], weights=w)),
        float(np.average([r.rotational for r in reports], weights=w)),
        float(w.sum()),
    )
