"""Synthetic worlds, constant-curvature trajectories, noisy scans and corrupted matches."""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Sequence

import numpy as np

from .association import LandmarkSet, associate_by_id
from .geom2d import MotionParams, PolarObservation, Pose2, cc_to_pose, compose
from .single_match import MatchPair

DEFAULT_MAX_RANGE = 165.0
STEP_PERIOD = 0.25


@dataclass(frozen=True)
class WorldConfig:
    landmark_count: int = 3000
    extent: float = 600.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.landmark_count < 1:
            raise ValueError("landmark_count must be >= 1")
        if self.extent <= 0:
            raise ValueError("extent must be positive")


@dataclass(frozen=True)
class TrajectorySegment:
    params: MotionParams
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("segment needs at least one step")


@dataclass(frozen=True)
class TrajectorySpec:
    segments: tuple[TrajectorySegment, ...]
    step_period: float = STEP_PERIOD

    @property
    def step_count(self) -> int:
        return sum(s.steps for s in self.segments)


@dataclass(frozen=True)
class CorruptionSpec:
    range_sigma: float = 0.0
    bearing_sigma: float = 0.0
    outlier_fraction: float = 0.0
    dynamic_object_count: int = 4
    dynamic_speed: float = 1.0
    misassociation_ratio: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if self.range_sigma < 0 or self.bearing_sigma < 0:
            raise ValueError("noise sigmas must be non-negative")
        if not 0.0 <= self.outlier_fraction < 1.0:
            raise ValueError("outlier_fraction must be in [0, 1)")
        if not 0.0 <= self.misassociation_ratio <= 1.0:
            raise ValueError("misassociation_ratio must be in [0, 1]")
        if self.dynamic_object_count < 1 or self.dynamic_speed < 0:
            raise ValueError("need >= 1 dynamic object and non-negative speed")


# stream tags keep the noise, corruption and world generators independent
_WORLD, _NOISE, _CORRUPT, _TRAJ = 11, 23, 37, 41


def _rng(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, tag, int(index)])


def generate_world(cfg: WorldConfig) -> np.ndarray:
    """``(n, 2)`` landmark positions, uniform in ``[-extent, extent]^2``."""
    rng = _rng(cfg.rng_seed, _WORLD)
    return rng.uniform(-cfg.extent, cfg.extent, size=(cfg.landmark_count, 2))


def relative_poses(spec: TrajectorySpec) -> list[Pose2]:
    out = []
    for seg in spec.segments:
        out.extend([cc_to_pose(seg.params)] * seg.steps)
    return out


def generate_trajectory(spec: TrajectorySpec) -> list[Pose2]:
    """World poses, starting at the identity, one per scan."""
    poses = [Pose2.identity()]
    for rel in relative_poses(spec):
        poses.append(compose(poses[-1], rel))
    return poses


def random_trajectory_spec(
    steps: int,
    seed: int,
    speed_range: tuple[float, float] = (1.0, 2.0),
    max_turn: float = 0.02,
    segment_steps: tuple[int, int] = (20, 60),
) -> TrajectorySpec:
    """Alternating straight and arc segments with seeded random curvature.

    ``max_turn`` bounds the arc angle per step (radians).
    """
    rng = _rng(seed, _TRAJ)
    segments = []
    remaining = steps
    straight = True
    while remaining > 0:
        n = int(min(remaining, rng.integers(segment_steps[0], segment_steps[1] + 1)))
        chord = float(rng.uniform(*speed_range))
        if straight:
            params = MotionParams.straight_line(chord)
        else:
            theta = float(rng.uniform(0.2, 1.0) * max_turn * rng.choice([-1.0, 1.0]))
            params = MotionParams.arc(theta, chord / (2.0 * math.sin(theta / 2.0)))
        segments.append(TrajectorySegment(params, n))
        remaining -= n
        straight = not straight
    return TrajectorySpec(tuple(segments))


def observe(
    pose: Pose2,
    world: np.ndarray,
    max_range: float = DEFAULT_MAX_RANGE,
    corruption: CorruptionSpec = CorruptionSpec(),
    scan_index: int = 0,
    step_period: float = STEP_PERIOD,
) -> LandmarkSet:
    """Landmarks within ``max_range`` as noisy polar observations in the sensor frame.

    Landmark ids are their row indices in ``world``.
    """
    world = np.asarray(world, dtype=float).reshape(-1, 2)
    c, s = math.cos(pose.dtheta), math.sin(pose.dtheta)
    rel = world - (pose.dx, pose.dy)
    x = c * rel[:, 0] + s * rel[:, 1]
    y = -s * rel[:, 0] + c * rel[:, 1]
    r = np.hypot(x, y)
    visible = np.flatnonzero((r <= max_range) & (r > 0.0))
    rng = _rng(corruption.rng_seed, _NOISE, scan_index)
    noise_r = rng.normal(0.0, 1.0, size=len(visible)) * corruption.range_sigma
    noise_b = rng.normal(0.0, 1.0, size=len(visible)) * corruption.bearing_sigma
    ranges = np.abs(r[visible] + noise_r)
    bearings = np.arctan2(y[visible], x[visible]) + noise_b
    bearings = np.remainder(bearings + np.pi, 2 * np.pi) - np.pi
    bearings = np.where(bearings <= -np.pi, np.pi, bearings)
    keep = ranges > 0
    return LandmarkSet(
        scan_index,
        ranges[keep],
        bearings[keep],
        visible[keep],
        timestamp=scan_index * step_period,
    )


def _polar(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.hypot(points[:, 0], points[:, 1]), np.arctan2(points[:, 1], points[:, 0])


def corrupt_matches(
    true_matches: Sequence[MatchPair], spec: CorruptionSpec, stream: int = 0
) -> tuple[list[MatchPair], list[bool]]:
    """Replace ``floor(outlier_fraction * n)`` matches with outliers.

    A ``misassociation_ratio`` share of the outliers re-pair a previous
    landmark with the current sighting of the landmark whose current range is
    closest to its own (ties to the lower index), mimicking a range-based
    descriptor confusing two returns. The rest become dynamic
    objects: the current sighting is displaced by ``dynamic_speed`` along the
    heading of one of ``dynamic_object_count`` objects, assigned round-robin so
    each object moves coherently. Returns the matches and inlier labels.
    """
    matches = list(true_matches)
    n = len(matches)
    n_out = int(math.floor(spec.outlier_fraction * n))
    labels = [True] * n
    if n_out == 0:
        return matches, labels
    rng = _rng(spec.rng_seed, _CORRUPT, stream)
    chosen = rng.choice(n, size=n_out, replace=False)
    n_mis = int(round(n_out * spec.misassociation_ratio)) if n > 1 else 0
    headings = rng.uniform(-math.pi, math.pi, size=spec.dynamic_object_count)
    curr_ranges = np.array([m.curr.range for m in true_matches])

    for k, i in enumerate(chosen):
        m = matches[i]
        if k < n_mis:
            gap = np.abs(curr_ranges - curr_ranges[i])
            gap[i] = np.inf
            partner = true_matches[int(np.argmin(gap))]
            matches[i] = MatchPair(m.prev, partner.curr, m.prev_id, partner.curr_id)
        else:
            h = headings[(k - n_mis) % spec.dynamic_object_count]
            p = np.array([[m.curr.range * math.cos(m.curr.bearing), m.curr.range * math.sin(m.curr.bearing)]])
            p += spec.dynamic_speed * np.array([math.cos(h), math.sin(h)])
            r, b = _polar(p)
            if r[0] <= 0.0:
                r[0] = 1e-6
            matches[i] = MatchPair(m.prev, PolarObservation(float(r[0]), float(b[0])), m.prev_id, m.curr_id)
        labels[i] = False
    return matches, labels


@dataclass
class SimulatedSequence:
    """Scans plus ground truth; ``gt_relative[k]`` moves scan k to scan k+1."""

    scans: list[LandmarkSet]
    gt_relative: list[Pose2]
    gt_world: list[Pose2] = field(default_factory=list)
    world: np.ndarray | None = None


def simulate_sequence(
    world_cfg: WorldConfig,
    trajectory: TrajectorySpec,
    corruption: CorruptionSpec,
    max_range: float = DEFAULT_MAX_RANGE,
) -> SimulatedSequence:
    world = generate_world(world_cfg)
    poses = generate_trajectory(trajectory)
    scans = [
        observe(p, world, max_range, corruption, k, trajectory.step_period)
        for k, p in enumerate(poses)
    ]
    return SimulatedSequence(scans, relative_poses(trajectory), poses, world)


def frame_matches(seq: SimulatedSequence, corruption: CorruptionSpec, frame: int) -> tuple[list[MatchPair], list[bool]]:
    """True matches between scans ``frame`` and ``frame + 1``, then corrupted."""
    true = associate_by_id(seq.scans[frame], seq.scans[frame + 1])
    return corrupt_matches(true, corruption, stream=frame)
