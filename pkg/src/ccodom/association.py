"""Landmark association between two scans by spectral matching.

Candidates come from a proximity gate in sensor coordinates. Two candidates
are compatible when they preserve the distance between their landmarks (rigid
motion keeps pairwise distances), and the principal eigenvector of the
compatibility matrix ranks candidates by how much consistent support they have.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoConsensus
from .geom2d import PolarObservation
from .single_match import MatchPair


@dataclass(frozen=True)
class LandmarkSet:
    """Landmarks of one scan, stored in polar form about the sensor origin."""

    scan_index: int
    ranges: np.ndarray
    bearings: np.ndarray
    ids: np.ndarray = None
    timestamp: float = 0.0

    def __post_init__(self):
        ranges = np.asarray(self.ranges, dtype=float).reshape(-1)
        bearings = np.asarray(self.bearings, dtype=float).reshape(-1)
        if ranges.shape != bearings.shape:
            raise ValueError("ranges and bearings must have equal length")
        if self.scan_index < 0:
            raise ValueError("scan_index must be non-negative")
        if not (np.all(np.isfinite(ranges)) and np.all(np.isfinite(bearings))):
            raise ValueError("landmark coordinates must be finite")
        ids = np.arange(len(ranges)) if self.ids is None else np.asarray(self.ids, dtype=int)
        if ids.shape != ranges.shape:
            raise ValueError("ids must match landmark count")
        object.__setattr__(self, "ranges", ranges)
        object.__setattr__(self, "bearings", bearings)
        object.__setattr__(self, "ids", ids)

    @classmethod
    def from_points(cls, scan_index: int, points, ids=None, timestamp: float = 0.0):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(
            scan_index,
            np.hypot(pts[:, 0], pts[:, 1]),
            np.arctan2(pts[:, 1], pts[:, 0]),
            ids,
            timestamp,
        )

    def __len__(self) -> int:
        return len(self.ranges)

    @property
    def points(self) -> np.ndarray:
        """Cartesian ``(n, 2)`` coordinates in the sensor frame."""
        return np.column_stack(
            (self.ranges * np.cos(self.bearings), self.ranges * np.sin(self.bearings))
        )

    def observation(self, i: int) -> PolarObservation:
        return PolarObservation(float(self.ranges[i]), float(self.bearings[i]))


@dataclass(frozen=True)
class CandidateGraph:
    prev: LandmarkSet
    curr: LandmarkSet
    candidates: list[tuple[int, int]]
    compatibility: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class AssociationConfig:
    gate_radius: float = 5.0
    epsilon: float = 0.5
    cutoff: float = 0.1
    tol: float = 1e-10
    max_iter: int = 1000


def unary_candidates(prev: LandmarkSet, curr: LandmarkSet, gate_radius: float) -> list[tuple[int, int]]:
    """All ``(i, j)`` with ``|prev_i - curr_j| <= gate_radius``, row-major order."""
    if gate_radius <= 0:
        raise ValueError("gate_radius must be positive")
    if len(prev) == 0 or len(curr) == 0:
        return []
    diff = prev.points[:, None, :] - curr.points[None, :, :]
    close = np.hypot(diff[..., 0], diff[..., 1]) <= gate_radius
    return [(int(i), int(j)) for i, j in zip(*np.nonzero(close))]


def build_compatibility(prev: LandmarkSet, curr: LandmarkSet, candidates, epsilon: float) -> CandidateGraph:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not candidates:
        raise ValueError("need at least one candidate")
    idx = np.asarray(candidates, dtype=int)
    p = prev.points[idx[:, 0]]
    q = curr.points[idx[:, 1]]
    dp = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1)
    dq = np.linalg.norm(q[:, None, :] - q[None, :, :], axis=-1)
    compat = (np.abs(dp - dq) <= epsilon).astype(float)
    # one-to-one: candidates sharing a landmark exclude each other
    shared = (idx[:, None, 0] == idx[None, :, 0]) | (idx[:, None, 1] == idx[None, :, 1])
    compat[shared] = 0.0
    return CandidateGraph(prev, curr, [tuple(map(int, c)) for c in idx], compat)


def principal_eigenvector(matrix: np.ndarray, tol: float = 1e-10, max_iter: int = 1000) -> np.ndarray:
    """Power iteration from the uniform vector; returns a non-negative unit vector."""
    n = matrix.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(max_iter):
        w = matrix @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return w
        w /= norm
        if np.linalg.norm(w - v) < tol:
            return w
        v = w
    return v


def select_matches(graph: CandidateGraph, cutoff: float = 0.1, tol: float = 1e-10, max_iter: int = 1000) -> list[MatchPair]:
    """Greedy one-to-one selection by descending eigenvector weight.

    Stops once the remaining weights fall below ``cutoff`` times the largest.
    Ties keep the lower candidate index.
    """
    if not np.any(graph.compatibility):
        raise NoConsensus("compatibility matrix is all zero")
    # shift by identity: same eigenvectors, but removes the bipartite
    # +/- eigenvalue pair that makes plain power iteration oscillate
    weights = principal_eigenvector(graph.compatibility + np.eye(len(graph.candidates)), tol, max_iter)
    order = np.argsort(-weights, kind="stable")
    floor = cutoff * weights[order[0]]
    used_prev, used_curr = set(), set()
    out = []
    for c in order:
        if weights[c] < floor:
            break
        i, j = graph.candidates[c]
        if i in used_prev or j in used_curr:
            continue
        used_prev.add(i)
        used_curr.add(j)
        out.append(
            MatchPair(
                graph.prev.observation(i),
                graph.curr.observation(j),
                int(graph.prev.ids[i]),
                int(graph.curr.ids[j]),
            )
        )
    return out


def associate(prev: LandmarkSet, curr: LandmarkSet, cfg: AssociationConfig = AssociationConfig()) -> list[MatchPair]:
    """Gate, score and select matches between two scans."""
    candidates = unary_candidates(prev, curr, cfg.gate_radius)
    if not candidates:
        raise NoConsensus("no candidates inside the gate")
    graph = build_compatibility(prev, curr, candidates, cfg.epsilon)
    return select_matches(graph, cfg.cutoff, cfg.tol, cfg.max_iter)


def associate_by_id(prev: LandmarkSet, curr: LandmarkSet) -> list[MatchPair]:
    """Pair landmarks that carry the same id in both scans."""
    where = {int(k): j for j, k in enumerate(curr.ids)}
    out = []
    for i, k in enumerate(prev.ids):
        j = where.get(int(k))
        if j is None or prev.ranges[i] <= 0 or curr.ranges[j] <= 0:
            continue
        out.append(MatchPair(prev.observation(i), curr.observation(j), int(k), int(k)))
    return out
