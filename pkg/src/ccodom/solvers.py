"""Relative pose solvers over a set of matches.

Four strategies: plain SVD alignment over every match, RANSAC followed by SVD
over the consensus set, and two solvers that first keep only matches whose
single-match arc angle falls inside an inter-quantile band, then either run
SVD over them or average their individual poses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import enum
import math
from typing import Sequence

import numpy as np

from .errors import DegenerateConfiguration
from .geom2d import MotionParams, PolarObservation, Pose2
from .single_match import MatchPair, SingleMatchEstimate, estimate_arrays


class Method(str, enum.Enum):
    FULL_SVD = "full_svd"
    RANSAC = "ransac"
    CC_QUANTILE_SVD = "cc_svd"
    CC_QUANTILE_MEANS = "cc_means"


ALL_METHODS = tuple(Method)


@dataclass(frozen=True)
class SolverConfig:
    method: Method = Method.CC_QUANTILE_MEANS
    q_lo: float = 0.35
    q_hi: float = 0.65
    ransac_iters: int = 100
    ransac_base_thresh: float = 0.5
    ransac_range_coeff: float = 0.01
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not (0.0 <= self.q_lo < self.q_hi <= 1.0):
            raise ValueError(f"need 0 <= q_lo < q_hi <= 1, got {self.q_lo}, {self.q_hi}")
        if self.ransac_iters < 1:
            raise ValueError("ransac_iters must be >= 1")
        if self.ransac_base_thresh <= 0 or self.ransac_range_coeff < 0:
            raise ValueError("RANSAC thresholds must be positive")


@dataclass(frozen=True)
class SolveResult:
    pose: Pose2
    inlier_ids: list[int]
    per_match: list[SingleMatchEstimate] = field(default_factory=list, repr=False)
    thetas: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class MatchArrays:
    """Column view of a match list: polar and Cartesian coordinates per scan."""

    r0: np.ndarray
    b0: np.ndarray
    r1: np.ndarray
    b1: np.ndarray
    prev_ids: np.ndarray
    curr_ids: np.ndarray

    @classmethod
    def from_pairs(cls, pairs: Sequence[MatchPair]) -> MatchArrays:
        if isinstance(pairs, MatchArrays):
            return pairs
        cols = np.array(
            [(m.prev.range, m.prev.bearing, m.curr.range, m.curr.bearing) for m in pairs],
            dtype=float,
        ).reshape(-1, 4)
        ids = np.array([(m.prev_id, m.curr_id) for m in pairs], dtype=int).reshape(-1, 2)
        return cls(cols[:, 0], cols[:, 1], cols[:, 2], cols[:, 3], ids[:, 0], ids[:, 1])

    def __len__(self) -> int:
        return len(self.r0)

    @property
    def prev_points(self) -> np.ndarray:
        return np.column_stack((self.r0 * np.cos(self.b0), self.r0 * np.sin(self.b0)))

    @property
    def curr_points(self) -> np.ndarray:
        return np.column_stack((self.r1 * np.cos(self.b1), self.r1 * np.sin(self.b1)))

    def pair(self, i: int) -> MatchPair:
        return MatchPair(
            PolarObservation(float(self.r0[i]), float(self.b0[i])),
            PolarObservation(float(self.r1[i]), float(self.b1[i])),
            int(self.prev_ids[i]),
            int(self.curr_ids[i]),
        )

    def subset(self, idx) -> MatchArrays:
        idx = np.asarray(idx, dtype=int)
        return MatchArrays(*(a[idx] for a in (self.r0, self.b0, self.r1, self.b1, self.prev_ids, self.curr_ids)))


def _kabsch(prev_pts: np.ndarray, curr_pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rotation and translation minimising sum |prev - (R curr + t)|^2."""
    mu_p = prev_pts.mean(axis=0)
    mu_c = curr_pts.mean(axis=0)
    h = (curr_pts - mu_c).T @ (prev_pts - mu_p)
    u, s, vt = np.linalg.svd(h)
    if s[0] <= 1e-12 * max(1.0, np.abs(prev_pts).max(initial=0.0)):
        raise DegenerateConfiguration("matched points are coincident")
    d = np.sign(np.linalg.det(vt.T @ u.T)) or 1.0
    rot = vt.T @ np.diag([1.0, d]) @ u.T
    return rot, mu_p - rot @ mu_c


def svd_align(pairs) -> Pose2:
    """Least-squares rigid motion between the two scans of a match set.

    The returned pose maps current-frame points onto their previous-frame
    partners, i.e. it is the pose of the current scan in the previous frame.
    """
    arr = MatchArrays.from_pairs(pairs)
    if len(arr) < 2:
        raise DegenerateConfiguration(f"SVD alignment needs >= 2 matches, got {len(arr)}")
    rot, t = _kabsch(arr.prev_points, arr.curr_points)
    return Pose2(float(t[0]), float(t[1]), math.atan2(rot[1, 0], rot[0, 0]))


def alignment_residuals(pose: Pose2, arr: MatchArrays) -> np.ndarray:
    """Distance between each previous point and its transformed partner."""
    c, s = math.cos(pose.dtheta), math.sin(pose.dtheta)
    q = arr.curr_points
    px = pose.dx + c * q[:, 0] - s * q[:, 1]
    py = pose.dy + s * q[:, 0] + c * q[:, 1]
    p = arr.prev_points
    return np.hypot(p[:, 0] - px, p[:, 1] - py)


def full_svd_solve(pairs, cfg: SolverConfig | None = None) -> SolveResult:
    arr = MatchArrays.from_pairs(pairs)
    return SolveResult(svd_align(arr), list(range(len(arr))))


def ransac_solve(pairs, cfg: SolverConfig) -> SolveResult:
    """Two-point RANSAC with a range-compensated inlier threshold."""
    arr = MatchArrays.from_pairs(pairs)
    n = len(arr)
    if n < 2:
        raise DegenerateConfiguration(f"RANSAC needs >= 2 matches, got {n}")
    rng = np.random.default_rng(cfg.rng_seed)
    prev_pts, curr_pts = arr.prev_points, arr.curr_points
    thresh = cfg.ransac_base_thresh + cfg.ransac_range_coeff * arr.r0
    best: np.ndarray | None = None
    for _ in range(cfg.ransac_iters):
        sample = rng.choice(n, size=2, replace=False)
        try:
            rot, t = _kabsch(prev_pts[sample], curr_pts[sample])
        except DegenerateConfiguration:
            continue
        resid = np.linalg.norm(prev_pts - (curr_pts @ rot.T + t), axis=1)
        inliers = np.flatnonzero(resid <= thresh)
        if best is None or len(inliers) > len(best):
            best = inliers
    if best is None or len(best) < 2:
        raise DegenerateConfiguration("no RANSAC hypothesis reached two inliers")
    return SolveResult(svd_align(arr.subset(best)), best.tolist())


def quantile_band(n: int, q_lo: float, q_hi: float) -> tuple[int, int]:
    """Half-open rank band ``[lo, hi)`` kept out of ``n`` sorted values.

    ``lo = ceil(q_lo n)`` and ``hi = max(lo + 1, floor(q_hi n))``, clamped so the
    band is never empty. A 1e-9 slack absorbs products like ``0.35 * 20``
    landing just above an integer.
    """
    if n < 1:
        raise ValueError("need at least one value")
    lo = min(math.ceil(q_lo * n - 1e-9), n - 1)
    hi = min(max(lo + 1, math.floor(q_hi * n + 1e-9)), n)
    return lo, hi


def quantile_subset(estimates: Sequence[SingleMatchEstimate], q_lo: float, q_hi: float) -> list[int]:
    """Indices of the estimates whose sorted-theta rank lies in the band."""
    thetas = np.array([e.params.theta for e in estimates], dtype=float)
    return _quantile_indices(thetas, q_lo, q_hi).tolist()


def _quantile_indices(thetas: np.ndarray, q_lo: float, q_hi: float) -> np.ndarray:
    if not 0.0 <= q_lo < q_hi <= 1.0:
        raise ValueError("invalid quantile limits")
    order = np.argsort(thetas, kind="stable")
    lo, hi = quantile_band(len(thetas), q_lo, q_hi)
    return order[lo:hi]


def circular_mean(angles) -> float:
    angles = np.asarray(angles, dtype=float)
    return math.atan2(float(np.mean(np.sin(angles))), float(np.mean(np.cos(angles))))


def _to_estimates(arr: MatchArrays, est: dict, idx: np.ndarray) -> list[SingleMatchEstimate]:
    out = []
    for i in idx:
        if est["straight"][i]:
            params = MotionParams.straight_line(float(est["rho"][i]))
        else:
            params = MotionParams.arc(float(est["theta"][i]), float(est["r_icr"][i]))
        pose = Pose2(float(est["dx"][i]), float(est["dy"][i]), float(est["dtheta"][i]))
        out.append(SingleMatchEstimate(params, pose, arr.pair(int(i))))
    return out


def cc_solve(pairs, cfg: SolverConfig, keep_estimates: bool = True) -> SolveResult:
    """Constant-curvature quantile selection followed by SVD or pose averaging.

    The averaged pose is not projected back onto an arc.
    """
    if cfg.method not in (Method.CC_QUANTILE_SVD, Method.CC_QUANTILE_MEANS):
        raise ValueError(f"cc_solve does not handle {cfg.method}")
    arr = MatchArrays.from_pairs(pairs)
    if len(arr) == 0:
        raise DegenerateConfiguration("no matches")
    est = estimate_arrays(arr.r0, arr.b0, arr.r1, arr.b1)
    usable = np.flatnonzero(est["valid"])
    if len(usable) == 0:
        raise DegenerateConfiguration("every match was degenerate")
    band = usable[_quantile_indices(est["theta"][usable], cfg.q_lo, cfg.q_hi)]
    per_match = _to_estimates(arr, est, usable) if keep_estimates else []
    thetas = np.sort(est["theta"][usable])

    if cfg.method is Method.CC_QUANTILE_MEANS:
        pose = Pose2(
            float(np.mean(est["dx"][band])),
            float(np.mean(est["dy"][band])),
            circular_mean(est["dtheta"][band]),
        )
    else:
        if len(band) < 2:
            raise DegenerateConfiguration(f"quantile band kept {len(band)} match(es); SVD needs 2")
        pose = svd_align(arr.subset(band))
    return SolveResult(pose, sorted(band.tolist()), per_match, thetas)


def solve(pairs, cfg: SolverConfig, keep_estimates: bool = True) -> SolveResult:
    """Dispatch on ``cfg.method``."""
    if cfg.method is Method.FULL_SVD:
        return full_svd_solve(pairs, cfg)
    if cfg.method is Method.RANSAC:
        return ransac_solve(pairs, cfg)
    return cc_solve(pairs, cfg, keep_estimates)
