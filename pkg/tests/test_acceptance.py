"""Acceptance criteria, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per criterion
is printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from ccodom.evaluation import SYNTHETIC_LENGTHS, accumulate, segment_errors
from ccodom.geom2d import MotionParams, PolarObservation, Pose2
from ccodom.io import RunConfig
from ccodom.pipeline import run_pipeline
from ccodom.report import emit_report
from ccodom.simulator import (
    CorruptionSpec,
    TrajectorySegment,
    TrajectorySpec,
    WorldConfig,
    frame_matches,
    simulate_sequence,
)
from ccodom.single_match import MatchPair, estimate_arrays, estimate_single_match
from ccodom.solvers import ALL_METHODS, Method, SolverConfig, _kabsch, cc_solve, svd_align
from oracles import arc_end_pose, sight, to_local

ORDER = (Method.FULL_SVD, Method.RANSAC, Method.CC_QUANTILE_SVD, Method.CC_QUANTILE_MEANS)


def observed(end_pose, landmark):
    r0, b0 = sight((0.0, 0.0, 0.0), landmark)
    r1, b1 = sight(end_pose, landmark)
    return MatchPair(PolarObservation(r0, b0), PolarObservation(r1, b1))


def test_1_single_match_exactness(criterion):
    rng = np.random.default_rng(2024)
    cases = []
    while len(cases) < 1000:
        theta = rng.uniform(0.001, 0.6) * rng.choice([-1, 1])
        radius = rng.uniform(2, 500) * np.sign(theta)
        lm = rng.uniform(-120, 120, size=2)
        end = arc_end_pose(theta, radius)
        r0, b0 = sight((0, 0, 0), lm)
        # exclude degenerate geometry: landmark on the chord line, at either pose, or on the turning centre
        if r0 < 1 or math.hypot(lm[0] - end[0], lm[1] - end[1]) < 1 or math.hypot(lm[0], lm[1] - radius) < 1:
            continue
        if abs(math.sin(theta / 2 - b0)) < 0.05:
            continue
        cases.append((theta, radius, end, observed(end, lm)))

    start = time.perf_counter()
    estimates = [estimate_single_match(m) for *_, m in cases]
    elapsed = time.perf_counter() - start

    worst = 0.0
    for (theta, radius, end, _), est in zip(cases, estimates):
        worst = max(
            worst,
            abs(est.params.theta - theta) / abs(theta),
            abs(est.params.r_icr - radius) / abs(radius),
            math.dist(est.pose.as_tuple(), end) / math.hypot(*end),
        )
    ok = worst <= 1e-7 and elapsed < 1.0
    criterion(1, ok, f"{len(cases)} instances, worst relative error {worst:.2e}, {elapsed * 1000:.1f} ms")
    assert ok


def test_2_landmark_independence(criterion):
    seq = simulate_sequence(
        WorldConfig(3000, 600, 1),
        TrajectorySpec((TrajectorySegment(MotionParams.arc(0.02, 75.0), 1),)),
        CorruptionSpec(),
    )
    matches, _ = frame_matches(seq, CorruptionSpec(), 0)
    r0, b0, r1, b1 = np.array([(m.prev.range, m.prev.bearing, m.curr.range, m.curr.bearing) for m in matches]).T
    est = estimate_arrays(r0, b0, r1, b1)
    thetas = est["theta"][est["valid"]]
    spread = float(np.std(thetas, ddof=1))
    ok = len(thetas) >= 50 and spread <= 1e-9
    criterion(2, ok, f"{len(thetas)} landmarks, theta std {spread:.2e} rad")
    assert ok


def test_3_svd_oracle(criterion):
    rng = np.random.default_rng(3)
    worst_pose, bad_det = 0.0, 0
    for k in range(10_000):
        n = int(rng.integers(2, 30))
        pose = (rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-math.pi, math.pi))
        prev = rng.uniform(-80, 80, size=(n, 2))
        curr = to_local(pose, prev)
        if k % 2:
            # unrelated point sets, including mirror images, must still give a proper rotation
            curr = rng.normal(0, 20, size=(n, 2)) if k % 4 == 1 else prev * (1, -1)
            rot, _ = _kabsch(prev, curr)
            bad_det += abs(np.linalg.det(rot) - 1.0) > 1e-12
            continue
        rot, _ = _kabsch(prev, curr)
        bad_det += abs(np.linalg.det(rot) - 1.0) > 1e-12
        pairs = [
            MatchPair(PolarObservation(math.hypot(*p), math.atan2(p[1], p[0])), PolarObservation(math.hypot(*q), math.atan2(q[1], q[0])))
            for p, q in zip(prev, curr)
        ]
        g = svd_align(pairs)
        err = max(abs(g.dx - pose[0]), abs(g.dy - pose[1]), abs(math.remainder(g.dtheta - pose[2], 2 * math.pi)))
        worst_pose = max(worst_pose, err)
    ok = worst_pose <= 1e-9 and bad_det == 0
    criterion(3, ok, f"worst pose error {worst_pose:.2e}, {bad_det} of 10000 rotations with det != +1")
    assert ok


@pytest.fixture(scope="module")
def ordering_runs():
    start = time.perf_counter()
    errors = []
    for seed in range(10):
        res = run_pipeline(RunConfig(seed=seed, steps=500, evaluate=True))
        errors.append([res.runs[m].report.translational for m in ORDER])
    return np.array(errors), time.perf_counter() - start


@pytest.mark.slow
def test_4_method_ordering(ordering_runs, criterion):
    errors, elapsed = ordering_runs
    ordered = [bool(np.all(np.diff(row) <= 0)) for row in errors]
    ok = sum(ordered) >= 9 and elapsed < 120
    means = ", ".join(f"{m.value} {v:.3f}%" for m, v in zip(ORDER, errors.mean(axis=0)))
    criterion(4, ok, f"ordering held in {sum(ordered)}/10 sequences ({means}), {elapsed:.0f} s")
    assert ok


@pytest.mark.slow
def test_5_relative_reduction(ordering_runs, criterion):
    errors, _ = ordering_runs
    full, means = errors[:, 0].mean(), errors[:, 3].mean()
    reduction = 1.0 - means / full
    ok = reduction >= 0.40
    criterion(5, ok, f"cc_means {means:.3f}% vs full_svd {full:.3f}%: {100 * reduction:.1f}% reduction")
    assert ok


def test_6_metric_constructions(criterion):
    n = 200
    gt = accumulate([Pose2(1.0, 0.0, 0.0)] * n)
    scaled = segment_errors(gt, accumulate([Pose2(1.01, 0.0, 0.0)] * n), SYNTHETIC_LENGTHS)
    delta = 0.02
    biased = segment_errors(gt, accumulate([Pose2(1.0, 0.0, math.radians(delta))] * n), SYNTHETIC_LENGTHS)
    worst_t = max(abs(e.translational - 1.0) for e in scaled.per_length.values())
    worst_r = max(abs(e.rotational - delta) for e in biased.per_length.values())
    ok = worst_t <= 1e-9 and worst_r <= 1e-9 and len(scaled.per_length) == len(SYNTHETIC_LENGTHS)
    criterion(6, ok, f"scale error off by {worst_t:.1e} %, heading bias off by {worst_r:.1e} deg/m")
    assert ok


def constructed_frame(rng, n=50):
    """60% matches from one noise-free arc, the rest split between both theta extremes."""
    theta = rng.uniform(-0.05, 0.05)
    radius = rng.uniform(1.0, 2.0) / (2 * math.sin(theta / 2))
    end = arc_end_pose(theta, radius)
    n_in = int(0.6 * n)
    pairs, labels = [], []
    while len(pairs) < n_in:
        lm = rng.uniform(-150, 150, size=2)
        if math.hypot(*lm) < 5 or abs(math.sin(theta / 2 - math.atan2(lm[1], lm[0]))) < 0.05:
            continue
        pairs.append(observed(end, lm))
        labels.append(True)
    for k in range(n - n_in):
        side = 1.0 if k % 2 else -1.0
        t = side * rng.uniform(0.3, 1.0)
        bad_end = arc_end_pose(t, side * rng.uniform(2.0, 8.0))
        pairs.append(observed(bad_end, rng.uniform(-150, 150, size=2)))
        labels.append(False)
    order = rng.permutation(n)
    return [pairs[i] for i in order], [labels[i] for i in order]


def test_7_quantile_band_keeps_inliers(criterion):
    clean_trials = 0
    for trial in range(100):
        rng = np.random.default_rng(7000 + trial)
        pairs, labels = constructed_frame(rng)
        kept = cc_solve(pairs, SolverConfig(Method.CC_QUANTILE_MEANS, q_lo=0.35, q_hi=0.65)).inlier_ids
        clean_trials += bool(kept) and all(labels[i] for i in kept)
    ok = clean_trials == 100
    criterion(7, ok, f"band held only inliers in {clean_trials}/100 trials")
    assert ok


def test_8_zero_corruption_pipeline(criterion):
    cfg = RunConfig(seed=8, steps=500, range_sigma=0.0, bearing_sigma=0.0, outlier_fraction=0.0)
    res = run_pipeline(cfg)
    t = {m.value: res.runs[m].report.translational for m in ALL_METHODS}
    r = {m.value: res.runs[m].report.rotational for m in ALL_METHODS}
    ok = max(t.values()) < 0.1 and max(r.values()) < 1e-4
    criterion(8, ok, f"worst translational {max(t.values()):.2e} %, worst rotational {max(r.values()):.2e} deg/m")
    assert ok


def test_9_determinism(tmp_path, criterion):
    cfg = RunConfig(seed=5, steps=200)
    emit_report(run_pipeline(cfg), tmp_path / "a")
    emit_report(run_pipeline(cfg), tmp_path / "b")
    names = ["metrics.csv", "trajectory_est.csv", "trajectory_gt.csv"] + [f"relative_{m.value}.csv" for m in ALL_METHODS]
    differing = [n for n in names if (tmp_path / "a" / n).read_bytes() != (tmp_path / "b" / n).read_bytes()]
    ok = not differing
    criterion(9, ok, f"{len(names)} files compared, {len(differing)} differ")
    assert ok
