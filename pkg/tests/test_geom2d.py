import math

import pytest
from hypothesis import given, strategies as st

from ccodom.errors import NonArcPose
from ccodom.geom2d import (
    MotionParams,
    Point2,
    PolarObservation,
    Pose2,
    apply,
    cc_to_pose,
    chord_residual,
    compose,
    inverse,
    polar_to_point,
    pose_to_cc,
    wrap_angle,
)

coord = st.floats(-100, 100, allow_nan=False)
angle = st.floats(-math.pi, math.pi, allow_nan=False)
poses = st.builds(Pose2, coord, coord, angle)


def close(a: Pose2, b: Pose2, tol):
    return (
        abs(a.dx - b.dx) <= tol
        and abs(a.dy - b.dy) <= tol
        and abs(wrap_angle(a.dtheta - b.dtheta)) <= tol
    )


def test_compose_identity_left():
    g = Pose2(1.5, -2.0, 0.3)
    assert compose(Pose2.identity(), g) == g


def test_compose_hand_rotation():
    # R(pi/2) (1,0) + (1,0) = (1,1)
    g = compose(Pose2(1, 0, math.pi / 2), Pose2(1, 0, 0))
    assert close(g, Pose2(1, 1, math.pi / 2), 1e-12)


def test_inverse_examples():
    assert inverse(Pose2.identity()) == Pose2.identity()
    assert close(inverse(Pose2(1, 0, 0)), Pose2(-1, 0, 0), 0)
    assert close(inverse(Pose2(0, 0, 0.4)), Pose2(0, 0, -0.4), 0)


def test_apply_examples():
    assert apply(Pose2.identity(), Point2(3, 4)) == Point2(3, 4)
    q = apply(Pose2(0, 0, math.pi / 2), Point2(1, 0))
    assert q.x == pytest.approx(0, abs=1e-15) and q.y == pytest.approx(1)
    q = apply(Pose2(1, 1, math.pi), Point2(1, 0))
    assert q.x == pytest.approx(0, abs=1e-15) and q.y == pytest.approx(1)


def test_polar_to_point_examples():
    p = polar_to_point(PolarObservation(0.0, 2.0))
    assert (p.x, p.y) == (0.0, 0.0)
    assert polar_to_point(PolarObservation(2, 0)) == Point2(2, 0)
    p = polar_to_point(PolarObservation(math.sqrt(2), math.pi / 4))
    assert p.x == pytest.approx(1, abs=1e-15) and p.y == pytest.approx(1, abs=1e-15)


def test_cc_to_pose_examples():
    assert cc_to_pose(MotionParams.straight_line(1.4)).as_tuple() == (1.4, 0.0, 0.0)
    g = cc_to_pose(MotionParams.arc(0.1, 20))
    # 20 sin 0.1 and 20 (1 - cos 0.1)
    assert g.dx == pytest.approx(1.99667, abs=5e-6)
    assert g.dy == pytest.approx(0.09992, abs=5e-6)
    assert g.dtheta == 0.1


def test_cc_to_pose_straight_limit():
    for theta in (1e-2, 1e-4, 1e-6):
        g = cc_to_pose(MotionParams.arc(theta, 1.0 / theta))
        assert abs(g.dy / g.dx) < theta


def test_pose_to_cc_examples():
    m = pose_to_cc(Pose2(1.4, 0, 0))
    assert m.straight and m.rho_straight == pytest.approx(1.4)
    m = pose_to_cc(cc_to_pose(MotionParams.arc(0.1, 20)))
    assert m.theta == pytest.approx(0.1, rel=1e-12) and m.r_icr == pytest.approx(20, rel=1e-12)
    with pytest.raises(NonArcPose):
        pose_to_cc(Pose2(1, 1, math.pi / 4))


def test_value_validation():
    with pytest.raises(ValueError):
        PolarObservation(-1.0, 0.0)
    with pytest.raises(ValueError):
        Pose2(math.nan, 0, 0)
    with pytest.raises(ValueError):
        MotionParams(0.1, math.inf)


def test_wrap_angle_range():
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(2 * math.pi) == 0.0


@given(poses, poses, poses)
def test_compose_associative(a, b, c):
    assert close(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-12 * 1e3)


@given(poses)
def test_inverse_law(g):
    assert close(compose(g, inverse(g)), Pose2.identity(), 1e-12 * 1e3)
    assert close(compose(inverse(g), g), Pose2.identity(), 1e-12 * 1e3)


@given(poses, poses)
def test_dtheta_wrapped(a, b):
    assert -math.pi < compose(a, b).dtheta <= math.pi
    assert -math.pi < inverse(a).dtheta <= math.pi


@given(poses, poses, coord, coord)
def test_apply_respects_composition(a, b, x, y):
    p = Point2(x, y)
    lhs = apply(compose(a, b), p)
    rhs = apply(a, apply(b, p))
    assert math.hypot(lhs.x - rhs.x, lhs.y - rhs.y) <= 1e-12 * 1e3


@given(
    st.floats(-math.pi, math.pi).filter(lambda t: abs(t) > 1e-6),
    st.floats(1, 1000),
    st.booleans(),
)
def test_arc_round_trip(theta, radius, left):
    r = radius if left else -radius
    m = pose_to_cc(cc_to_pose(MotionParams.arc(theta, r)))
    assert not m.straight
    assert m.theta == pytest.approx(wrap_angle(theta), rel=1e-9)
    assert m.r_icr == pytest.approx(r, rel=1e-9)


@given(st.floats(-math.pi, math.pi).filter(lambda t: abs(t) > 1e-6), st.floats(-1000, 1000).filter(lambda r: abs(r) > 1))
def test_cc_pose_satisfies_chord_condition(theta, r):
    g = cc_to_pose(MotionParams.arc(theta, r))
    assert abs(chord_residual(g)) <= 1e-9 * max(1.0, abs(r))
