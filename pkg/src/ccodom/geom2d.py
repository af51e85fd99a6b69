"""SE(2) pose algebra and the constant-curvature arc parametrisation.

Angles are counter-clockwise positive, measured from the sensor's forward
(+x) axis, and wrapped to (-pi, pi].
"""

from __future__ import annotations

from dataclasses import dataclass
import math

from .errors import NonArcPose

STRAIGHT_THRESHOLD = 1e-9
CHORD_TOLERANCE = 1e-9


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        return math.pi
    return wrapped


def _require_finite(name: str, *values: float) -> None:
    if not all(math.isfinite(v) for v in values):
        raise ValueError(f"{name} fields must be finite, got {values}")


@dataclass(frozen=True, slots=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        _require_finite("Point2", self.x, self.y)


@dataclass(frozen=True, slots=True)
class Pose2:
    """Rigid transform in the plane.

    Used both as a relative motion (pose of scan k expressed in the frame of
    scan k-1) and as a world pose.
    """

    dx: float = 0.0
    dy: float = 0.0
    dtheta: float = 0.0

    def __post_init__(self):
        _require_finite("Pose2", self.dx, self.dy, self.dtheta)
        object.__setattr__(self, "dtheta", wrap_angle(float(self.dtheta)))

    @classmethod
    def identity(cls) -> Pose2:
        return cls(0.0, 0.0, 0.0)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dtheta)

    def __matmul__(self, other: Pose2) -> Pose2:
        return compose(self, other)


@dataclass(frozen=True, slots=True)
class PolarObservation:
    range: float
    bearing: float

    def __post_init__(self):
        _require_finite("PolarObservation", self.range, self.bearing)
        if self.range < 0.0:
            raise ValueError(f"range must be non-negative, got {self.range}")
        object.__setattr__(self, "bearing", wrap_angle(float(self.bearing)))


@dataclass(frozen=True, slots=True)
class MotionParams:
    """Constant-curvature motion between two scans.

    ``r_icr`` is the signed distance to the instantaneous centre of rotation
    (positive to the left). Straight motion sets ``straight`` and carries the
    travelled distance in ``rho_straight``; ``r_icr`` is then ``inf``.
    """

    theta: float
    r_icr: float = math.inf
    straight: bool = False
    rho_straight: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))
        if self.straight:
            if math.isfinite(self.r_icr):
                raise ValueError("straight motion must not carry a finite r_icr")
            _require_finite("MotionParams", self.rho_straight)
        elif not math.isfinite(self.r_icr):
            raise ValueError("arc motion needs a finite r_icr")

    @classmethod
    def arc(cls, theta: float, r_icr: float) -> MotionParams:
        return cls(theta=theta, r_icr=r_icr)

    @classmethod
    def straight_line(cls, rho: float) -> MotionParams:
        return cls(theta=0.0, r_icr=math.inf, straight=True, rho_straight=rho)

    @property
    def chord(self) -> float:
        """Signed straight-line distance between the two poses."""
        if self.straight:
            return self.rho_straight
        return 2.0 * self.r_icr * math.sin(self.theta / 2.0)


def compose(a: Pose2, b: Pose2) -> Pose2:
    c, s = math.cos(a.dtheta), math.sin(a.dtheta)
    return Pose2(
        a.dx + c * b.dx - s * b.dy,
        a.dy + s * b.dx + c * b.dy,
        a.dtheta + b.dtheta,
    )


def inverse(g: Pose2) -> Pose2:
    c, s = math.cos(g.dtheta), math.sin(g.dtheta)
    return Pose2(-(c * g.dx + s * g.dy), s * g.dx - c * g.dy, -g.dtheta)


def between(a: Pose2, b: Pose2) -> Pose2:
    """Pose of ``b`` expressed in the frame of ``a``."""
    return compose(inverse(a), b)


def apply(g: Pose2, p: Point2) -> Point2:
    """Rotate ``p`` by ``g.dtheta`` then translate by ``(g.dx, g.dy)``."""
    c, s = math.cos(g.dtheta), math.sin(g.dtheta)
    return Point2(g.dx + c * p.x - s * p.y, g.dy + s * p.x + c * p.y)


def polar_to_point(o: PolarObservation) -> Point2:
    return Point2(o.range * math.cos(o.bearing), o.range * math.sin(o.bearing))


def point_to_polar(p: Point2) -> PolarObservation:
    return PolarObservation(math.hypot(p.x, p.y), math.atan2(p.y, p.x))


def cc_to_pose(m: MotionParams) -> Pose2:
    """Pose reached after traversing the arc described by ``m``.

    The end point lies on the chord at half the arc angle:
    ``(rho cos(theta/2), rho sin(theta/2))`` with ``rho = 2 R sin(theta/2)``.
    """
    if m.straight:
        return Pose2(m.rho_straight, 0.0, 0.0)
    half = m.theta / 2.0
    rho = 2.0 * m.r_icr * math.sin(half)
    return Pose2(rho * math.cos(half), rho * math.sin(half), m.theta)


def chord_residual(g: Pose2) -> float:
    """Lateral offset of ``g`` from the chord direction ``theta/2``.

    Zero exactly when ``g`` lies on a constant-curvature arc.
    """
    half = g.dtheta / 2.0
    return g.dy * math.cos(half) - g.dx * math.sin(half)


def pose_to_cc(g: Pose2, tol: float = CHORD_TOLERANCE) -> MotionParams:
    """Constant-curvature parameters of an arc-chord pose.

    Raises :class:`NonArcPose` if ``g`` is not reachable along a single arc.
    """
    scale = max(1.0, math.hypot(g.dx, g.dy))
    if abs(chord_residual(g)) > tol * scale:
        raise NonArcPose(f"{g} does not satisfy dy/dx = tan(dtheta/2)")
    if abs(g.dtheta) < STRAIGHT_THRESHOLD:
        return MotionParams.straight_line(g.dx)
    half = g.dtheta / 2.0
    rho = g.dx * math.cos(half) + g.dy * math.sin(half)
    return MotionParams.arc(g.dtheta, rho / (2.0 * math.sin(half)))
