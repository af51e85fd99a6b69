"""Ego-motion from a single landmark association under a constant-curvature constraint.

A landmark seen at ``(r0, b0)`` from the previous pose and at ``(r1, b1)``
from the current one fixes both the arc angle and the turning radius, if the
vehicle moved along a circular arc between the scans. Writing the landmark
position in both frames and rotating by half the arc angle gives

    r0 exp(i(b0 - theta/2)) = rho + r1 exp(i(b1 + theta/2))

whose imaginary part yields ``tan(theta/2)`` and whose real part (via the sine
rule) yields the chord ``rho = 2 R sin(theta/2)``:

    theta = 2 atan((r0/r1 sin b0 - sin b1) / (r0/r1 cos b0 + cos b1))
    R     = r1 sin(b0 - b1 - theta) / (2 sin(theta/2) sin(theta/2 - b0))

Bearings are counter-clockwise positive from the forward axis. With that
convention the closed forms above hold without any reflex-angle substitution;
``tests/test_single_match.py`` checks them against forward simulation.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateGeometry, DegenerateMatch, StraightMotion
from .geom2d import (
    STRAIGHT_THRESHOLD,
    MotionParams,
    PolarObservation,
    Pose2,
    cc_to_pose,
    wrap_angle,
)

DEGENERACY_THRESHOLD = 1e-12
STATIONARY_THRESHOLD = 1e-12


@dataclass(frozen=True, slots=True)
class MatchPair:
    prev: PolarObservation
    curr: PolarObservation
    prev_id: int = -1
    curr_id: int = -1

    def __post_init__(self):
        if self.prev.range <= 0.0 or self.curr.range <= 0.0:
            raise ValueError("match observations need strictly positive range")


@dataclass(frozen=True, slots=True)
class SingleMatchEstimate:
    params: MotionParams
    pose: Pose2
    source: MatchPair


def _fold_half_angle(half: float) -> float:
    # tan has period pi; keep theta/2 in (-pi/2, pi/2]
    if half > math.pi / 2.0:
        half -= math.pi
    elif half <= -math.pi / 2.0:
        half += math.pi
    return half


def estimate_theta(m: MatchPair) -> float:
    """Arc angle implied by one match."""
    r0, b0 = m.prev.range, m.prev.bearing
    r1, b1 = m.curr.range, m.curr.bearing
    ratio = r0 / r1
    num = ratio * math.sin(b0) - math.sin(b1)
    den = ratio * math.cos(b0) + math.cos(b1)
    if abs(num) < DEGENERACY_THRESHOLD and abs(den) < DEGENERACY_THRESHOLD:
        raise DegenerateMatch(f"arc direction undefined for {m}")
    return wrap_angle(2.0 * _fold_half_angle(math.atan2(num, den)))


def estimate_ricr(m: MatchPair, theta: float) -> float:
    """Signed turning radius (positive = left turn) for a match and its arc angle."""
    if abs(theta) < STRAIGHT_THRESHOLD:
        raise StraightMotion(f"|theta|={abs(theta):.3g} below straight threshold")
    b0, b1, r1 = m.prev.bearing, m.curr.bearing, m.curr.range
    half = theta / 2.0
    lever = math.sin(half - b0)
    if abs(lever) < DEGENERACY_THRESHOLD:
        raise DegenerateGeometry(f"landmark collinear with chord for {m}")
    return r1 * math.sin(b0 - b1 - theta) / (2.0 * math.sin(half) * lever)


def is_stationary(m: MatchPair) -> bool:
    return (
        abs(m.prev.range - m.curr.range) <= STATIONARY_THRESHOLD
        and abs(wrap_angle(m.prev.bearing - m.curr.bearing)) <= STATIONARY_THRESHOLD
    )


def estimate_single_match(m: MatchPair) -> SingleMatchEstimate:
    """Full relative pose from one match.

    Stationary matches give the identity. Below the straight-line threshold the
    forward displacement ``r0 cos b0 - r1 cos b1`` is used. Degenerate matches
    raise and are expected to be dropped by the caller.
    """
    if is_stationary(m):
        params = MotionParams.straight_line(0.0)
        return SingleMatchEstimate(params, Pose2.identity(), m)
    theta = estimate_theta(m)
    if abs(theta) < STRAIGHT_THRESHOLD:
        rho = m.prev.range * math.cos(m.prev.bearing) - m.curr.range * math.cos(m.curr.bearing)
        params = MotionParams.straight_line(rho)
    else:
        params = MotionParams.arc(theta, estimate_ricr(m, theta))
    return SingleMatchEstimate(params, cc_to_pose(params), m)


def estimate_arrays(r0, b0, r1, b1) -> dict[str, np.ndarray]:
    """Vectorised :func:`estimate_single_match` over many matches.

    Returns arrays ``theta, r_icr, straight, rho, dx, dy, dtheta, valid``.
    Degenerate entries have ``valid`` False and NaN elsewhere. Straight rows
    carry ``r_icr = inf``.
    """
    r0, b0, r1, b1 = (np.asarray(a, dtype=float) for a in (r0, b0, r1, b1))
    ratio = r0 / r1
    num = ratio * np.sin(b0) - np.sin(b1)
    den = ratio * np.cos(b0) + np.cos(b1)
    half = np.arctan2(num, den)
    half = np.where(half > np.pi / 2, half - np.pi, half)
    half = np.where(half <= -np.pi / 2, half + np.pi, half)
    theta = 2.0 * half
    theta = np.where(theta <= -np.pi, np.pi, theta)

    bdiff = np.remainder(b0 - b1 + np.pi, 2 * np.pi) - np.pi
    stationary = (np.abs(r0 - r1) <= STATIONARY_THRESHOLD) & (
        np.abs(bdiff) <= STATIONARY_THRESHOLD
    )
    no_direction = (np.abs(num) < DEGENERACY_THRESHOLD) & (np.abs(den) < DEGENERACY_THRESHOLD)
    straight = stationary | (np.abs(theta) < STRAIGHT_THRESHOLD)
    theta = np.where(straight, 0.0, theta)

    lever = np.sin(theta / 2 - b0)
    collinear = ~straight & (np.abs(lever) < DEGENERACY_THRESHOLD)
    valid = ~((no_direction & ~stationary) | collinear)

    with np.errstate(divide="ignore", invalid="ignore"):
        r_icr = r1 * np.sin(b0 - b1 - theta) / (2.0 * np.sin(theta / 2) * lever)
        rho_arc = 2.0 * r_icr * np.sin(theta / 2)
    rho_straight = np.where(stationary, 0.0, r0 * np.cos(b0) - r1 * np.cos(b1))
    rho = np.where(straight, rho_straight, rho_arc)
    r_icr = np.where(straight, np.inf, r_icr)

    dx = rho * np.cos(theta / 2)
    dy = rho * np.sin(theta / 2)
    dtheta = theta
    nan = np.nan
    return {
        "theta": np.where(valid, theta, nan),
        "r_icr": np.where(valid, r_icr, nan),
        "straight": straight & valid,
        "rho": np.where(valid, rho, nan),
        "dx": np.where(valid, dx, nan),
        "dy": np.where(valid, dy, nan),
        "dtheta": np.where(valid, dtheta, nan),
        "valid": valid,
    }
