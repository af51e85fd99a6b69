"""Range-sensor odometry with constant-curvature match refinement."""

from .errors import (
    ConfigError,
    DegenerateConfiguration,
    DegenerateGeometry,
    DegenerateMatch,
    NoConsensus,
    NonArcPose,
    OdometryError,
    ParseError,
    SchemaError,
    StraightMotion,
    TrajectoryTooShort,
    ValidationError,
)
from .geom2d import (
    MotionParams,
    Point2,
    PolarObservation,
    Pose2,
    apply,
    cc_to_pose,
    compose,
    inverse,
    polar_to_point,
    pose_to_cc,
    wrap_angle,
)
from .single_match import (
    MatchPair,
    SingleMatchEstimate,
    estimate_ricr,
    estimate_single_match,
    estimate_theta,
)
from .solvers import Method, SolveResult, SolverConfig, cc_solve, quantile_subset, ransac_solve, solve, svd_align

__version__ = "0.1.0"
