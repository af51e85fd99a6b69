"""Exception hierarchy shared by every module."""


class OdometryError(Exception):
    """Base class for all errors raised by this package."""


class NonArcPose(OdometryError, ValueError):
    """Pose does not lie on a constant-curvature arc chord."""


class DegenerateMatch(OdometryError):
    """The match gives no usable direction for the arc angle."""


class DegenerateGeometry(OdometryError):
    """Landmark geometry makes the turning radius undefined."""


class StraightMotion(OdometryError):
    """Arc angle is below the straight-line threshold; radius is infinite."""


class DegenerateConfiguration(OdometryError):
    """Too few, or too poorly spread, matches for a pose solve."""


class NoConsensus(OdometryError):
    """Compatibility graph has no consistent candidate set."""


class TrajectoryTooShort(OdometryError):
    """No evaluation segment fits inside the ground-truth path."""


class ConfigError(OdometryError, ValueError):
    """Invalid or inconsistent run configuration."""


class ParseError(OdometryError, ValueError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


class SchemaError(OdometryError, ValueError):
    """CSV header is missing a required column."""


class ValidationError(ParseError):
    """A parsed value breaks a record invariant."""
