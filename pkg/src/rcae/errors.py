"""Exception types raised across the package."""


class RcaeError(Exception):
    """Base class for all package errors."""


class NotSkewError(RcaeError, ValueError):
    """Matrix is not skew-symmetric within tolerance."""


class DegenerateError(RcaeError, ValueError):
    """Matrix cannot be projected onto SO(3)."""


class DegenerateGeometryError(RcaeError, ValueError):
    """Accelerometer and magnetometer directions are (anti)parallel or zero."""


class GimbalLockError(RcaeError, ValueError):
    """Euler-321 conversion is at the pitch = +-90 deg singularity."""


class SingularInnovationError(RcaeError, ArithmeticError):
    """Innovation matrix of an update is numerically singular."""


class ConfigError(RcaeError, ValueError):
    """Invalid configuration value or file."""


class MalformedRecordError(RcaeError, ValueError):
    """An input log row cannot be used."""

    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason
