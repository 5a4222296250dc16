"""Exception types raised by radarcs.

The CLI maps these onto exit codes: validation errors exit 2, IO errors
exit 3 and hard solver failures exit 4.
"""

from __future__ import annotations


class RadarCsError(Exception):
    """Base class for all radarcs errors."""


class ConfigurationError(RadarCsError, ValueError):
    """Inconsistent configuration, e.g. block dims that do not divide the frame."""


class ParameterError(RadarCsError, ValueError):
    """An operation was called with parameters outside its domain."""


class DimensionError(RadarCsError, ValueError):
    """Vector or frame shapes do not agree."""


class SceneIOError(RadarCsError, OSError):
    """A scene, frame or detections file is missing or malformed."""


class SolverFailure(RadarCsError, RuntimeError):
    """One or more block reconstructions raised instead of returning a Recovery."""
