"""Exception and warning types used across the package.

Per-pixel degeneracies (propagation poles, interpolation singularities inside
dense fields, splat holes) are reported through validity masks, not
exceptions. The exceptions below cover structural misuse: bad arguments,
malformed files, inconsistent shapes.
"""


class RsToolkitError(Exception):
    """Base class for all package errors."""


class ConfigError(RsToolkitError):
    """Scene config or CLI usage is malformed (unknown keys, bad ranges)."""


class NonPositiveDepth(RsToolkitError):
    """A depth value required by a point operation is <= 0."""


class DegenerateAcceleration(RsToolkitError):
    """Acceleration parameter k == -2, where the time weighting blows up."""


class InterpolationSingularity(RsToolkitError):
    """|h - gamma*pi_v| fell inside the singularity guard band."""


class DimensionMismatch(RsToolkitError):
    """Two gridded inputs that must share a shape do not."""


class WrongTargetScanline(RsToolkitError):
    """Correlation bounds were requested for a non-middle target scanline."""


class PlaneBehindCamera(RsToolkitError):
    """A render sample would hit the scene plane at nonpositive depth."""


class InsufficientData(RsToolkitError):
    """Too few valid pixels to set up an estimation problem."""


class RankDeficient(RsToolkitError):
    """The least-squares normal system is numerically singular."""


class NoConsensus(RsToolkitError):
    """Robust estimation found no model with the required inlier share."""


class EmptySearchRange(RsToolkitError):
    """A parameter search was given an empty or inverted interval."""


class EmptyMask(RsToolkitError):
    """A metric was asked to average over zero valid pixels."""


class MissingReference(RsToolkitError):
    """An operation that needs reference imagery was not given any."""


class MismatchedFrameSets(RsToolkitError):
    """Evaluation inputs do not pair up one-to-one."""


class BadMagic(RsToolkitError):
    """A binary file did not start with the expected magic value."""


class TruncatedFile(RsToolkitError):
    """A binary file ended before its declared payload."""


class UnsupportedVariant(RsToolkitError):
    """A file is valid but uses a variant this reader does not handle."""


class DecodeError(RsToolkitError):
    """An image file could not be decoded."""


class NonImprovingFitWarning(UserWarning):
    """A fitted parameter did no better than its trivial default."""
