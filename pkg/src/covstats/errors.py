"""Exception types shared across the package."""


class CovstatsError(Exception):
    """Base class for all package errors."""


class GridError(CovstatsError):
    """Window extents or spacing are inconsistent."""


class EmptyErosion(CovstatsError):
    """The eroded window W minus t contains no pixel centre."""


class BallOutsideWindow(CovstatsError):
    """A requested ball B(x, t) is not contained in the window."""


class GridMismatch(CovstatsError):
    """Two objects live on different grids or t-vectors."""


class RangeViolation(CovstatsError):
    """A field value left its admissible range."""


class EmbeddingFailure(CovstatsError):
    """Circulant embedding is not non-negative definite and no fallback applies."""


class NonConvergence(CovstatsError):
    """An iterative sampler hit its iteration cap without coalescing."""


class DegenerateP1(CovstatsError):
    """A coverage function value is too close to zero to reweight by."""


class TooFewReplicates(CovstatsError):
    """Plug-in estimation needs at least two replicates."""


class ZeroDenominator(CovstatsError):
    """An estimator denominator vanished on the eroded window."""


class NoConditioningPixels(CovstatsError):
    """Conditional statistic requested but no pixel satisfies the condition."""


class QuadratureFailure(CovstatsError):
    """Numerical integration did not reach the requested tolerance."""


class ConfigError(CovstatsError):
    """Experiment configuration is malformed."""


class FormatError(CovstatsError):
    """A serialized field or curve file is malformed."""
