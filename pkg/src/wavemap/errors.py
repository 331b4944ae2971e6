"""Exception hierarchy shared by all wavemap modules."""


class WavemapError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(WavemapError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class NumericalError(WavemapError):
    """Failure of the numerics (as opposed to bad input)."""

    def __init__(self, message, t=None):
        self.t = t
        if t is not None:
            message = f"{message} (t={t:.17g})"
        super().__init__(message)


# manifold
class SingularProjection(WavemapError):
    pass


class OffManifold(WavemapError):
    pass


class NonTangent(WavemapError):
    pass


# grid
class BadResolution(WavemapError):
    pass


class NonIntegrableWeight(WavemapError):
    pass


# solver
class SupportViolation(WavemapError):
    pass


class CflViolation(NumericalError):
    pass


class NumericalBlowup(NumericalError):
    pass


# gauge
class DegenerateFrame(NumericalError):
    pass


class FrameMismatch(WavemapError):
    pass


# estimates
class DegenerateProfile(WavemapError):
    pass


# divcurl
class InvariantViolation(WavemapError):
    pass


class NegativeFlux(NumericalError):
    pass
