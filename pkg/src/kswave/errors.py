"""Exception hierarchy shared by every kswave module."""


class KSWaveError(Exception):
    """Base class for all library errors."""


class NonPositiveParameter(KSWaveError, ValueError):
    def __init__(self, field, value):
        self.field = field
        self.value = value
        super().__init__(f"parameter {field!r} must be positive (got {value!r})")


class DiffusionExceedsChi(KSWaveError, ValueError):
    """The closed-form wave needs 0 < D_w < chi."""


class DiffusionZero(KSWaveError, ValueError):
    """D_w = 0: use the shock limit instead of the closed form."""


class SingularState(KSWaveError, ValueError):
    """u is (numerically) zero; the chemotactic term w/u is undefined."""


class NegativeUTilde(KSWaveError, ValueError):
    pass


class OnIntersection(KSWaveError, ValueError):
    """Both critical-manifold branches meet at the origin, which is not hyperbolic."""


class NonPositiveBeta(KSWaveError, ValueError):
    pass


class NoLanding(KSWaveError, RuntimeError):
    """A fast trajectory never reached the attracting branch."""


class BlowUp(KSWaveError, RuntimeError):
    """w exceeded its cap; usually the displacement has the wrong sign."""


class DegenerateDenominator(KSWaveError, ValueError):
    pass


class StepSizeUnderflow(KSWaveError, RuntimeError):
    pass


class MaxStepsExceeded(KSWaveError, RuntimeError):
    pass


class EventNotBracketed(KSWaveError, RuntimeError):
    pass


class FitIllConditioned(KSWaveError, ValueError):
    pass


class UnstableStep(KSWaveError, RuntimeError):
    pass


class LevelNotCrossed(KSWaveError, ValueError):
    pass


class FrontLeftDomain(KSWaveError, ValueError):
    pass


class NoOverlap(KSWaveError, ValueError):
    pass


class ConfigError(KSWaveError, ValueError):
    pass


class UnknownKey(ConfigError):
    pass


class TypeMismatch(ConfigError):
    pass


class MissingCommand(ConfigError):
    pass
