"""Exception hierarchy shared by the library and the CLI."""


class GFRError(Exception):
    """Base class for all package errors."""


class ConfigError(GFRError, ValueError):
    """Invalid model, loss, sampler or experiment configuration."""


class DomainError(GFRError, ValueError):
    """Argument outside the domain of a density or hazard."""


class SampleError(GFRError, ValueError):
    """A censored sample violates its invariants."""


class TiedTimes(SampleError):
    pass


class Unordered(SampleError):
    pass


class BadCounts(SampleError):
    pass


class NonPositiveTime(SampleError):
    pass


class SampleParseError(SampleError):
    """Malformed sample file; the message carries the line number."""


class NumericalError(GFRError, ArithmeticError):
    """A numerical routine could not produce a finite answer."""


class Divergent(NumericalError):
    """A Phi sum contains a Gamma(0) term."""


class NonPositiveMarginal(NumericalError):
    pass


class CurvatureTooNegative(ConfigError):
    """Linex curvature pushes a shifted rate to zero or below."""


class ZeroDensity(NumericalError):
    pass


class EntropyRiskUndefined(NumericalError):
    """Entropy loss needs strictly positive estimates."""


class NonConvergence(NumericalError):
    pass


class DivergenceDetected(NumericalError):
    """Quadrature of a posterior moment grows without bound near an axis."""


class TooLarge(GFRError, ValueError):
    pass
