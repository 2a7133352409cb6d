"""Exception hierarchy shared by all modules.

Every error raised on purpose by the package derives from
:class:`PolycycleError`, so callers (notably the CLI) can separate numerical
failures from programming errors.
"""

from __future__ import annotations


class PolycycleError(Exception):
    """Base class for all package errors."""


class ConfigError(PolycycleError):
    """Invalid user input: family text, skeleton or run configuration."""


class NumericalError(PolycycleError):
    """A numerical procedure failed to deliver a result."""


# family ---------------------------------------------------------------------


class FamilySyntaxError(SyntaxError, ConfigError):
    """Malformed family text. ``lineno`` and ``offset`` point at the culprit."""

    def __init__(self, msg: str, text: str, lineno: int, offset: int):
        super().__init__(msg, ("<family>", lineno, offset, text))


class UnknownSymbol(ConfigError):
    pass


class DegreeOverflow(ConfigError):
    pass


class UnknownParameter(ConfigError):
    pass


class ChartSingularity(NumericalError):
    pass


class ProjectiveAtInfinity(ChartSingularity):
    """A true-time evaluation was requested on the line at infinity (v = 0)."""


# flow -----------------------------------------------------------------------


class StepLimitExceeded(NumericalError):
    pass


class BlowUp(NumericalError):
    pass


class SingularityReached(NumericalError):
    pass


class NoCrossing(NumericalError):
    pass


class TangentialCrossing(NumericalError):
    pass


# saddles --------------------------------------------------------------------


class NoConvergence(NumericalError):
    pass


class SingularJacobian(NumericalError):
    pass


class NotASaddle(NumericalError):
    pass


# return map / asymptotics ---------------------------------------------------


class DomainError(NumericalError, ValueError):
    pass


class InsufficientSamples(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


class OutsideExistenceRegion(NumericalError):
    pass


class NoSignChange(NumericalError):
    pass


class DegenerateExponent(NumericalError):
    pass


class PathOutsideW(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class NewtonDiverged(NumericalError):
    pass
