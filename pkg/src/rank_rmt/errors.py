"""Exception hierarchy shared by every module of the package."""


class RankRmtError(ValueError):
    """Base class for all package errors."""


class NonFiniteError(RankRmtError):
    pass


class TieError(RankRmtError):
    """Duplicate values in a column under the strict tie policy."""


class SampleTooSmall(RankRmtError):
    pass


class DimensionMismatch(RankRmtError):
    pass


class SizeTooLarge(RankRmtError):
    pass


class ZeroVarianceError(RankRmtError):
    pass


class SingularMatrixError(RankRmtError):
    pass


class ConvergenceFailure(RankRmtError):
    pass


class PoleError(RankRmtError):
    pass


class DomainError(RankRmtError):
    """A quantity is undefined for the requested aspect ratio or family."""


class SupportError(DomainError):
    """Evaluation point lies inside the support of the limiting law."""


class ZeroArgumentError(DomainError):
    pass


class CoincidentPointError(RankRmtError):
    pass


class QuadratureFailure(RankRmtError):
    pass


class ParseError(RankRmtError):
    pass


class AnalyticityWarning(RuntimeWarning):
    """The integrand was evaluated at (or next to) a singularity of f."""
