"""Exception hierarchy for tenuniq.

Every error raised on purpose by the package derives from ``TenuniqError``;
the CLI maps ``NumericalError`` to exit code 2 and everything else to 1.
"""


class TenuniqError(Exception):
    """Base class for all tenuniq errors."""


class DimensionError(TenuniqError, ValueError):
    """Shapes, modes, indices or compound orders that do not fit together."""


class NumericalError(TenuniqError, ArithmeticError):
    """A LAPACK routine failed to converge or produced non-finite output."""


class AlsDivergenceError(NumericalError):
    """ALS iterates became non-finite."""


class KRankLimitError(TenuniqError):
    """k-rank requested for a matrix with more columns than the configured cap."""


class FormDisagreementError(TenuniqError):
    """The radical form and the m-form of a bound gave different answers."""


class NotSymmetricError(TenuniqError, ValueError):
    """A symmetric-frontal-slice operation received a non-SFS tensor."""


class FactorFileError(TenuniqError):
    """A factor file is unreadable, malformed or inconsistent."""


class ConfigError(TenuniqError):
    """A configuration override file is unreadable or invalid."""
