"""Exception types raised by the library."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class InfeasibleCorrelationError(DomainError):
    """The correlation pair does not give a valid source/relay covariance."""


class InfeasibleRateError(DomainError):
    """The requested rate cannot be carried over the source-relay link."""
