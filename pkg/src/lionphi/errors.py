"""Exception types shared across the package."""


class DomainViolation(Exception):
    """Raised when a point lies outside the effective domain of a conjugate
    (beyond the configured tolerance), so no subgradient selection exists."""


class NumericError(RuntimeError):
    """Raised when an iteration produces non-finite values."""
