"""Exception types shared across the package."""


class CwpottsError(Exception):
    """Base class for all package-specific errors."""


class DomainError(CwpottsError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class NoSolutionError(CwpottsError, ValueError):
    """The requested root does not exist for the given temperature."""


class RegimeError(CwpottsError, ValueError):
    """The (q, beta) pair is outside the regime in which the quantity is defined."""


class SizeError(CwpottsError, ValueError):
    """A state space or grid exceeds the configured size cap."""


class ResolutionError(CwpottsError, RuntimeError):
    """Grid resolution is too coarse to separate the structures of interest."""


class StructuralError(CwpottsError, RuntimeError):
    """A linear system or graph structure violates a required property."""


class InvariantViolation(CwpottsError, RuntimeError):
    """A mathematically guaranteed invariant failed numerically; hard failure."""
