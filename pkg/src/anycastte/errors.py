"""Exception hierarchy shared across the package."""


class AnycastError(Exception):
    """Base class for all package-specific errors."""


class TopologyError(AnycastError):
    """Malformed or inconsistent topology input."""


class ValidationError(TopologyError):
    """A structural invariant was violated; the message names the invariant."""


class PolicyError(AnycastError):
    """Invalid routing policy or policy operation."""


class ConvergenceError(AnycastError):
    """Route computation failed to reach a fixed point."""


class EstimationError(AnycastError):
    """Estimator preconditions not met (e.g. no known-good traffic expected)."""


class TraceError(AnycastError):
    """Malformed replay trace or scenario specification."""
