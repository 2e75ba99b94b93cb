"""Exception types shared across the library."""


class DimensionError(ValueError):
    """Array shapes or size parameters are inconsistent."""


class DomainError(ValueError):
    """A numeric input lies outside an operation's domain."""


class ParameterError(ValueError):
    """Invalid algorithm parameter (step size, tolerance, damping, ...)."""


class DegenerateChannelError(ValueError):
    """The channel instance makes the requested quantity undefined."""


class FeasibilityError(RuntimeError):
    """A QoS / rate-target instance is infeasible.

    Carries the spectral radius that certified infeasibility when one is
    available.
    """

    def __init__(self, message, rho=None):
        super().__init__(message)
        self.rho = rho


class NonSmoothUtilityError(ValueError):
    """A smooth-only solver was handed a non-smooth utility."""


class CapabilityError(RuntimeError):
    """An exact procedure would exceed its supported problem size."""


class ConfigError(ValueError):
    """Invalid experiment or CLI configuration."""
