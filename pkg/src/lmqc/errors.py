"""Exception types shared across the package."""


class LMQCError(Exception):
    """Base class for library errors."""


class GridError(LMQCError, ValueError):
    """A wavepacket does not fit on, or is incompatible with, a time grid."""


class ParameterError(LMQCError, ValueError):
    """A physical parameter lies outside its validity range."""


class ConvergenceError(LMQCError, RuntimeError):
    """Numerical integration or quadrature failed to converge."""


class UnknownScenarioError(LMQCError, KeyError):
    """Scenario name not registered with the runner."""
