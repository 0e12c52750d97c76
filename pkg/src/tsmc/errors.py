"""Exception types shared across the simulator."""


class TSMCError(Exception):
    """Base class for simulator errors."""


class ConfigError(TSMCError, ValueError):
    """Invalid argument or configuration (CLI exit code 2)."""


class PreconditionError(ConfigError):
    """An operation was called outside its mathematical preconditions."""


class ContractViolation(ConfigError):
    """A caller passed a value that breaks an interface contract."""


class NumericsError(TSMCError, ArithmeticError):
    """A numerical procedure failed or produced an invalid state (exit code 3)."""


class ModelError(NumericsError):
    """The channel model does not satisfy an assumption (e.g. unimodal pulse)."""


class TapError(ModelError):
    """Sampled taps are not strictly decreasing and positive."""


class DivergenceError(NumericsError):
    """An iterative search exceeded its hard cap."""


class SingularChannelError(NumericsError):
    """The leading channel tap is zero, so the channel cannot be inverted."""


class EstimationError(NumericsError):
    """A Monte Carlo estimate did not reach its target precision."""
