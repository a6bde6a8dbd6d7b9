"""Exception hierarchy shared by the engine."""


class GFKError(Exception):
    """Base class for all engine errors."""


class SingularityError(GFKError, ValueError):
    """An electron sits on the nucleus or on another electron."""


class NodeError(GFKError, ValueError):
    """The trial function vanishes where a nonzero value is required."""


class ParameterError(GFKError, ValueError):
    """Malformed trial-function or system parameters."""


class GuardExhaustedError(GFKError, RuntimeError):
    """No admissible step could be drawn within the attempt cap."""


class FitError(GFKError, RuntimeError):
    """Extrapolation fit failed (singular design or no convergence)."""


class DegenerateInputError(GFKError, ValueError):
    """Too few replications or checkpoints for the requested statistic."""


class ConfigError(GFKError, ValueError):
    """Invalid run configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
