"""Exception types raised across the package."""


class SubgMeanError(ValueError):
    """Base class for input and feasibility errors."""


class InfeasibleBudget(SubgMeanError):
    """The discard budget cannot be reached: delta is too small for n."""


class DegenerateSamples(SubgMeanError):
    """The samples carry no spread around the pilot estimate."""


class EmptyAfterTrim(SubgMeanError):
    pass


class InfeasibleRegime(SubgMeanError):
    pass


class NoConvergence(RuntimeError):
    pass


class OutOfRange(SubgMeanError):
    pass


class NonpositiveLogArgument(SubgMeanError):
    """Raised when the log argument of the quadratic-log inequality is <= 0.

    Carries the offending ``y`` so certificate code can report it.
    """

    def __init__(self, y, value):
        super().__init__(f"log argument {value!r} <= 0 at y={y!r}")
        self.y = y
        self.value = value


class UnsupportedDistribution(SubgMeanError):
    pass


class InvalidShape(SubgMeanError):
    pass


class InvalidLambda(SubgMeanError):
    pass


class EmptyGroup(SubgMeanError):
    pass


class ConfigError(SubgMeanError):
    pass
