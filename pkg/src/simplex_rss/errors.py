"""Exception hierarchy shared by every module of the package."""


class SimplexRSSError(Exception):
    """Base class for all errors raised by simplex_rss."""


class DomainError(SimplexRSSError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PreconditionError(SimplexRSSError, ValueError):
    """A scenario precondition does not hold for the given state.

    ``clause`` names the failing clause when it is known.
    """

    def __init__(self, message, clause=None):
        super().__init__(message)
        self.clause = clause


class ContractError(SimplexRSSError):
    """A caller broke an operation contract (violated guard, bad input)."""

    def __init__(self, message, label=None):
        super().__init__(message)
        self.label = label


class FeatureError(SimplexRSSError, NotImplementedError):
    """The requested subscenario or machine is not supported."""


class ModelError(SimplexRSSError):
    """A machine definition is ill-formed or cannot be sampled."""


class ConfigError(SimplexRSSError, ValueError):
    """A run configuration is malformed.  ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
