"""Exception hierarchy. The CLI maps each family to an exit code."""


class EnetError(Exception):
    """Base class for all library errors."""


class ConfigError(EnetError, ValueError):
    """Invalid parameters or configuration."""


class DataError(EnetError, ValueError):
    """Malformed, missing or dimensionally inconsistent data."""


class DomainError(DataError):
    """Input point outside the domain of a dictionary."""


class UnboundedActiveSetError(ConfigError):
    """Active set cannot be made finite for the given dictionary."""


class MissingConstantError(ConfigError):
    """The balancing constant C cannot be formed from the supplied inputs."""


class SelectionError(EnetError):
    """Balancing selection asked to scan a path containing failed solves."""


class OracleError(EnetError):
    """A reference computation did not reach its target accuracy."""

    def __init__(self, message, last_iterates=None):
        super().__init__(message)
        self.last_iterates = last_iterates
