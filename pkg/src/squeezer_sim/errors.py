"""Exception hierarchy.

Physics-domain failures derive from :class:`SqueezerError`; configuration
problems raise :class:`ConfigError`.  The CLI maps the two families onto
distinct exit codes.
"""


class SqueezerError(ValueError):
    """Base class for physics-domain errors."""


class DomainError(SqueezerError):
    """Argument outside the mathematical domain of an operation."""


class AboveThresholdError(DomainError):
    """Normalized pump amplitude at or above oscillation threshold."""


class PerfectCavityError(DomainError):
    """Round-trip amplitude of one: finesse and linewidth are undefined."""


class NonphysicalPairError(SqueezerError):
    """Squeezed/anti-squeezed pair violates the uncertainty bound."""


class UnderdeterminedError(SqueezerError):
    """Measurements do not constrain all fit parameters."""


class InconsistentBudgetError(SqueezerError):
    """A loss factor to remove exceeds the fitted total."""


class NoDiscriminationError(SqueezerError):
    """Error signal carries no information about the locked variable."""


class NonIntegrableError(SqueezerError):
    """Noise integral diverges over the requested band."""


class ConfigError(Exception):
    """Invalid run configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
