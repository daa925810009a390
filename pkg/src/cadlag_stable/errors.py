"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(RuntimeError):
    """A numerical routine could not meet its tolerance within budget."""


class TruncationError(ValueError):
    """A series truncation level is too small for the requested tolerance.

    ``minimal_terms`` carries the smallest adequate truncation level.
    """

    def __init__(self, message, minimal_terms=None):
        super().__init__(message)
        self.minimal_terms = minimal_terms


class DegenerateFitError(ValueError):
    """A regression had no usable design points."""


class ConfigError(ValueError):
    """An experiment configuration failed validation.

    ``keys`` lists the offending configuration keys.
    """

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)
