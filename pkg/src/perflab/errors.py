"""Semantic exception hierarchy. Public functions raise these, never bare ValueError."""


class PerflabError(Exception):
    """Base error for the package."""


class ContractError(PerflabError, ValueError):
    """Inputs violate an operation contract (shape, domain, or size limits)."""


class ConfigError(PerflabError, ValueError):
    """Instance config rejected; message carries the offending field path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class UnsupportedMapError(PerflabError):
    """Operation needs structure (density, closed form) the distribution map lacks."""


class DivergenceError(PerflabError):
    """An iterative solver increased its objective past the divergence guard."""


class MissingConstantError(PerflabError):
    """A bound needs a constant that is neither declared nor derivable.

    The message names the constant and the estimator that can supply it.
    """
