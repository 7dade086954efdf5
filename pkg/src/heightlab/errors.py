"""Failure modes shared across the package."""


class HeightlabError(Exception):
    """Base class for package-specific failures."""


class PrecisionExhaustedError(HeightlabError):
    """A certified comparison or floor could not be decided within the bit budget."""


class CapExceededError(HeightlabError):
    """An enumeration would visit more candidates than the configured cap."""


class UnboundedSearchError(HeightlabError):
    """The requested search has no finite candidate set under this height kind."""


class InsufficientDataError(HeightlabError):
    """Too few records survive the warm-up cutoff to report an estimate."""
