"""Exception hierarchy shared by the library, the CLI and the services."""


class TomographyError(Exception):
    """Base class for every error raised by the tomography package."""


class InputError(TomographyError, ValueError):
    """An argument is outside the documented domain of an operation."""


class DomainError(TomographyError, ValueError):
    """A matrix is not Hermitian positive semidefinite (or not a state)."""


class DegenerateWidthError(TomographyError):
    """A data-driven bin width collapsed to zero."""


class SamplerFailure(TomographyError):
    """The rejection sampler stopped accepting proposals."""


class StagnationError(TomographyError):
    """The trust radius underflowed without an accepted step."""
