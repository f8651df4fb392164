"""Exception types raised by the package."""


class SparseTrackError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SparseTrackError, ValueError):
    """Invalid model, experiment or solver parameters."""


class ModelInfeasibleError(SparseTrackError, RuntimeError):
    """The signal model cannot perform the requested transition."""


class InfeasibleProblemError(SparseTrackError, ValueError):
    """No vector satisfies the data-fidelity constraint."""


class EnumerationLimitError(SparseTrackError, RuntimeError):
    """Exact constant computation would exceed the subset budget."""


class BoundDomainError(SparseTrackError, ValueError):
    """A bound was evaluated outside the region where it is defined."""


class MissingConstantError(SparseTrackError, KeyError):
    """A required restricted isometry / orthogonality constant is absent."""

    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__(f"missing constants: {', '.join(self.missing)}")

    def __str__(self):
        return f"missing constants: {', '.join(self.missing)}"
