"""Exception types shared across the toolkit.

The CLI maps each type to a distinct exit code, so library code should
raise these rather than bare ValueError/RuntimeError for user-facing
failure modes.
"""


class DataFormatError(ValueError):
    """Malformed input data: bad CSV row, non-binary labels, empty file."""


class InfeasibleThresholdsError(RuntimeError):
    """No granular ball survives the num_min / purity delete pass."""


class SolverError(RuntimeError):
    """QP solver failed to converge; diagnostics attached when available."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class FactorizationError(RuntimeError):
    """Cholesky factorization failed; caller should escalate the ridge."""


class ModelFormatError(ValueError):
    """Model file is corrupt or has an unsupported version."""
