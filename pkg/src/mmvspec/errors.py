"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument violates a documented precondition."""


class SolverFailureError(RuntimeError):
    """An iterative solver produced non-finite iterates."""


class CertificateError(RuntimeError):
    """A dual certificate is infeasible beyond tolerance."""


class IllPosedError(RuntimeError):
    """A linear system restricted to the observations is rank deficient."""


class FullRankError(RuntimeError):
    """No strict low-rank sinusoidal decomposition exists (numerical rank n)."""


class DataFormatError(ValueError):
    """A data file failed to parse; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
