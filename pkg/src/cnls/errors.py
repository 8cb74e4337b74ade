"""Exception types shared across the solver stack."""


class CnlsError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CnlsError):
    """Invalid grid, window or experiment configuration."""


class AdmissibilityError(CnlsError):
    """A potential pair violates one of the admissibility conditions."""


class DomainError(CnlsError):
    """An argument lies outside the domain of the requested operation."""


class DegenerateCandidateError(CnlsError):
    """A candidate field is degenerate (zero quartic mass, or outside the
    admissible candidate set of the penalized functional)."""


class OracleFailure(CnlsError):
    """The shooting oracle could not bracket or refine the separatrix."""


class ConvergenceError(CnlsError):
    """An iterative solve exhausted its budget.

    Carries the last residual so callers can report how close it got.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual
