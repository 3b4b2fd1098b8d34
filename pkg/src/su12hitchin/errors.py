"""Exception hierarchy shared by all modules.

The command-line front end maps `DomainError` to exit code 1 and
`SolverError` to exit code 2.
"""


class DomainError(ValueError):
    """An input lies outside the domain of an operation."""


class ConfigurationError(DomainError):
    """A required handle or parameter is missing or inconsistent."""


class SolverError(RuntimeError):
    """An iterative solver failed to converge.

    Parameters
    ----------
    message : str
        Human-readable description.
    trace : list of float, optional
        Residual history of the failed iteration.
    detail : dict, optional
        Additional diagnostic values (for example a boundary mismatch vector).
    """

    def __init__(self, message, trace=None, detail=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []
        self.detail = dict(detail) if detail is not None else {}
