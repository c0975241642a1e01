"""Exception types shared across the package.

The CLI maps these onto process exit codes, so new error conditions should
reuse one of the classes below rather than raising bare ValueError.
"""


class ParameterError(ValueError):
    """Invalid physical or numerical parameter (non-positive mass, bad cap, ...)."""


class CapacityError(RuntimeError):
    """A requested object would exceed a configured size cap.

    Carries the projected size so callers can report it.
    """

    def __init__(self, message, projected=None, cap=None):
        super().__init__(message)
        self.projected = projected
        self.cap = cap


class EvaluationError(ValueError):
    """A sampled function returned a non-finite value at a lattice point."""


class LatticeMismatchError(ValueError):
    """Coefficients and operator target live on different lattices."""


class AssemblyError(RuntimeError):
    """Assembled operator violates a structural invariant (e.g. hermiticity)."""


class ConvergenceError(RuntimeError):
    """Iterative eigensolver failed to reach the requested residual.

    ``best_residual`` holds the smallest residual achieved; ``partial``
    optionally carries partial scan results.
    """

    def __init__(self, message, best_residual=None, partial=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.partial = partial


class ConfigError(ValueError):
    """Run configuration failed to parse or validate."""
