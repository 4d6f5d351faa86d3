"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class IterationLimitError(RuntimeError):
    """An iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class UnsupportedCaseError(RuntimeError):
    """The requested quantity does not exist for this configuration,
    e.g. a limit of a mean recursion whose operator is not power convergent."""


class NumericalError(RuntimeError):
    """A numerical routine failed (eigensolver, series divergence, ...)."""
