"""Exception hierarchy shared across the package."""


class CsfemError(Exception):
    """Base class for all csfem errors."""


class ModelError(CsfemError):
    """Raised for model-file syntax or schema violations.

    For JSON syntax errors ``line`` and ``column`` carry the position.
    """

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


class SingularJacobianError(CsfemError):
    """Isoparametric map has non-positive Jacobian determinant."""


class ElementConstructionError(CsfemError):
    """A constant element matrix could not be inverted at build time."""


class StabilityError(CsfemError):
    """Quadrature is insufficient for the requested condensation route."""


class MaterialFailureError(CsfemError):
    """Local constitutive update failed to converge."""


class StepFailureError(CsfemError):
    """A load step did not converge within the iteration budget."""

    def __init__(self, step, residual_norm, message):
        super().__init__(message)
        self.step = step
        self.residual_norm = residual_norm


class EvaluationError(CsfemError):
    """Benchmark evaluation could not locate a required probe."""
