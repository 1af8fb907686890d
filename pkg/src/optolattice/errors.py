"""Exception hierarchy.

Every error carries a machine-readable ``category`` string; the CLI prints it on
stderr and maps the two top-level families to exit codes (validation -> 1,
numerical -> 2).
"""


class OptolatticeError(Exception):
    category = "error"


class ValidationError(OptolatticeError, ValueError):
    category = "validation"


class SizingError(ValidationError):
    category = "sizing"


class UnsupportedCombinationError(ValidationError):
    category = "unsupported-combination"


class NumericalError(OptolatticeError, ArithmeticError):
    category = "numerical"


class EigensolverError(NumericalError):
    category = "eigensolver"


class NoStationaryStateError(NumericalError):
    category = "no-stationary-state"

    def __init__(self, message, eigenvalues=()):
        super().__init__(message)
        self.eigenvalues = tuple(eigenvalues)


class SymmetryError(NumericalError):
    category = "symmetry"

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or {}


class DegeneratePointError(NumericalError):
    category = "degenerate-point"

    def __init__(self, message, k=None, eta=None):
        super().__init__(message)
        self.k = k
        self.eta = eta


class PhaseBoundaryError(NumericalError):
    category = "phase-boundary"


class ConvergenceError(NumericalError):
    category = "non-convergence"

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class ExtrapolationError(ConvergenceError):
    category = "extrapolation"


class UnstableGrowthError(NumericalError):
    category = "unstable-growth"


class UnsupportedRegionError(NumericalError):
    category = "unsupported-region"


class UnphysicalCovarianceError(NumericalError):
    category = "unphysical-covariance"


class ConstructionError(NumericalError):
    category = "construction"


class OutputError(OptolatticeError, OSError):
    category = "io"
