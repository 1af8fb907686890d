"""Gaussian-state second moments, two independent solvers, and entanglement."""

from .covariance import (
    CovarianceState,
    Populations,
    Provenance,
    integrate_covariance,
    lyapunov_residual,
    populations,
    stationary_covariance,
    vacuum_covariance,
)
from .entanglement import (
    QuadratureBlock,
    SaturationResult,
    log_negativity,
    nu_minus,
    quadrature_block,
    saturation_negativity,
    symplectic_nu_minus,
)
from .third_quantization import (
    Evolution,
    ThirdQuantizationData,
    build_third_quantization,
    evolve_covariance,
    gamma_kernel,
    third_quantization_from_blocks,
    third_quantization_stationary,
)

__all__ = [
    "CovarianceState",
    "Evolution",
    "Populations",
    "Provenance",
    "QuadratureBlock",
    "SaturationResult",
    "ThirdQuantizationData",
    "build_third_quantization",
    "evolve_covariance",
    "gamma_kernel",
    "integrate_covariance",
    "log_negativity",
    "lyapunov_residual",
    "nu_minus",
    "populations",
    "quadrature_block",
    "saturation_negativity",
    "stationary_covariance",
    "symplectic_nu_minus",
    "third_quantization_from_blocks",
    "third_quantization_stationary",
    "vacuum_covariance",
]
