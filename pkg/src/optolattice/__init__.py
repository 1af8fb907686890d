"""Dissipative optomechanical superlattice: non-Hermitian spectra, topology and Gaussian entanglement."""

__version__ = "0.1.0"

from .lattice import (
    Boundary,
    ChainParams,
    DisorderKind,
    DisorderSpec,
    NHOperator,
    build_bloch,
    build_chain,
    dissipation_data,
    sample_disorder,
)
from .spectra import PhaseLabel, Region, SpectrumReport, classify_phase, eigenspectrum, phase_diagram, sweep_line
from .topology import chern_number, chiral_operator, compactified_hamiltonian, effective_hamiltonian
from .twosite import TwoSiteParams, twosite_poles

__all__ = [
    "Boundary",
    "ChainParams",
    "DisorderKind",
    "DisorderSpec",
    "NHOperator",
    "PhaseLabel",
    "Region",
    "SpectrumReport",
    "TwoSiteParams",
    "build_bloch",
    "build_chain",
    "chern_number",
    "chiral_operator",
    "classify_phase",
    "compactified_hamiltonian",
    "dissipation_data",
    "effective_hamiltonian",
    "eigenspectrum",
    "phase_diagram",
    "sample_disorder",
    "sweep_line",
    "twosite_poles",
]
