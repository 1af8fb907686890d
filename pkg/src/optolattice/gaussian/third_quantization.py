"""Third-quantisation route to the second moments.

The Liouvillian of the quadratic master equation is a quadratic form in
doubled "almost canonical" operators with structure matrices X and Y, built
here from the hopping block H, the pairing block K and the dissipators M, N
(see :func:`build_third_quantization`).  With ``A = -2 X^T``, ``B = Y`` and
``A = beta Lambda beta^-1`` the symmetric correlator obeys

    C(t) = beta [(beta^-1 B beta^-T) o Gamma(t)] beta^T,
    Gamma_ij(t) = (exp(t (l_i + l_j)) - 1) / (l_i + l_j),

and the covariance in the dynamical ordering is ``V = 2 C Pi + E11`` where Pi
swaps the annihilation and creation halves and E11 is the identity on the
annihilation block.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..errors import ConstructionError, NoStationaryStateError, UnstableGrowthError, ValidationError
from ..lattice import Boundary, ChainParams, DissipationData, NHOperator, build_chain, dissipation_data, hamiltonian_blocks
from .covariance import EPS_STAB, CovarianceState, Provenance, integrate_covariance

SPECTRAL_TOL = 1e-9
SERIES_THRESHOLD = 1e-6
CONDITION_LIMIT = 1e10
GROWTH_LIMIT = 600.0  # largest exponent 2 t Re(lambda) allowed before overflow


@dataclass(frozen=True, eq=False)
class ThirdQuantizationData:
    x_matrix: np.ndarray
    y_matrix: np.ndarray
    h_block: np.ndarray
    k_block: np.ndarray
    m_diag: np.ndarray
    n_diag: np.ndarray
    lambdas: np.ndarray
    beta: np.ndarray
    beta_inv: np.ndarray
    notes: tuple = field(default=())

    @property
    def n_modes(self) -> int:
        return self.h_block.shape[0]

    @property
    def a_matrix(self) -> np.ndarray:
        return -2 * self.x_matrix.T

    @property
    def b_matrix(self) -> np.ndarray:
        return self.y_matrix

    @property
    def rapidities(self) -> np.ndarray:
        """Eigenvalues of 2X, i.e. i E for the energies E of H_NH (Re > 0 when stable)."""
        return -self.lambdas

    def nh_operator(self) -> np.ndarray:
        """H_NH recovered as the transpose of -2iX."""
        return (-2j * self.x_matrix).T

    def rhs_diag(self) -> np.ndarray:
        return np.r_[2 * self.m_diag, 2 * self.n_diag]


def shift_matrix(n_cells: int, periodic: bool) -> np.ndarray:
    t1 = np.eye(n_cells, k=1)
    if periodic and n_cells > 1:
        t1[-1, 0] = 1.0
    elif periodic:
        t1[0, 0] = 1.0
    return t1


def chain_blocks(params: ChainParams):
    """Real-space hopping H and pairing K from the unit-cell blocks P, Q, R."""
    p, q, r = hamiltonian_blocks(params)
    n = params.n_cells
    t0 = np.eye(n)
    t1 = shift_matrix(n, params.boundary is Boundary.PBC)
    h = np.kron(t0, p) + np.kron(t1, r) + np.kron(t1.T, r.T)
    # the pairing term d K d + h.c. must reproduce G+ (a b + h.c.)
    k = 0.5 * np.kron(t0, q)
    return h, k


def structure_matrices(h, k, m_diag, n_diag):
    m = np.diag(m_diag).astype(complex)
    nn = np.diag(n_diag).astype(complex)
    x = 0.5 * np.block(
        [
            [1j * h.conj() + m - nn.conj(), -2j * k],
            [2j * k.conj(), -1j * h + m.conj() - nn],
        ]
    )
    y = np.block([[-1j * k.conj(), nn], [nn.conj(), 1j * k]])
    return x, y


def _spectral_mismatch(a, b):
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def third_quantization_from_blocks(
    h: np.ndarray,
    k: np.ndarray,
    m_diag: np.ndarray,
    n_diag: np.ndarray,
    reference: Optional[NHOperator] = None,
) -> ThirdQuantizationData:
    """Assemble X and Y and diagonalise A; optionally verify against ``reference``."""
    x, y = structure_matrices(np.asarray(h), np.asarray(k), np.asarray(m_diag), np.asarray(n_diag))
    a = -2 * x.T
    lam, beta = np.linalg.eig(a)
    notes = []
    cond = np.linalg.cond(beta)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        notes.append(f"drift eigenbasis nearly defective (condition {cond:.3e})")
    beta_inv = np.linalg.inv(beta)
    if reference is not None:
        ref = np.linalg.eigvals(-1j * np.asarray(reference.matrix))
        scale = max(1.0, np.abs(ref).max())
        gap = _spectral_mismatch(lam, ref)
        if gap > SPECTRAL_TOL * scale:
            raise ConstructionError(f"-2X^T spectrum differs from -i H_NH by {gap:.3e}")
    for arr in (x, y, lam, beta, beta_inv):
        arr.setflags(write=False)
    return ThirdQuantizationData(
        x, y, np.asarray(h), np.asarray(k), np.asarray(m_diag), np.asarray(n_diag),
        lam, beta, beta_inv, tuple(notes),
    )


def build_third_quantization(params: ChainParams) -> ThirdQuantizationData:
    h, k = chain_blocks(params)
    d = dissipation_data(params)
    return third_quantization_from_blocks(h, k, d.m_diag, d.n_diag, reference=build_chain(params))


def gamma_kernel(rates: np.ndarray, t: float) -> np.ndarray:
    """(exp(t s) - 1) / s, switching to its Taylor series when |s| t is tiny."""
    rates = np.asarray(rates, dtype=complex)
    x = rates * t
    small = np.abs(x) < SERIES_THRESHOLD
    out = np.empty_like(x)
    safe = np.where(small, 1.0, rates)
    out[~small] = (np.expm1(x) / safe)[~small]
    out[small] = gamma_series(rates[small], t)
    return out


def gamma_series(rates, t: float):
    """Taylor form t (1 + x/2 + x^2/6) of the Gamma kernel, x = rate * t."""
    x = np.asarray(rates) * t
    return t * (1 + x / 2 + x * x / 6)


def _swap(n_modes):
    L = n_modes
    pi = np.zeros((2 * L, 2 * L))
    pi[:L, L:] = np.eye(L)
    pi[L:, :L] = np.eye(L)
    return pi


def covariance_from_correlator(c: np.ndarray) -> np.ndarray:
    """V = 2 C Pi + E11 (dynamical ordering from the symmetric correlator)."""
    L = c.shape[0] // 2
    v = 2 * c @ _swap(L)
    v[:L, :L] += np.eye(L)
    return v


def _b_tilde(data):
    return data.beta_inv @ data.b_matrix @ data.beta_inv.T


def third_quantization_stationary(data: ThirdQuantizationData, eps_stab: float = EPS_STAB) -> CovarianceState:
    """t -> infinity limit of the closed form: Gamma_ij -> -1/(l_i + l_j)."""
    bad = data.lambdas[data.lambdas.real >= -eps_stab]
    if bad.size:
        raise NoStationaryStateError(
            f"{bad.size} rapidities with Re <= {eps_stab:g}; no stationary state exists",
            tuple(complex(-x) for x in bad),
        )
    s = data.lambdas[:, None] + data.lambdas[None, :]
    c = data.beta @ (-_b_tilde(data) / s) @ data.beta.T
    v = covariance_from_correlator(c)
    v = 0.5 * (v + v.conj().T)
    v.setflags(write=False)
    return CovarianceState(v, Provenance.THIRD_QUANTIZATION, None, data.notes)


@dataclass(frozen=True, eq=False)
class Evolution:
    state: CovarianceState
    means: Optional[np.ndarray]  # (<d>, <d^+>) at time t

    @property
    def displacement(self) -> Optional[np.ndarray]:
        return None if self.means is None else self.means[: len(self.means) // 2]


def evolve_covariance(
    source,
    t: float,
    z0: Optional[np.ndarray] = None,
) -> Evolution:
    """Covariance and displacement at time ``t`` starting from a coherent state.

    ``source`` is a :class:`ChainParams` or prebuilt
    :class:`ThirdQuantizationData`; ``z0`` holds the initial amplitudes
    ``<d>`` (length L), vacuum fluctuations are assumed.  A nearly defective
    drift falls back to direct integration.
    """
    data = build_third_quantization(source) if isinstance(source, ChainParams) else source
    if not np.isfinite(t) or t < 0:
        raise ValidationError(f"t must be finite and >= 0, got {t}")
    L = data.n_modes
    growth = 2 * t * max(data.lambdas.real.max(), 0.0)
    if growth > GROWTH_LIMIT:
        raise UnstableGrowthError(
            f"exp(2 t Re lambda) = exp({growth:.1f}) overflows; use saturation_negativity for unstable end modes"
        )
    means = None
    if z0 is not None:
        z0 = np.asarray(z0, dtype=complex)
        if z0.shape != (L,):
            raise ValidationError(f"z0 must have length {L}, got shape {z0.shape}")
        zz = np.r_[z0, z0.conj()]
        means = data.beta @ (np.exp(t * data.lambdas) * (data.beta_inv @ zz))

    if data.notes:
        msg = "; ".join(data.notes) + "; falling back to direct integration"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        a = data.a_matrix
        op = NHOperator(1j * a, tuple(), None)
        d = DissipationData(np.zeros(2 * L), data.rhs_diag(), data.m_diag, data.n_diag)
        state = integrate_covariance(op, d, t)
        state = CovarianceState(state.v_matrix, state.provenance, float(t), (msg,))
        return Evolution(state, means)

    s = data.lambdas[:, None] + data.lambdas[None, :]
    c = data.beta @ (_b_tilde(data) * gamma_kernel(s, t)) @ data.beta.T
    v = covariance_from_correlator(c)
    v = 0.5 * (v + v.conj().T)
    v.setflags(write=False)
    return Evolution(CovarianceState(v, Provenance.THIRD_QUANTIZATION, float(t)), means)
