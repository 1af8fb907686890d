"""Chiral symmetry, effective Hermitian Hamiltonian and its Chern number.

For the Bloch operator H_NH(k) the effective Hamiltonian is
``H_eff(eta, k) = eta S - i S H_NH(k)`` with S the chiral operator satisfying
``S H_NH S^-1 = -H_NH^+``.  The Chern number of its lower eight bands over the
(k, eta) plane counts the protected end modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConvergenceError, DegeneratePointError, PhaseBoundaryError, SymmetryError
from .lattice import ChainParams, bloch_derivative, bloch_family, build_bloch

HALF_FILLING = 8
SYMMETRY_TOL = 1e-12
GAP_TOL = 1e-10
SAMPLE_MOMENTA = (0.0, np.pi / 2, np.pi, 3 * np.pi / 2)
# deliberately unremarkable couplings so accidental symmetries do not hide a wrong S
GENERIC_PARAMS = ChainParams(g_plus=0.3137, g_minus=0.8761, j_hop=0.4293, kappa=1.0, gamma=0.0173, n_cells=1)


class ChiralForm(str, Enum):
    MAIN_TEXT = "MainTextForm"
    SIGMA_PI = "SigmaPiForm"


@dataclass(frozen=True, eq=False)
class ChiralOperator:
    matrix: np.ndarray
    provenance: ChiralForm
    residuals: dict = field(default_factory=dict)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix).real


def tensor_form() -> np.ndarray:
    """S = 1/2 s0 (x) [sz (x) s0 (x) (sz + s0) + s0 (x) sz (x) (s0 - sz)]."""
    s0 = np.eye(2)
    sz = np.diag([1.0, -1.0])
    inner = np.kron(np.kron(sz, s0), sz + s0) + np.kron(np.kron(s0, sz), s0 - sz)
    return 0.5 * np.kron(s0, inner)


def sigma_pi_form() -> np.ndarray:
    """S = Pi Sigma with 4x4 blocks built from sigma = sz (x) 1 and tau = 1 (x) sz."""
    sz = np.diag([1.0, -1.0])
    sigma = np.kron(sz, np.eye(2))
    tau = np.kron(np.eye(2), sz)
    big_sigma = np.kron(np.eye(4), sigma)
    zero = np.zeros((4, 4))
    pi = np.block(
        [
            [sigma, zero, zero, zero],
            [zero, tau, zero, zero],
            [zero, zero, -tau, zero],
            [zero, zero, zero, -sigma],
        ]
    )
    return pi @ big_sigma


def chiral_residual(s: np.ndarray, h: np.ndarray) -> float:
    return float(np.abs(s @ h @ s + h.conj().T).max())


def _select(builder: Callable[[float], np.ndarray]) -> ChiralOperator:
    candidates = {ChiralForm.MAIN_TEXT: tensor_form(), ChiralForm.SIGMA_PI: sigma_pi_form()}
    residuals = {
        form: max(chiral_residual(s, builder(k)) for k in SAMPLE_MOMENTA)
        for form, s in candidates.items()
    }
    for form in (ChiralForm.MAIN_TEXT, ChiralForm.SIGMA_PI):
        if residuals[form] < SYMMETRY_TOL:
            s = candidates[form]
            s.setflags(write=False)
            return ChiralOperator(s, form, {f.value: r for f, r in residuals.items()})
    raise SymmetryError(
        "no candidate chiral operator satisfies S H S^-1 = -H^+",
        {f.value: r for f, r in residuals.items()},
    )


@lru_cache(maxsize=1)
def _default_chiral() -> ChiralOperator:
    return _select(lambda k: build_bloch(GENERIC_PARAMS, k).matrix)


def chiral_operator(bloch_builder: Optional[Callable[[float], np.ndarray]] = None) -> ChiralOperator:
    """Pick the chiral operator that satisfies the symmetry relation.

    Both candidate diagonal forms are tested on ``bloch_builder(k)`` at
    k = 0, pi/2, pi, 3 pi/2; the default builder uses generic couplings.
    If both pass (e.g. all couplings zero) the tensor-product form is kept.
    """
    if bloch_builder is None:
        return _default_chiral()
    return _select(lambda k: np.asarray(bloch_builder(k)))


def _s(chiral):
    return (chiral or chiral_operator()).matrix


def effective_hamiltonian(params: ChainParams, k: float, eta: float, chiral: Optional[ChiralOperator] = None) -> np.ndarray:
    s = _s(chiral)
    h = eta * s - 1j * s @ build_bloch(params, k).matrix
    resid = float(np.abs(h - h.conj().T).max())
    if resid > SYMMETRY_TOL * max(1.0, np.abs(h).max()):
        raise SymmetryError(f"effective Hamiltonian not Hermitian (residual {resid:.3e})", {"hermiticity": resid})
    return h


def block_swap() -> np.ndarray:
    """16x16 permutation exchanging 4x4 block b with block 3 - b."""
    return np.kron(np.fliplr(np.eye(4)), np.eye(4))


def compactifier(eta) -> np.ndarray:
    """exp[i (pi/4)(1 + tanh eta) G]; G squares to one so the exponential is closed form."""
    theta = np.pi / 4 * (1 + np.tanh(np.asarray(eta, dtype=float)))[..., None, None]
    return np.cos(theta) * np.eye(16) + 1j * np.sin(theta) * block_swap()


def compactified_hamiltonian(params: ChainParams, k: float, eta: float, chiral: Optional[ChiralOperator] = None) -> np.ndarray:
    r = compactifier(eta)
    return r @ effective_hamiltonian(params, k, eta, chiral) @ r.conj().T


def berry_curvature(params: ChainParams, k: float, eta: float, chiral: Optional[ChiralOperator] = None) -> float:
    """Sum-over-states curvature of the lower eight bands of H_eff at (k, eta)."""
    s = _s(chiral)
    energies, vecs = np.linalg.eigh(effective_hamiltonian(params, k, eta, chiral))
    gap = energies[HALF_FILLING] - energies[HALF_FILLING - 1]
    if gap < GAP_TOL:
        raise DegeneratePointError(f"half-filling gap closes at k={k}, eta={eta}", k, eta)
    d_k = -1j * s @ bloch_derivative(params, k)
    return float(_sum_over_states(energies, vecs, d_k, s))


def _sum_over_states(energies, vecs, d_k, d_eta):
    lo, hi = slice(0, HALF_FILLING), slice(HALF_FILLING, None)
    vh = np.swapaxes(vecs, -1, -2).conj()
    a = (vh @ d_k @ vecs)[..., lo, hi]
    b = (vh @ d_eta @ vecs)[..., hi, lo]
    denom = (energies[..., lo, None] - energies[..., None, hi]) ** 2
    return np.sum(np.imag(2 * a * np.swapaxes(b, -1, -2)) / denom, axis=(-1, -2))


def chern_by_quadrature(params: ChainParams, n_k: int = 64, n_eta: int = 200, chiral: Optional[ChiralOperator] = None) -> float:
    """Direct quadrature of the sum-over-states curvature over the whole plane.

    eta = tan(pi x / 2) maps x in (-1, 1) onto the real line; Gauss-Legendre
    in x, uniform (spectrally accurate) in k.
    """
    s = _s(chiral)
    x, wts = leggauss(n_eta)
    etas = np.tan(np.pi * x / 2)
    jac = np.pi / 2 / np.cos(np.pi * x / 2) ** 2
    ks = np.linspace(0, 2 * np.pi, n_k, endpoint=False)
    hk = bloch_family(params)
    total = 0.0
    for k in ks:
        h = etas[:, None, None] * s - 1j * s @ hk([k])[0]
        energies, vecs = np.linalg.eigh(h)
        if np.min(energies[:, HALF_FILLING] - energies[:, HALF_FILLING - 1]) < GAP_TOL:
            raise DegeneratePointError(f"half-filling gap closes at k={k}", k, float("nan"))
        d_k = -1j * s @ bloch_derivative(params, k)
        total += np.sum(_sum_over_states(energies, vecs, d_k, s) * jac * wts)
    return float(total * (2 * np.pi / n_k) / (2 * np.pi))


@dataclass(frozen=True, eq=False)
class TopologyReport:
    """Link-variable Chern number with its diagnostics.

    ``curvature`` holds the plaquette Berry flux divided by plaquette area,
    indexed ``[k, eta]`` at plaquette corners ``k_grid[:, None]`` and
    ``eta_grid[None, :-1]``.
    """

    chern: float
    curvature: np.ndarray
    k_grid: np.ndarray
    eta_grid: np.ndarray
    eta_window: float
    grid_dims: tuple
    boundary_flux: float
    min_gap: float
    trace: tuple = ()

    @property
    def chern_integer(self) -> int:
        return int(round(self.chern))


def _unit(z):
    return z / np.abs(z)


def _lower_bands(params, ks, etas, s, chunk=32):
    hk = bloch_family(params)
    r = compactifier(etas)
    out = np.empty((len(ks), len(etas), 16, HALF_FILLING), dtype=complex)
    gap = np.inf
    for start in range(0, len(ks), chunk):
        blk = hk(ks[start:start + chunk])
        h = etas[None, :, None, None] * s - 1j * s @ blk[:, None]
        h = r @ h @ np.swapaxes(r, -1, -2).conj()
        energies, vecs = np.linalg.eigh(h)
        gap = min(gap, float(np.min(energies[..., HALF_FILLING] - energies[..., HALF_FILLING - 1])))
        out[start:start + chunk] = vecs[..., :HALF_FILLING]
    return out, gap


def _links(u, v):
    return _unit(np.linalg.det(np.swapaxes(u, -1, -2).conj() @ v))


def plaquette_chern(params: ChainParams, grid_k: int, grid_eta: int, eta_max: float, chiral: Optional[ChiralOperator] = None) -> TopologyReport:
    """One link-variable evaluation on a fixed (k, eta) grid."""
    s = _s(chiral)
    ks = np.linspace(0, 2 * np.pi, grid_k, endpoint=False)
    etas = np.linspace(-eta_max, eta_max, grid_eta)
    u, gap = _lower_bands(params, ks, etas, s)
    if gap < GAP_TOL:
        raise PhaseBoundaryError(f"half-filling gap closes on the grid (min gap {gap:.3e})")
    u_next_k = np.roll(u, -1, axis=0)
    link_k = _links(u, u_next_k)  # (nk, ne)
    link_eta = _links(u[:, :-1], u[:, 1:])  # (nk, ne-1)
    flux = np.angle(
        link_k[:, :-1] * np.roll(link_eta, -1, axis=0) * link_k[:, 1:].conj() * link_eta.conj()
    )
    chern = float(flux.sum() / (2 * np.pi))
    edge = np.angle(np.prod(link_k[:, [0, -1]], axis=0))
    boundary_flux = float(np.sum(np.abs(edge)) / (2 * 2 * np.pi))
    area = (ks[1] - ks[0] if grid_k > 1 else 2 * np.pi) * (etas[1] - etas[0])
    return TopologyReport(
        chern=chern,
        curvature=flux / area,
        k_grid=ks,
        eta_grid=etas,
        eta_window=float(eta_max),
        grid_dims=(grid_k, grid_eta),
        boundary_flux=boundary_flux,
        min_gap=gap,
    )


def chern_number(
    params: ChainParams,
    grid_k: int = 64,
    grid_eta: int = 64,
    eta_max: Optional[float] = None,
    max_refinements: int = 3,
    flux_tol: float = 1e-3,
    chiral: Optional[ChiralOperator] = None,
) -> TopologyReport:
    """Chern number of the lower eight bands of the compactified H_eff.

    Starts on ``grid_k x grid_eta`` over ``[-eta_max, eta_max]`` and doubles
    both grid sizes and the window until two successive levels give the same
    integer and the boundary flux drops below ``flux_tol``.
    """
    if eta_max is None:
        eta_max = 10 * max(params.kappa, params.g_plus, params.g_minus, params.j_hop)
    trace = []
    prev = None
    for level in range(max_refinements + 1):
        rep = plaquette_chern(params, grid_k << level, grid_eta << level, eta_max * 2**level, chiral)
        trace.append((rep.grid_dims, rep.eta_window, rep.chern, rep.boundary_flux))
        if prev is not None and prev.chern_integer == rep.chern_integer and rep.boundary_flux < flux_tol:
            return TopologyReport(**{**rep.__dict__, "trace": tuple(trace)})
        prev = rep
    raise ConvergenceError("Chern number did not converge under refinement", tuple(trace))
