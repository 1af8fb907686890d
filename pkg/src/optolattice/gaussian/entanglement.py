"""Two-mode quadrature blocks, logarithmic negativity and the saturation limit."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..errors import (
    ExtrapolationError,
    UnphysicalCovarianceError,
    UnsupportedRegionError,
    ValidationError,
)
from ..lattice import Boundary, ChainParams, build_chain, dissipation_data, mode_index
from ..spectra import eigenspectrum
from .covariance import CovarianceState, vacuum_covariance

SYMMETRY_TOL = 1e-8
DISCRIMINANT_TOL = 1e-9

Mode = Tuple[int, str]  # (1-based site, 'a' optical | 'b' mechanical)


@dataclass(frozen=True, eq=False)
class QuadratureBlock:
    """Real symmetric 4x4 covariance of (X1, P1, X2, P2), vacuum = identity."""

    matrix: np.ndarray
    modes: tuple

    @property
    def alpha(self) -> np.ndarray:
        return self.matrix[:2, :2]

    @property
    def beta(self) -> np.ndarray:
        return self.matrix[2:, 2:]

    @property
    def gamma(self) -> np.ndarray:
        return self.matrix[:2, 2:]


def _selector(n_modes, first, second):
    """Rows map x = [d; d^+] onto (X1, P1, X2, P2)."""
    L = n_modes
    t = np.zeros((4, 2 * L), dtype=complex)
    r = 1 / math.sqrt(2)
    for row, (site, species) in enumerate((first, second)):
        i = mode_index(L, site, species)
        t[2 * row, [i, i + L]] = r
        t[2 * row + 1, i] = -1j * r
        t[2 * row + 1, i + L] = 1j * r
    return t


def _swap_columns(v):
    L = v.shape[0] // 2
    return np.concatenate([v[:, L:], v[:, :L]], axis=1)


def _raw_block(v, t):
    # <x x^T> = V Pi, so the quadrature second moments are T V Pi T^T
    return t @ _swap_columns(v) @ t.T


def _check_pair(first, second):
    if tuple(first) == tuple(second):
        raise ValidationError(f"a mode pair needs two distinct modes, got {first} twice")


def quadrature_block(state: CovarianceState, i: int, xi: str, j: int, eta: str) -> QuadratureBlock:
    """Symmetrised quadrature covariance of modes (xi, i) and (eta, j), scaled by 2."""
    first, second = (int(i), xi), (int(j), eta)
    _check_pair(first, second)
    raw = _raw_block(np.asarray(state.v_matrix), _selector(state.n_modes, first, second))
    scale = max(1.0, np.abs(raw).max())
    if np.abs(raw.real - raw.real.T).max() > SYMMETRY_TOL * scale or np.abs(raw.imag + raw.imag.T).max() > SYMMETRY_TOL * scale:
        raise UnphysicalCovarianceError("quadrature moments violate the commutator structure; covariance corrupted")
    q = 2 * raw.real
    q = 0.5 * (q + q.T)
    q.setflags(write=False)
    return QuadratureBlock(q, (first, second))


def _nu_from_invariants(delta, det):
    if not det > 0:
        raise UnphysicalCovarianceError(f"quadrature block is not positive definite (det {det:.3e})")
    disc = delta * delta - 4 * det
    if disc < -DISCRIMINANT_TOL * max(1.0, delta * delta):
        raise UnphysicalCovarianceError(f"negative symplectic discriminant {disc:.3e}")
    # rationalised form of (delta - sqrt(disc)) / 2, stable when delta^2 >> det
    return math.sqrt(2 * det / (delta + math.sqrt(max(disc, 0.0))))


def seralian_invariant(q: np.ndarray) -> float:
    """det alpha + det beta - 2 det gamma (the partially transposed seralian)."""
    return float(np.linalg.det(q[:2, :2]) + np.linalg.det(q[2:, 2:]) - 2 * np.linalg.det(q[:2, 2:]))


def nu_minus(q: QuadratureBlock) -> float:
    m = np.asarray(q.matrix)
    return _nu_from_invariants(seralian_invariant(m), float(np.linalg.det(m)))


def log_negativity(q: QuadratureBlock) -> float:
    return max(0.0, -math.log2(nu_minus(q)))


def symplectic_nu_minus(q: QuadratureBlock) -> float:
    """Smallest symplectic eigenvalue of the partial transpose, from |eig(i Omega V_pt)|."""
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    omega = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    vals = np.abs(np.linalg.eigvals(1j * omega @ flip @ q.matrix @ flip))
    return float(np.sort(vals)[0])


# --- unstable end modes --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SaturationResult:
    """Negativity limit for diverging populations.

    ``nu_iterates[n]`` is the smallest symplectic eigenvalue at ``times[n]``;
    ``pair_populations[n]`` the occupations of the two modes there.
    """

    e_n: float
    nu_limit: float
    nu_iterates: np.ndarray
    times: np.ndarray
    pair_populations: np.ndarray
    growth_rate: float
    growth_rank: int


def _poly_det_2x2(w, r):
    """Coefficients (c2, c1, c0) of det(xi W + R) in xi."""
    return (
        w[0, 0] * w[1, 1] - w[0, 1] * w[1, 0],
        w[0, 0] * r[1, 1] + w[1, 1] * r[0, 0] - w[0, 1] * r[1, 0] - w[1, 0] * r[0, 1],
        r[0, 0] * r[1, 1] - r[0, 1] * r[1, 0],
    )


def _poly_det(w, r):
    """Coefficients c_j of det(W + u R) = sum_j c_j u^j, exact by interpolation."""
    n = w.shape[0]
    nodes = np.arange(n + 1) - n / 2
    vals = [np.linalg.det(w + u * r) for u in nodes]
    return np.linalg.solve(np.vander(nodes, increasing=True), vals)


def _saturated_nu(wq, rq, xi, rank):
    """nu_minus of xi*Wq + Rq with every quantity divided by xi^rank.

    Only the rank-r part of Wq grows, so det(xi Wq + Rq) ~ xi^r and the
    seralian ~ xi^min(r, 2); the structurally vanishing leading coefficients
    are dropped rather than trusted to cancel numerically.
    """
    u = 1.0 / xi
    c = _poly_det(wq, rq)  # det(xi Wq + Rq) = xi^4 sum_j c_j u^j
    det_n = sum(c[j] * u ** (j - (4 - rank)) for j in range(4 - rank, 5))
    blocks = ((slice(0, 2), slice(0, 2), 1.0), (slice(2, 4), slice(2, 4), 1.0), (slice(0, 2), slice(2, 4), -2.0))
    delta_n = 0.0
    for rows, cols, sign in blocks:
        c2, c1, c0 = _poly_det_2x2(wq[rows, cols], rq[rows, cols])
        if rank >= 2:
            delta_n += sign * (c2 + c1 * u + c0 * u * u)
        else:
            delta_n += sign * (c1 + c0 * u) if rank == 1 else sign * c0
    # 4 det / xi^(2 rank) = 4 det_n / xi^rank
    disc = delta_n * delta_n - 4 * det_n * u**rank
    if disc < -DISCRIMINANT_TOL * max(1.0, delta_n * delta_n):
        raise UnphysicalCovarianceError(f"negative symplectic discriminant {disc:.3e}")
    return math.sqrt(2 * det_n / (delta_n + math.sqrt(max(disc, 0.0))))


def saturation_negativity(
    params: ChainParams,
    pair: Sequence[Mode] = ((1, "a"), (1, "b")),
    n_max: int = 20,
    tol: float = 1e-4,
    rank_tol: float = 1e-12,
) -> SaturationResult:
    """Limit of the negativity while the end-mode populations diverge.

    The exact finite-time covariance from vacuum is split as
    ``V(t) = xi W(t) + R(t)`` with ``xi = exp(2 t lambda_end)`` carrying the
    growth of the unstable end modes.  nu_minus is evaluated at
    ``t_n = n T0`` (``T0 = 5 / lambda_end``) until the last three iterates
    agree within ``tol``; the limit is then extrapolated from the last two.
    """
    first, second = (int(pair[0][0]), pair[0][1]), (int(pair[1][0]), pair[1][1])
    _check_pair(first, second)
    chain = params.replace(boundary=Boundary.OBC)
    op = build_chain(chain)
    rep = eigenspectrum(op)
    if not rep.im_e_bulk_max < 0:
        raise UnsupportedRegionError("bulk modes are unstable; saturation needs a stable bulk (region C)")
    if not rep.im_e_end > 0:
        raise UnsupportedRegionError("end modes are stable; a stationary state exists, use the stationary path")

    d = dissipation_data(chain)
    a = -1j * np.asarray(op.matrix)
    lam, beta = np.linalg.eig(a)
    beta_inv = np.linalg.inv(beta)
    rate = float(lam.real.max())
    growing = lam.real > 0
    v0t = beta_inv @ vacuum_covariance(chain.n_modes) @ beta_inv.conj().T
    dt = beta_inv @ d.d_matrix @ beta_inv.conj().T
    s = lam[:, None] + lam.conj()[None, :]
    both = np.outer(growing, growing)
    amplitude = v0t + dt / s

    sel = _selector(chain.n_modes, first, second)
    L = chain.n_modes
    idx = [mode_index(L, *first) + L, mode_index(L, *second) + L]
    t0 = 5.0 / rate
    times, nus, pops = [], [], []
    rank = None
    for n in range(1, n_max + 1):
        t = n * t0
        log_xi = 2 * t * rate
        phase = np.exp(t * s - log_xi)  # growing block relative to xi
        wt = np.where(both, amplitude * phase, 0.0)
        decay = np.exp(np.where(both, 0.0, t * s))
        rt = np.where(both, -dt / s, v0t * decay + dt * (decay - 1) / s)
        w = beta @ wt @ beta.conj().T
        r = beta @ rt @ beta.conj().T
        wq = 2 * _raw_block(w, sel).real
        rq = 2 * _raw_block(r, sel).real
        wq, rq = 0.5 * (wq + wq.T), 0.5 * (rq + rq.T)
        evals, evecs = np.linalg.eigh(wq)
        keep = np.abs(evals) > rank_tol * max(np.abs(evals).max(), 1e-300)
        rank = int(keep.sum())
        wq = (evecs[:, keep] * evals[keep]) @ evecs[:, keep].T
        if rank > 2:
            nu = math.inf  # growth in more than two quadratures: no entanglement survives
        else:
            nu = _saturated_nu(wq, rq, math.exp(log_xi), rank)
        times.append(t)
        nus.append(nu)
        pops.append([(math.exp(log_xi) * w[i, i] + r[i, i]).real for i in idx])
        if len(nus) >= 3 and max(nus[-3:]) - min(nus[-3:]) < tol:
            xi1, xi2 = math.exp(2 * times[-2] * rate), math.exp(2 * times[-1] * rate)
            limit = nus[-1] if not math.isfinite(xi2) else (xi2 * nus[-1] - xi1 * nus[-2]) / (xi2 - xi1)
            if not math.isfinite(limit):
                limit = nus[-1]
            return SaturationResult(
                e_n=max(0.0, -math.log2(limit)) if limit > 0 else math.inf,
                nu_limit=float(limit),
                nu_iterates=np.array(nus),
                times=np.array(times),
                pair_populations=np.array(pops),
                growth_rate=rate,
                growth_rank=rank,
            )
    raise ExtrapolationError(
        f"nu_minus did not settle within {tol:g} after {n_max} steps",
        tuple(zip(times, nus)),
    )
