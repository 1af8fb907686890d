"""Oracle suite: quick cross-checks between independent code paths."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .gaussian import (
    integrate_covariance,
    log_negativity,
    lyapunov_residual,
    nu_minus,
    quadrature_block,
    stationary_covariance,
    symplectic_nu_minus,
    third_quantization_from_blocks,
    third_quantization_stationary,
)
from .gaussian.covariance import CovarianceState, Provenance
from .gaussian.third_quantization import gamma_kernel, gamma_series
from .lattice import ChainParams, build_bloch, build_chain, dissipation_data, single_site
from .topology import chern_number, chiral_operator, chiral_residual, compactified_hamiltonian, effective_hamiltonian
from .twosite import TwoSiteParams, cubic_small_gplus, twosite_max_im


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    seconds: float


def matched_distance(a, b) -> float:
    cost = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def _particle_hole():
    h = build_chain(ChainParams()).matrix
    e = np.linalg.eigvals(h)
    return matched_distance(e, -e.conj()) / np.linalg.norm(h, 2), 1e-10


def _bloch_pbc():
    p = ChainParams(n_cells=3, boundary="PBC")
    real = np.linalg.eigvals(build_chain(p).matrix)
    bloch = np.concatenate([np.linalg.eigvals(build_bloch(p, 2 * np.pi * m / 3).matrix) for m in range(3)])
    return matched_distance(real, bloch), 1e-9


def _chiral():
    s = chiral_operator().matrix
    p = ChainParams()
    ks = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    return max(chiral_residual(s, build_bloch(p, k).matrix) for k in ks), 1e-12


def _compactified():
    p = ChainParams()
    worst = 0.0
    for k, eta in [(1.0, 0.7), (0.2, -2.5), (3.0, 0.0)]:
        a = np.linalg.eigvalsh(effective_hamiltonian(p, k, eta))
        b = np.linalg.eigvalsh(compactified_hamiltonian(p, k, eta))
        worst = max(worst, float(np.abs(a - b).max()))
    return worst, 1e-10


def _single_site(drive, coupling, n_m):
    op, d, (h, k) = single_site(drive, coupling, n_m=n_m)
    lyap = stationary_covariance(op, d).v_matrix
    tq = third_quantization_stationary(third_quantization_from_blocks(h, k, d.m_diag, d.n_diag, reference=op)).v_matrix
    rate = np.abs(np.linalg.eigvals(-1j * op.matrix).real).min()
    ode = integrate_covariance(op, d, 20 / rate).v_matrix
    return max(np.abs(lyap - tq).max(), np.abs(lyap - ode).max(), np.abs(tq - ode).max())


def _solver_equivalence():
    return max(_single_site("red", 0.3, 2.0), _single_site("blue", 0.004, 0.0)), 1e-6


def _lyapunov():
    p = ChainParams()
    op, d = build_chain(p), dissipation_data(p)
    return lyapunov_residual(op, d, stationary_covariance(op, d).v_matrix), 1e-9


def _negativity_oracle():
    p = ChainParams()
    v = stationary_covariance(build_chain(p), dissipation_data(p))
    q = quadrature_block(v, 1, "a", 1, "b")
    return abs(nu_minus(q) - symplectic_nu_minus(q)), 1e-9


def _vacuum_negativity():
    L = 8
    v = np.zeros((2 * L, 2 * L), dtype=complex)
    v[:L, :L] = np.eye(L)
    q = quadrature_block(CovarianceState(v, Provenance.LYAPUNOV), 1, "a", 1, "b")
    return abs(log_negativity(q)) + float(np.abs(q.matrix - np.eye(4)).max()), 1e-12


def _chern():
    rep = chern_number(ChainParams())
    return abs(rep.chern - round(rep.chern)) + abs(round(rep.chern) - 4), 1e-2


def _cubic():
    p = TwoSiteParams(1e-4, 1.0, 0.5)
    return abs(cubic_small_gplus(p) - twosite_max_im(p)), 1e-3


def _gamma_series():
    s = np.array([1e-5, -1e-5, 1e-5j, (1 + 1j) * 7e-6])
    closed = gamma_kernel(s, 1.0)
    return float(np.abs(gamma_series(s, 1.0) / closed - 1).max()), 1e-9


CHECKS = [
    ("particle-hole pairing", _particle_hole),
    ("bloch vs periodic chain", _bloch_pbc),
    ("chiral symmetry residual", _chiral),
    ("compactified spectrum", _compactified),
    ("solver equivalence (single sites)", _solver_equivalence),
    ("lyapunov residual", _lyapunov),
    ("negativity vs symplectic oracle", _negativity_oracle),
    ("vacuum negativity", _vacuum_negativity),
    ("chern integrality", _chern),
    ("two-site cubic vs exact", _cubic),
    ("gamma kernel continuity", _gamma_series),
]


def run_checks():
    results = []
    for name, fn in CHECKS:
        start = time.perf_counter()
        try:
            value, threshold = fn()
            passed = bool(value < threshold)
        except Exception:  # a crashing oracle is a failed oracle
            value, threshold, passed = math.nan, math.nan, False
        results.append(CheckResult(name, passed, float(value), float(threshold), time.perf_counter() - start))
    return results


def format_table(results) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  value       threshold"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name:<{width}}  {status:<6}  {r.value:<10.3e}  {r.threshold:.0e}")
    return "\n".join(lines)
