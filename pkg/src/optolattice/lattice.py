"""Superlattice model: parameters, non-Hermitian BdG operators, dissipation data, disorder.

Mode ordering (real space, ``L = 8 * n_cells`` bosonic modes)::

    [a_1, b_1, ..., a_{4N}, b_{4N};  a_1^+, b_1^+, ..., a_{4N}^+, b_{4N}^+]

``a`` is the optical mode and ``b`` the mechanical mode of a site; sites are
numbered from 1 and follow the blue-red-red-blue drive pattern inside each
unit cell.  The Bloch operators use the same ordering restricted to one cell
(16 labels).

The operator H_NH is assembled row by row from the linearised quantum Langevin
equations, ``d/dt x = -i H_NH x + noise``, so that the BdG Hamiltonian is
recovered afterwards as ``sigma_z (H_NH + i eta/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import SizingError, UnsupportedCombinationError, ValidationError

BLUE_SLOTS = (0, 3)
RED_SLOTS = (1, 2)
DEFAULT_OPTICAL_HOP = 0.05
DEFAULT_MEMORY_BUDGET = 1 << 30  # bytes for one dense complex operator


class Boundary(str, Enum):
    OBC = "OBC"
    PBC = "PBC"


class DisorderKind(str, Enum):
    HOPPING_J = "HoppingJ"
    MECH_FREQUENCY = "MechFrequency"
    END_GAMMA = "EndGamma"
    OPTICAL_HOPPING = "OpticalHopping"


def _check_finite(name, value, *, positive=False, nonneg=False):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value}")
    if positive and value <= 0:
        raise ValidationError(f"{name} must be > 0, got {value}")
    if nonneg and value < 0:
        raise ValidationError(f"{name} must be >= 0, got {value}")
    return value


@dataclass(frozen=True)
class ChainParams:
    """Physical and structural parameters; energies in units of ``kappa``.

    Defaults are the topological working point G+=0.242, G-=1, J=0.5,
    gamma=1e-4 on a 10-cell open chain.
    """

    g_plus: float = 0.242
    g_minus: float = 1.0
    j_hop: float = 0.5
    kappa: float = 1.0
    gamma: float = 1e-4
    n_c: float = 0.0
    n_m: float = 0.0
    n_cells: int = 10
    boundary: Boundary = Boundary.OBC

    def __post_init__(self):
        for name in ("g_plus", "g_minus", "j_hop", "n_c", "n_m"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name), nonneg=True))
        for name in ("kappa", "gamma"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name), positive=True))
        n = self.n_cells
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
            raise ValidationError(f"n_cells must be an integer >= 1, got {n!r}")
        object.__setattr__(self, "n_cells", int(n))
        try:
            object.__setattr__(self, "boundary", Boundary(self.boundary))
        except ValueError:
            raise ValidationError(f"boundary must be OBC or PBC, got {self.boundary!r}") from None

    @property
    def n_sites(self) -> int:
        return 4 * self.n_cells

    @property
    def n_modes(self) -> int:
        return 8 * self.n_cells

    @property
    def dim(self) -> int:
        return 16 * self.n_cells

    def replace(self, **changes) -> "ChainParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "g_plus": self.g_plus,
            "g_minus": self.g_minus,
            "j_hop": self.j_hop,
            "kappa": self.kappa,
            "gamma": self.gamma,
            "n_c": self.n_c,
            "n_m": self.n_m,
            "n_cells": self.n_cells,
            "boundary": self.boundary.value,
        }


@dataclass(frozen=True)
class DisorderSpec:
    """One disorder channel.

    ``amplitude`` meaning depends on ``kind``: relative bond spread for
    HoppingJ, absolute detuning spread (units of kappa) for MechFrequency,
    gamma multiplier on the two end sites for EndGamma, absolute optical hop
    spread for OpticalHopping (defaults to 0.05).
    """

    kind: DisorderKind
    amplitude: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        try:
            kind = DisorderKind(self.kind)
        except ValueError:
            raise ValidationError(f"unknown disorder kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        amp = self.amplitude
        if amp is None:
            if kind is not DisorderKind.OPTICAL_HOPPING:
                raise ValidationError(f"{kind.value} disorder needs an amplitude")
            amp = DEFAULT_OPTICAL_HOP
        amp = _check_finite("amplitude", amp, nonneg=True)
        if kind is DisorderKind.END_GAMMA and amp <= 0:
            raise ValidationError("EndGamma amplitude is a gamma multiplier and must be > 0")
        object.__setattr__(self, "amplitude", amp)
        seed = self.seed
        if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < 2**64:
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
        object.__setattr__(self, "seed", int(seed))


_KIND_CODE = {
    DisorderKind.HOPPING_J: 1,
    DisorderKind.MECH_FREQUENCY: 2,
    DisorderKind.END_GAMMA: 3,
    DisorderKind.OPTICAL_HOPPING: 4,
}


@dataclass(frozen=True)
class DisorderRealization:
    """Sampled disorder.

    ``values`` holds per-bond hop offsets (HoppingJ, OpticalHopping), per-site
    detunings (MechFrequency) or per-site gamma multipliers (EndGamma).
    """

    spec: DisorderSpec
    values: np.ndarray

    @property
    def kind(self) -> DisorderKind:
        return self.spec.kind


def _n_bonds(params: ChainParams) -> int:
    return params.n_sites if params.boundary is Boundary.PBC else params.n_sites - 1


def _uniform(seed: int, kind: DisorderKind, index: int) -> float:
    # independent stream per draw -> realisations do not depend on draw order
    rng = np.random.default_rng([seed, _KIND_CODE[kind], index])
    return float(rng.uniform(-1.0, 1.0))


def sample_disorder(spec: DisorderSpec, params: ChainParams) -> DisorderRealization:
    kind, amp = spec.kind, spec.amplitude
    if kind is DisorderKind.END_GAMMA:
        values = np.ones(params.n_sites)
        values[[0, -1]] = amp
    else:
        count = params.n_sites if kind is DisorderKind.MECH_FREQUENCY else _n_bonds(params)
        scale = amp * params.j_hop if kind is DisorderKind.HOPPING_J else amp
        values = np.array([scale * _uniform(spec.seed, kind, i) for i in range(count)])
        if amp == 0:
            values = np.zeros(count)
    values.setflags(write=False)
    return DisorderRealization(spec, values)


def _realize(disorder, params):
    out = {}
    for item in disorder or ():
        if isinstance(item, DisorderSpec):
            item = sample_disorder(item, params)
        if not isinstance(item, DisorderRealization):
            raise ValidationError(f"disorder entries must be DisorderSpec, got {type(item).__name__}")
        if item.kind in out:
            raise ValidationError(f"duplicate {item.kind.value} disorder")
        out[item.kind] = item.values
    return out


def mode_labels(n_sites: int) -> tuple:
    ann = []
    for s in range(1, n_sites + 1):
        ann += [f"a{s}", f"b{s}"]
    return tuple(ann + [lab + "^+" for lab in ann])


@dataclass(frozen=True, eq=False)
class NHOperator:
    """Dense non-Hermitian BdG operator with its basis metadata."""

    matrix: np.ndarray
    basis: tuple
    params: ChainParams
    k: Optional[float] = None
    disorder: tuple = field(default=())

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_modes(self) -> int:
        return self.dim // 2

    @property
    def n_sites(self) -> int:
        return self.dim // 4

    @property
    def is_bloch(self) -> bool:
        return self.k is not None

    def index(self, label: str) -> int:
        return self.basis.index(label)

    def bdg_hamiltonian(self, eta_bar: Optional[np.ndarray] = None) -> np.ndarray:
        """Recover the Hermitian BdG matrix sigma_z (H_NH + i eta/2)."""
        if eta_bar is None:
            eta_bar = 2.0 * -np.diag(self.matrix).imag
        sz = np.r_[np.ones(self.n_modes), -np.ones(self.n_modes)]
        return sz[:, None] * (self.matrix + 0.5j * np.diag(eta_bar))


def mode_index(n_modes: int, site: int, species: str, dagger: bool = False) -> int:
    """Position of a_site / b_site (1-based site) in the doubled basis."""
    if species not in ("a", "b"):
        raise ValidationError(f"species must be 'a' (optical) or 'b' (mechanical), got {species!r}")
    if not 1 <= site <= n_modes // 2:
        raise ValidationError(f"site {site} outside 1..{n_modes // 2}")
    i = 2 * (site - 1) + (species == "b")
    return i + n_modes if dagger else i


def _site_rates(params, realized):
    n = params.n_sites
    kappa = np.full(n, params.kappa)
    gamma = np.full(n, params.gamma)
    if DisorderKind.END_GAMMA in realized:
        gamma = gamma * realized[DisorderKind.END_GAMMA]
    return kappa, gamma


def _check_budget(dim, budget):
    need = dim * dim * 16
    if need > budget:
        raise SizingError(
            f"dense operator of dimension {dim} needs {need} bytes, budget is {budget}"
        )


def build_chain(
    params: ChainParams,
    disorder: Optional[Sequence] = None,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> NHOperator:
    """Real-space H_NH of dimension 16 N."""
    realized = _realize(disorder, params)
    n, L = params.n_sites, params.n_modes
    _check_budget(2 * L, memory_budget)
    H = np.zeros((2 * L, 2 * L), dtype=complex)
    kappa, gamma = _site_rates(params, realized)
    gp, gm = params.g_plus, params.g_minus
    detune = realized.get(DisorderKind.MECH_FREQUENCY, np.zeros(n))

    for s in range(n):
        a, b = 2 * s, 2 * s + 1
        ad, bd = a + L, b + L
        H[a, a] = H[ad, ad] = -0.5j * kappa[s]
        H[b, b] = H[bd, bd] = -0.5j * gamma[s]
        H[b, b] += detune[s]
        H[bd, bd] -= detune[s]
        if s % 4 in BLUE_SLOTS:
            H[a, bd] = H[b, ad] = gp
            H[ad, b] = H[bd, a] = -gp
        else:
            H[a, b] = H[b, a] = gm
            H[ad, bd] = H[bd, ad] = -gm

    bonds = [(s, s + 1) for s in range(n - 1)]
    if params.boundary is Boundary.PBC:
        bonds.append((n - 1, 0))
    dj = realized.get(DisorderKind.HOPPING_J, np.zeros(len(bonds)))
    dt = realized.get(DisorderKind.OPTICAL_HOPPING, np.zeros(len(bonds)))
    for i, (s, r) in enumerate(bonds):
        j = params.j_hop + dj[i]
        bs, br = 2 * s + 1, 2 * r + 1
        H[bs, br] -= j
        H[br, bs] -= j
        H[bs + L, br + L] += j
        H[br + L, bs + L] += j
        if dt[i]:
            as_, ar = 2 * s, 2 * r
            H[as_, ar] += dt[i]
            H[ar, as_] += dt[i]
            H[as_ + L, ar + L] -= dt[i]
            H[ar + L, as_ + L] -= dt[i]

    H.setflags(write=False)
    specs = tuple(d.spec if isinstance(d, DisorderRealization) else d for d in disorder or ())
    return NHOperator(H, mode_labels(n), params, None, specs)


def _cell_index(n_cells, cell):
    idx = np.arange(16)
    return np.where(idx < 8, 8 * cell + idx, 8 * n_cells + 8 * cell + idx - 8)


def cell_blocks(params: ChainParams):
    """(intra, forward, backward) 16x16 couplings of one unit cell.

    ``forward`` couples rows of cell n to columns of cell n+1.
    """
    two = build_chain(params.replace(n_cells=2, boundary=Boundary.OBC)).matrix
    i0, i1 = _cell_index(2, 0), _cell_index(2, 1)
    return (
        two[np.ix_(i0, i0)].copy(),
        two[np.ix_(i0, i1)].copy(),
        two[np.ix_(i1, i0)].copy(),
    )


def build_bloch(params: ChainParams, k: float, disorder=None) -> NHOperator:
    """16x16 Bloch operator H_NH(k) for the translation-invariant chain.

    Fourier convention d_n = sum_k exp(-i k n) d_k, so the forward coupling
    carries exp(-i k).
    """
    if disorder:
        raise UnsupportedCombinationError("Bloch operators require a translation-invariant chain")
    k = _check_finite("k", k)
    m0, fwd, bwd = cell_blocks(params)
    H = m0 + np.exp(-1j * k) * fwd + np.exp(1j * k) * bwd
    H.setflags(write=False)
    return NHOperator(H, mode_labels(4), params, float(k % (2 * np.pi)))


def bloch_derivative(params: ChainParams, k: float) -> np.ndarray:
    """Analytic d H_NH(k) / dk."""
    _, fwd, bwd = cell_blocks(params)
    return -1j * np.exp(-1j * k) * fwd + 1j * np.exp(1j * k) * bwd


def bloch_family(params: ChainParams):
    """Vectorised Bloch builder: returns ``f(ks) -> (len(ks), 16, 16)``."""
    m0, fwd, bwd = cell_blocks(params)

    def at(ks):
        ks = np.asarray(ks, dtype=float)[..., None, None]
        return m0 + np.exp(-1j * ks) * fwd + np.exp(1j * ks) * bwd

    return at


@dataclass(frozen=True, eq=False)
class DissipationData:
    """Diagonal dissipation/noise data in the doubled ordering.

    ``eta_bar`` and ``d_diag`` have length 2L; ``m_diag`` and ``n_diag``
    (the third-quantisation M and N) have length L.
    """

    eta_bar: np.ndarray
    d_diag: np.ndarray
    m_diag: np.ndarray
    n_diag: np.ndarray

    @property
    def d_matrix(self) -> np.ndarray:
        return np.diag(self.d_diag)

    def third_quantization_rhs(self) -> np.ndarray:
        return np.diag(np.r_[2 * self.m_diag, 2 * self.n_diag])


def _dissipation(kappa, gamma, n_c, n_m):
    rates = np.empty(2 * len(kappa))
    rates[0::2], rates[1::2] = kappa, gamma
    occ = np.empty_like(rates)
    occ[0::2], occ[1::2] = n_c, n_m
    m = 0.5 * rates * (occ + 1)
    nn = 0.5 * rates * occ
    eta = np.r_[rates, rates]
    d = np.r_[rates * (occ + 1), rates * occ]
    for arr in (eta, d, m, nn):
        arr.setflags(write=False)
    return DissipationData(eta, d, m, nn)


def dissipation_data(params: ChainParams, disorder: Optional[Sequence] = None) -> DissipationData:
    realized = _realize(disorder, params)
    kappa, gamma = _site_rates(params, realized)
    return _dissipation(kappa, gamma, params.n_c, params.n_m)


def hamiltonian_blocks(params: ChainParams):
    """Unit-cell blocks (P, Q, R) of the real-space quadratic form.

    The Hamiltonian reads ``sum_i d_i^+ P d_i + d_i Q d_i + h.c.-pairing +
    d_i^+ R d_{i+1} + h.c.`` in the per-cell vector
    ``d_i = (a_1, b_1, ..., a_4, b_4)``; mechanical hops carry -J.
    """
    J, gm, gp = params.j_hop, params.g_minus, params.g_plus
    P = np.zeros((8, 8))
    for s in range(3):
        P[2 * s + 1, 2 * s + 3] = P[2 * s + 3, 2 * s + 1] = -J
    for s in RED_SLOTS:
        P[2 * s, 2 * s + 1] = P[2 * s + 1, 2 * s] = gm
    Q = np.zeros((8, 8))
    for s in BLUE_SLOTS:
        Q[2 * s, 2 * s + 1] = Q[2 * s + 1, 2 * s] = gp
    R = np.zeros((8, 8))
    R[7, 1] = -J
    return P, Q, R


def single_site(
    drive: str,
    coupling: float,
    kappa: float = 1.0,
    gamma: float = 1e-4,
    n_c: float = 0.0,
    n_m: float = 0.0,
):
    """A lone optomechanical site (modes a, b) under a red or blue drive.

    Returns ``(NHOperator, DissipationData, (h, k))`` where ``h`` and ``k`` are
    the 2x2 hopping and pairing matrices of the quadratic form.
    """
    coupling = _check_finite("coupling", coupling, nonneg=True)
    kappa = _check_finite("kappa", kappa, positive=True)
    gamma = _check_finite("gamma", gamma, positive=True)
    n_c = _check_finite("n_c", n_c, nonneg=True)
    n_m = _check_finite("n_m", n_m, nonneg=True)
    H = np.diag([-0.5j * kappa, -0.5j * gamma, -0.5j * kappa, -0.5j * gamma])
    h = np.zeros((2, 2))
    kk = np.zeros((2, 2))
    if drive == "red":
        H[0, 1] = H[1, 0] = coupling
        H[2, 3] = H[3, 2] = -coupling
        h[0, 1] = h[1, 0] = coupling
    elif drive == "blue":
        H[0, 3] = H[1, 2] = coupling
        H[2, 1] = H[3, 0] = -coupling
        kk[0, 1] = kk[1, 0] = coupling / 2
    else:
        raise ValidationError(f"drive must be 'red' or 'blue', got {drive!r}")
    H.setflags(write=False)
    params = ChainParams(
        g_plus=coupling if drive == "blue" else 0.0,
        g_minus=coupling if drive == "red" else 0.0,
        j_hop=0.0, kappa=kappa, gamma=gamma, n_c=n_c, n_m=n_m, n_cells=1,
    )
    op = NHOperator(H, mode_labels(1), params)
    diss = _dissipation(np.array([kappa]), np.array([gamma]), n_c, n_m)
    return op, diss, (h, kk)
