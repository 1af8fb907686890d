"""Eigenspectra of H_NH, end/bulk labelling, stability phases and sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import EigensolverError, ValidationError
from .lattice import Boundary, ChainParams, NHOperator, bloch_family, build_chain
from .twosite import TwoSiteParams, twosite_max_im

END_THRESHOLD = 0.5
DEGENERACY_TOL = 1e-10


class ModeKind(str, Enum):
    END = "End"
    BULK = "Bulk"


class Region(str, Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"
    BOUNDARY = "Boundary"


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    eigenvalues: np.ndarray
    localization: np.ndarray
    labels: tuple
    im_e_end: float
    im_e_bulk_max: float
    im_e_bulk_min: float
    eigenvectors: Optional[np.ndarray] = None

    @property
    def end_mask(self) -> np.ndarray:
        return np.array([lab is ModeKind.END for lab in self.labels], dtype=bool)

    @property
    def end_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[self.end_mask]

    @property
    def bulk_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[~self.end_mask]

    @property
    def n_end(self) -> int:
        return int(self.end_mask.sum())

    @property
    def stable(self) -> bool:
        return bool(np.all(self.eigenvalues.imag < 0))


def _terminal_modes(op: NHOperator) -> np.ndarray:
    L = op.n_modes
    first = np.arange(8)
    last = np.arange(L - 8, L)
    ann = np.r_[first, last] if L > 8 else first
    return np.r_[ann, ann + L]


def _clusters(values: np.ndarray, tol: float):
    """Groups of indices whose eigenvalues chain together within ``tol``."""
    order = np.lexsort((values.imag, values.real))
    parent = list(range(len(values)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    # only neighbours in real part can be within tol; scan a sliding window
    for pos, i in enumerate(order):
        for j in order[pos + 1:]:
            if values[j].real - values[i].real > tol:
                break
            if abs(values[j] - values[i]) <= tol:
                parent[find(j)] = find(i)
    groups = {}
    for i in range(len(values)):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _eig(matrix):
    try:
        w, v = sla.eig(matrix, check_finite=True)
    except (sla.LinAlgError, ValueError) as exc:
        norm = np.linalg.norm(matrix) if np.all(np.isfinite(matrix)) else math.inf
        raise EigensolverError(
            f"eigendecomposition failed ({exc}); operator Frobenius norm {norm:.3e}"
        ) from exc
    return w, v


def eigenspectrum(op: NHOperator, keep_vectors: bool = False) -> SpectrumReport:
    """Diagonalise ``op`` and label each eigenpair End or Bulk.

    Localisation is the normalised weight on the first and last unit cells.
    Eigenvalues that coincide within 1e-10 are treated as one subspace and
    share the projector-trace weight.
    """
    matrix = np.asarray(op.matrix)
    w, v = _eig(matrix)
    v = v / np.linalg.norm(v, axis=0)
    term = _terminal_modes(op)
    loc = np.empty(len(w))
    for group in _clusters(w, DEGENERACY_TOL):
        if len(group) == 1:
            i = group[0]
            loc[i] = np.sum(np.abs(v[term, i]) ** 2)
        else:
            q, _ = np.linalg.qr(v[:, group])
            loc[group] = np.sum(np.abs(q[term]) ** 2) / len(group)
    loc = np.clip(loc, 0.0, 1.0)

    open_chain = not op.is_bloch and op.params.boundary is Boundary.OBC
    labels = tuple(
        ModeKind.END if open_chain and x > END_THRESHOLD else ModeKind.BULK for x in loc
    )
    end = np.array([lab is ModeKind.END for lab in labels], dtype=bool)
    im = w.imag
    nan = float("nan")
    return SpectrumReport(
        eigenvalues=w,
        localization=loc,
        labels=labels,
        im_e_end=float(im[end].max()) if end.any() else nan,
        im_e_bulk_max=float(im[~end].max()) if (~end).any() else nan,
        im_e_bulk_min=float(im[~end].min()) if (~end).any() else nan,
        eigenvectors=v if keep_vectors else None,
    )


@dataclass(frozen=True)
class PhaseTolerances:
    """Thresholds for :func:`classify_phase`.

    ``delta_gap`` separates the gapless (D) from the gapped (E) unstable bulk;
    comparisons closer than ``margin`` produce a Boundary verdict.
    """

    delta_gap: float = 1e-3
    margin: float = 1e-9
    bloch_k_points: int = 512


@dataclass(frozen=True)
class PhaseLabel:
    region: Region
    stable_end: bool
    stable_bulk: bool
    im_e_end: float = float("nan")
    im_e_bulk_max: float = float("nan")
    bulk_im_gap: float = float("nan")


def bulk_im_gap(params: ChainParams, k_points: int = 512) -> float:
    """Smallest |Im E| over the Bloch bands sampled on ``k_points`` momenta."""
    ks = np.linspace(0.0, 2 * np.pi, k_points, endpoint=False)
    energies = np.linalg.eigvals(bloch_family(params)(ks))
    return float(np.abs(energies.imag).min())


def classify_phase(
    params: ChainParams,
    n_cells: Optional[int] = None,
    tolerances: PhaseTolerances = PhaseTolerances(),
) -> PhaseLabel:
    """Stability region of the open chain.

    Checked in order: an unstable bulk gives D (some Bloch band within
    ``delta_gap`` of Im E = 0) or E (gapped); otherwise an unstable end mode
    gives C; otherwise A when the end mode lies inside the bulk band and B
    when it sits above it.
    """
    chain = params.replace(boundary=Boundary.OBC, n_cells=n_cells or params.n_cells)
    rep = eigenspectrum(build_chain(chain))
    tol = tolerances.margin
    e_end, b_max = rep.im_e_end, rep.im_e_bulk_max
    has_end = not math.isnan(e_end)
    stable_bulk = b_max < 0
    stable_end = (e_end < 0) if has_end else stable_bulk

    def label(region, gap=float("nan")):
        return PhaseLabel(region, bool(stable_end), bool(stable_bulk), e_end, b_max, gap)

    if abs(b_max) <= tol:
        return label(Region.BOUNDARY)
    if not stable_bulk:
        gap = bulk_im_gap(params, tolerances.bloch_k_points)
        if abs(gap - tolerances.delta_gap) <= tol:
            return label(Region.BOUNDARY, gap)
        return label(Region.D if gap < tolerances.delta_gap else Region.E, gap)
    if not has_end:
        return label(Region.A)
    if abs(e_end) <= tol:
        return label(Region.BOUNDARY)
    if e_end > 0:
        return label(Region.C)
    if abs(e_end - b_max) <= tol:
        return label(Region.BOUNDARY)
    return label(Region.A if e_end <= b_max else Region.B)


def _pool_map(fn, items, threads):
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))  # map keeps input order
    return [fn(x) for x in items]


def _grid(bounds, steps, name):
    lo, hi = (float(x) for x in bounds)
    if isinstance(steps, bool) or int(steps) != steps or steps < 1:
        raise ValidationError(f"{name} steps must be a positive integer, got {steps!r}")
    if steps == 1:
        return np.array([lo])
    if not hi > lo:
        raise ValidationError(f"{name} range must be increasing, got ({lo}, {hi})")
    return np.linspace(lo, hi, int(steps))


@dataclass(frozen=True, eq=False)
class LineSweep:
    g_plus: np.ndarray
    im_e_end: np.ndarray
    im_e_bulk_max: np.ndarray
    im_e_twosite: np.ndarray

    columns = ("g_plus", "im_e_end", "im_e_bulk_max", "im_e_twosite")

    def rows(self):
        return list(zip(self.g_plus, self.im_e_end, self.im_e_bulk_max, self.im_e_twosite))


def sweep_line(
    params: ChainParams,
    g_plus_range: Sequence[float],
    steps: int,
    threads: Optional[int] = None,
) -> LineSweep:
    """Im E_e and the bulk band edge along a G+ line, with the two-site overlay."""
    grid = _grid(g_plus_range, steps, "g_plus")
    chain = params.replace(boundary=Boundary.OBC)

    def point(gp):
        p = chain.replace(g_plus=float(gp))
        rep = eigenspectrum(build_chain(p))
        two = twosite_max_im(TwoSiteParams.from_chain(p))
        return rep.im_e_end, rep.im_e_bulk_max, two

    out = np.array(_pool_map(point, list(grid), threads), dtype=float).reshape(-1, 3)
    return LineSweep(grid, out[:, 0], out[:, 1], out[:, 2])


@dataclass(frozen=True, eq=False)
class PhaseDiagram:
    g_minus: np.ndarray
    g_plus: np.ndarray
    labels: tuple  # labels[i][j] at (g_minus[i], g_plus[j])

    def regions(self) -> np.ndarray:
        return np.array([[lab.region.value for lab in row] for row in self.labels])


def phase_diagram(
    g_minus_range: Sequence[float],
    g_plus_range: Sequence[float],
    grid: Sequence[int],
    params: ChainParams = ChainParams(),
    tolerances: PhaseTolerances = PhaseTolerances(),
    threads: Optional[int] = None,
) -> PhaseDiagram:
    if len(grid) != 2:
        raise ValidationError(f"grid must be (n_g_minus, n_g_plus), got {grid!r}")
    gms = _grid(g_minus_range, grid[0], "g_minus")
    gps = _grid(g_plus_range, grid[1], "g_plus")
    tasks = [(gm, gp) for gm in gms for gp in gps]

    def point(task):
        gm, gp = task
        return classify_phase(params.replace(g_minus=float(gm), g_plus=float(gp)), tolerances=tolerances)

    flat = _pool_map(point, tasks, threads)
    n = len(gps)
    labels = tuple(tuple(flat[i * n:(i + 1) * n]) for i in range(len(gms)))
    return PhaseDiagram(gms, gps, labels)


def collapse_sequence(regions: Sequence[Region]) -> list:
    """Drop Boundary verdicts and merge repeats: A A B B C -> A B C."""
    out = []
    for r in regions:
        if r is Region.BOUNDARY:
            continue
        if not out or out[-1] is not r:
            out.append(r)
    return out
