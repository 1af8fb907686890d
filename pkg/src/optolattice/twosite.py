"""Two-site reduced model for the end-state dissipation rate.

Site 1 is blue-driven (pairing G+ between a1 and b1), site 2 red-driven
(beam splitter G- between a2 and b2), and the mechanical modes hop with J.
In the basis (a1, b1^+, a2^+, b2^+) the time-domain dynamical matrix reads::

    [[-i k/2,  G+,      0,       0     ],
     [-G+,     -i g/2,  0,       J     ],
     [ 0,       0,     -i k/2,  -G-    ],
     [ 0,       J,     -G-,     -i g/2 ]]

which is the conjugation-consistent version of the pole matrix in which b1^+
appears next to annihilation operators.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class TwoSiteParams:
    g_plus: float
    g_minus: float
    j_hop: float
    kappa: float = 1.0
    gamma: float = 1e-4

    def __post_init__(self):
        for name in ("g_plus", "g_minus", "j_hop", "kappa", "gamma"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
                raise ValidationError(f"{name} must be a finite real, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.g_plus < 0 or self.g_minus < 0 or self.j_hop < 0:
            raise ValidationError("couplings must be >= 0")
        if self.kappa <= 0 or self.gamma <= 0:
            raise ValidationError("kappa and gamma must be > 0")

    @classmethod
    def from_chain(cls, params) -> "TwoSiteParams":
        return cls(params.g_plus, params.g_minus, params.j_hop, params.kappa, params.gamma)


def dynamical_matrix(p: TwoSiteParams) -> np.ndarray:
    k, g = 0.5j * p.kappa, 0.5j * p.gamma
    return np.array(
        [
            [-k, p.g_plus, 0, 0],
            [-p.g_plus, -g, 0, p.j_hop],
            [0, 0, -k, -p.g_minus],
            [0, p.j_hop, -p.g_minus, -g],
        ],
        dtype=complex,
    )


def twosite_poles(p: TwoSiteParams) -> np.ndarray:
    """The four complex energies, sorted by descending imaginary part."""
    w = np.linalg.eigvals(dynamical_matrix(p))
    return w[np.lexsort((w.real, -w.imag))]


def twosite_max_im(p: TwoSiteParams) -> float:
    return float(twosite_poles(p)[0].imag)


@dataclass(frozen=True)
class Asymptote:
    value: float
    in_regime: bool = True
    note: str = ""

    def __float__(self):
        return self.value


def asymptote_small_gplus(p: TwoSiteParams) -> Asymptote:
    """Leading small-G+ growth rate, expanded to fourth order in J/G-."""
    ratio2 = (p.j_hop / p.g_minus) ** 2 if p.g_minus > 0 else math.inf
    if p.j_hop == 0:
        ratio2 = 0.0
    value = -p.gamma / 2 - (p.kappa - p.gamma) * ratio2 * (1 - ratio2)
    if p.j_hop >= p.g_minus:
        note = f"expansion in J/G- used outside its regime (J={p.j_hop}, G-={p.g_minus})"
        warnings.warn(note, RuntimeWarning, stacklevel=2)
        return Asymptote(value, False, note)
    return Asymptote(value)


def asymptote_large_gplus(p: TwoSiteParams) -> float:
    return -(p.kappa + p.gamma) / 2 + math.sqrt((p.kappa - p.gamma) ** 2 / 4 + 4 * p.g_plus**2)


def cubic_small_gplus(p: TwoSiteParams) -> float:
    """Closed cubic-root form of the G+ -> 0 rate, first order in gamma.

    Only meaningful as a cross-check for gamma << kappa.
    """
    k, g, gm, j = p.kappa, p.gamma, p.g_minus, p.j_hop
    lead = k * (k**2 - 18 * gm**2 + 36 * j**2)
    disc = complex(lead**2 - (k**2 - 12 * gm**2 - 12 * j**2) ** 3)
    delta = lead + np.sqrt(disc) - 3 * (k**2 - 6 * gm**2 + 12 * j**2) * g
    root = np.cbrt(delta.real) if abs(delta.imag) < 1e-14 * max(1.0, abs(delta)) else delta ** (1 / 3)
    value = -(root + k + 2 * g) / 6 + (12 * (gm**2 + j**2) - (k - g) ** 2) / (6 * root)
    return float(np.real(value))
