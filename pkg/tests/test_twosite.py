import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optolattice.errors import ValidationError
from optolattice.lattice import ChainParams
from optolattice.twosite import (
    TwoSiteParams,
    asymptote_large_gplus,
    asymptote_small_gplus,
    cubic_small_gplus,
    dynamical_matrix,
    twosite_max_im,
    twosite_poles,
)

# max Im of the roots of det A(omega) = 0, solved symbolically (G- = 1, kappa = 1, gamma = 1e-4)
EXACT_MAX_IM = [
    ((1e-4, 0.5), -0.10343066829292075),
    ((1.0, 0.5), 0.6822189758059931),
    ((0.3, 0.5), 0.0362698626085758),
    ((0.0, 0.5), -0.10343068880927084),
    ((1e-4, 0.3), -0.04207212346891544),
]


@pytest.mark.parametrize("args, expected", EXACT_MAX_IM)
def test_exact_poles_frozen(args, expected):
    g_plus, j = args
    assert twosite_max_im(TwoSiteParams(g_plus, 1.0, j)) == pytest.approx(expected, rel=1e-10, abs=1e-14)


def test_poles_sorted_by_descending_growth():
    poles = twosite_poles(TwoSiteParams(0.3, 1.0, 0.5))
    assert np.all(np.diff(poles.imag) <= 0)
    assert poles.size == 4


def test_decoupled_limit():
    poles = twosite_poles(TwoSiteParams(0.0, 0.0, 0.0))
    assert sorted(np.round(poles.imag, 12)) == [-0.5, -0.5, -5e-5, -5e-5]


def test_matrix_layout():
    m = dynamical_matrix(TwoSiteParams(0.2, 1.0, 0.5))
    assert m[0, 1] == 0.2 and m[1, 0] == -0.2
    assert m[2, 3] == m[3, 2] == -1.0
    assert m[1, 3] == m[3, 1] == 0.5


def test_from_chain():
    p = TwoSiteParams.from_chain(ChainParams(g_plus=0.1, g_minus=0.9, j_hop=0.4, gamma=0.01))
    assert (p.g_plus, p.g_minus, p.j_hop, p.kappa, p.gamma) == (0.1, 0.9, 0.4, 1.0, 0.01)


@pytest.mark.parametrize("bad", [{"g_plus": -1.0}, {"kappa": 0.0}, {"j_hop": float("nan")}])
def test_invalid_params(bad):
    kw = dict(g_plus=0.1, g_minus=1.0, j_hop=0.5)
    kw.update(bad)
    with pytest.raises(ValidationError):
        TwoSiteParams(**kw)


def test_small_gplus_formula_values():
    p = TwoSiteParams(1e-4, 1.0, 0.5)
    assert asymptote_small_gplus(p).value == pytest.approx(-0.18753125, rel=1e-12)
    assert asymptote_small_gplus(TwoSiteParams(1e-4, 1.0, 0.0)).value == pytest.approx(-5e-5)


def test_large_gplus_formula_values():
    assert asymptote_large_gplus(TwoSiteParams(1.0, 1.0, 0.5)) == pytest.approx(1.5614906866, rel=1e-9)
    # G+ = 0 with gamma < kappa reduces to -gamma
    assert asymptote_large_gplus(TwoSiteParams(0.0, 1.0, 0.5, gamma=0.1)) == pytest.approx(-0.1)


def test_small_gplus_warns_outside_regime():
    with pytest.warns(RuntimeWarning):
        out = asymptote_small_gplus(TwoSiteParams(1e-4, 0.5, 0.5))
    assert not out.in_regime and out.note


def test_small_gplus_silent_inside_regime():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert asymptote_small_gplus(TwoSiteParams(1e-4, 1.0, 0.3)).in_regime


@pytest.mark.parametrize("j", [0.05, 0.1, 0.2, 0.3, 0.5])
def test_small_gplus_formula_tracks_twice_the_growth_rate(j):
    # the expansion reproduces 2 Im E up to terms beyond fourth order in J/G-
    p = TwoSiteParams(1e-4, 1.0, j)
    gap = abs(asymptote_small_gplus(p).value - 2 * twosite_max_im(p))
    assert gap < j**4 + 1e-4
    assert gap < 0.1 * abs(2 * twosite_max_im(p))


@pytest.mark.parametrize("g_plus, rel", [(5.0, 0.01), (10.0, 3e-3), (50.0, 1e-4)])
def test_large_gplus_formula_tracks_twice_the_growth_rate(g_plus, rel):
    p = TwoSiteParams(g_plus, 1.0, 0.5)
    assert asymptote_large_gplus(p) == pytest.approx(2 * twosite_max_im(p), rel=rel)


def test_cubic_form_matches_exact_pole():
    p = TwoSiteParams(1e-4, 1.0, 0.5)
    assert cubic_small_gplus(p) == pytest.approx(twosite_max_im(p), abs=2e-5)


@settings(max_examples=25, deadline=None)
@given(
    g_plus=st.floats(0.0, 2.0),
    g_minus=st.floats(0.1, 2.0),
    j=st.floats(0.0, 1.0),
    gamma=st.floats(1e-5, 0.1),
)
def test_poles_make_the_matrix_singular(g_plus, g_minus, j, gamma):
    p = TwoSiteParams(g_plus, g_minus, j, gamma=gamma)
    m = dynamical_matrix(p)
    scale = max(1.0, np.abs(m).max())
    for w in twosite_poles(p):
        assert np.linalg.svd(m - w * np.eye(4), compute_uv=False)[-1] < 1e-6 * scale


@settings(max_examples=25, deadline=None)
@given(g_plus=st.floats(0.0, 2.0), j=st.floats(0.0, 1.0))
def test_growth_rate_bounded_by_total_damping(g_plus, j):
    # the trace fixes the sum of the imaginary parts
    p = TwoSiteParams(g_plus, 1.0, j)
    assert math.isclose(twosite_poles(p).imag.sum(), -(p.kappa + p.gamma), rel_tol=1e-10)
