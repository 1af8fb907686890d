import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optolattice.errors import (
    ConstructionError,
    NoStationaryStateError,
    UnphysicalCovarianceError,
    UnstableGrowthError,
    UnsupportedRegionError,
    ValidationError,
)
from optolattice.gaussian import (
    CovarianceState,
    Provenance,
    build_third_quantization,
    evolve_covariance,
    gamma_kernel,
    integrate_covariance,
    log_negativity,
    lyapunov_residual,
    nu_minus,
    populations,
    quadrature_block,
    saturation_negativity,
    stationary_covariance,
    symplectic_nu_minus,
    third_quantization_from_blocks,
    third_quantization_stationary,
    vacuum_covariance,
)
from optolattice.gaussian.entanglement import QuadratureBlock
from optolattice.gaussian.third_quantization import chain_blocks, gamma_series
from optolattice.lattice import ChainParams, build_chain, dissipation_data, single_site

# exact rational Lyapunov solutions (sympy), kappa=1, gamma=1e-4
RED_03_NM2 = {"n_b": 7.5532574484845323e-4, "n_a": 1.9992446742551515e-4}
BLUE_0004 = {"n_b": 1.7776000177760002, "n_a": 1.7776000177760002e-4, "ab": -0.0222200002222j}
# smallest symplectic eigenvalue of (a1, b1) at the working point, independent prototype
NU_WP = 0.7073775113430


def stationary(params):
    return stationary_covariance(build_chain(params), dissipation_data(params))


def tq_stationary(params):
    return third_quantization_stationary(build_third_quantization(params))


def test_vacuum_layout():
    v = vacuum_covariance(3)
    assert np.array_equal(v[:3, :3], np.eye(3)) and not v[3:].any() and not v[:, 3:].any()


def test_uncoupled_site_thermal_occupation():
    op, d, _ = single_site("red", 0.0, n_c=0.5, n_m=5.0)
    pops = populations(stationary_covariance(op, d))
    assert pops.optical[0] == pytest.approx(0.5, rel=1e-12)
    assert pops.mechanical[0] == pytest.approx(5.0, rel=1e-10)


def test_red_site_matches_exact_solution():
    op, d, _ = single_site("red", 0.3, n_m=2.0)
    v = stationary_covariance(op, d).v_matrix
    assert v[3, 3].real == pytest.approx(RED_03_NM2["n_b"], rel=1e-9)
    assert v[2, 2].real == pytest.approx(RED_03_NM2["n_a"], rel=1e-9)


def test_blue_site_matches_exact_solution():
    op, d, _ = single_site("blue", 0.004)
    v = stationary_covariance(op, d).v_matrix
    assert v[3, 3].real == pytest.approx(BLUE_0004["n_b"], rel=1e-9)
    assert v[2, 2].real == pytest.approx(BLUE_0004["n_a"], rel=1e-9)
    assert v[0, 3] == pytest.approx(BLUE_0004["ab"], rel=1e-9)


def test_blue_site_above_threshold_has_no_stationary_state():
    op, d, _ = single_site("blue", 0.01)
    with pytest.raises(NoStationaryStateError) as info:
        stationary_covariance(op, d)
    assert max(e.real for e in info.value.eigenvalues) > 0


def test_working_point_stationary_state(working_point):
    state = stationary(working_point)
    op = build_chain(working_point)
    assert state.provenance is Provenance.LYAPUNOV and state.is_stationary
    assert lyapunov_residual(op, dissipation_data(working_point), state.v_matrix) < 1e-9
    assert state.commutator_residual() < 1e-9
    assert state.hermiticity_residual() == 0
    pops = populations(state)
    assert pops.mechanical[0] > 100 and pops.mechanical[-1] > 100
    assert pops.mechanical[0] / pops.mechanical[20] > 100


def test_end_population_grows_toward_threshold():
    n_end = [populations(stationary(ChainParams(g_plus=g, n_cells=6))).mechanical[0] for g in (0.15, 0.2, 0.23, 0.24)]
    assert np.all(np.diff(n_end) > 0)


def test_unstable_end_mode_has_no_stationary_state():
    with pytest.raises(NoStationaryStateError):
        stationary(ChainParams(g_plus=0.26))
    with pytest.raises(NoStationaryStateError):
        tq_stationary(ChainParams(g_plus=0.26, n_cells=4))


def test_populations_reject_negative_occupation():
    L = 8
    v = np.zeros((2 * L, 2 * L), dtype=complex)
    v[:L, :L] = np.eye(L)
    v[L, L] = -0.5
    with pytest.raises(UnphysicalCovarianceError):
        populations(CovarianceState(v, Provenance.LYAPUNOV))


# --- third quantisation ---------------------------------------------------------


def test_tq_drift_reproduces_operator(working_point):
    p = working_point.replace(n_cells=2)
    data = build_third_quantization(p)
    np.testing.assert_allclose(data.nh_operator(), build_chain(p).matrix, atol=1e-14)
    np.testing.assert_allclose(data.a_matrix, -1j * build_chain(p).matrix, atol=1e-14)


def test_tq_rapidities_of_decoupled_site():
    op, d, (h, k) = single_site("red", 0.0)
    data = third_quantization_from_blocks(h, k, d.m_diag, d.n_diag, reference=op)
    assert sorted(np.round(data.rapidities.real, 12)) == [5e-5, 5e-5, 0.5, 0.5]


@pytest.mark.parametrize("g_plus, stable", [(0.2, True), (0.26, False)])
def test_rapidity_sign_tracks_stability(g_plus, stable):
    data = build_third_quantization(ChainParams(g_plus=g_plus, n_cells=4))
    assert bool(data.rapidities.real.min() > 0) is stable


def test_tq_rhs_zero_at_zero_temperature():
    data = build_third_quantization(ChainParams(n_cells=2))
    assert not data.n_diag.any()


def test_tq_construction_mismatch_detected():
    op, d, (h, k) = single_site("red", 0.3)
    with pytest.raises(ConstructionError):
        third_quantization_from_blocks(2 * h, k, d.m_diag, d.n_diag, reference=op)


def test_pairing_block_halves_the_drive():
    _, k = chain_blocks(ChainParams(g_plus=0.3, n_cells=1))
    assert k[0, 1] == pytest.approx(0.15)


@pytest.mark.parametrize("n_m", [0.0, 3.0])
def test_tq_matches_lyapunov_on_chain(n_m):
    p = ChainParams(n_cells=4, n_m=n_m, n_c=0.1)
    a, b = stationary(p).v_matrix, tq_stationary(p).v_matrix
    assert np.abs(a - b).max() < 1e-6 * max(1.0, np.abs(a).max())


def test_gamma_kernel_series_and_limit():
    s = np.array([1e-8, -1e-8j, 0.0, -2.0, 1.0 + 1.0j])
    out = gamma_kernel(s, 3.0)
    assert out[2] == 3.0
    assert out[3] == pytest.approx(-math.expm1(-6.0) / 2.0)
    assert out[4] == pytest.approx(np.expm1(3 * (1 + 1j)) / (1 + 1j))
    x = np.array([3e-7, -4e-7j])
    np.testing.assert_allclose(gamma_series(x, 1.0), np.expm1(x) / x, rtol=1e-13)


def test_evolve_at_zero_time_is_vacuum():
    ev = evolve_covariance(ChainParams(n_cells=2), 0.0)
    np.testing.assert_allclose(ev.state.v_matrix, vacuum_covariance(16), atol=1e-12)
    assert ev.means is None


def test_evolve_coherent_mean_decays_on_free_cavity():
    op, d, (h, k) = single_site("red", 0.0)
    data = third_quantization_from_blocks(h, k, d.m_diag, d.n_diag, reference=op)
    ev = evolve_covariance(data, 2.0, z0=np.array([1.0 + 0.5j, 0.0]))
    assert ev.displacement[0] == pytest.approx((1.0 + 0.5j) * math.exp(-1.0), rel=1e-12)
    # connected moments stay vacuum: a coherent state carries no excess noise
    np.testing.assert_allclose(ev.state.v_matrix, vacuum_covariance(2), atol=1e-12)


def test_evolve_matches_rk4_at_short_times():
    p = ChainParams(n_cells=2)
    op, d = build_chain(p), dissipation_data(p)
    for t in (1e-4, 0.05, 1.0):
        closed = evolve_covariance(p, t).state.v_matrix
        rk4 = integrate_covariance(op, d, t, method="rk4", step=1e-3).v_matrix
        assert np.abs(closed - rk4).max() < 1e-10


def test_long_time_evolution_reaches_stationary():
    p = ChainParams(n_cells=4)
    op, d = build_chain(p), dissipation_data(p)
    rate = np.abs(np.linalg.eigvals(-1j * op.matrix).real).min()
    stat = stationary(p).v_matrix
    assert np.abs(evolve_covariance(p, 40 / rate).state.v_matrix - stat).max() < 1e-6
    assert np.abs(integrate_covariance(op, d, 40 / rate).v_matrix - stat).max() < 1e-6


def test_evolve_unstable_growth_is_rejected():
    with pytest.raises(UnstableGrowthError):
        evolve_covariance(ChainParams(g_plus=0.26, n_cells=4), 1e6)


@pytest.mark.parametrize("t", [-1.0, float("inf")])
def test_evolve_rejects_bad_time(t):
    with pytest.raises(ValidationError):
        evolve_covariance(ChainParams(n_cells=1), t)


def test_integrate_rejects_unknown_method():
    op, d, _ = single_site("red", 0.1)
    with pytest.raises(ValidationError):
        integrate_covariance(op, d, 1.0, method="euler")


# --- entanglement ---------------------------------------------------------------


def test_vacuum_quadrature_block_is_identity():
    state = CovarianceState(vacuum_covariance(8), Provenance.LYAPUNOV)
    q = quadrature_block(state, 1, "a", 1, "b")
    np.testing.assert_allclose(q.matrix, np.eye(4), atol=1e-15)
    assert log_negativity(q) == pytest.approx(0.0, abs=1e-12)
    assert nu_minus(q) == pytest.approx(1.0)


def test_thermal_quadrature_block():
    op, d, _ = single_site("red", 0.0, n_c=0.5, n_m=5.0)
    q = quadrature_block(stationary_covariance(op, d), 1, "a", 1, "b")
    np.testing.assert_allclose(q.matrix, np.diag([2.0, 2.0, 11.0, 11.0]), rtol=1e-9, atol=1e-12)
    assert log_negativity(q) == 0.0


def test_blue_site_is_entangled():
    op, d, _ = single_site("blue", 0.004)
    q = quadrature_block(stationary_covariance(op, d), 1, "a", 1, "b")
    assert np.abs(q.gamma).max() > 0.01
    assert log_negativity(q) > 0
    assert nu_minus(q) == pytest.approx(symplectic_nu_minus(q), abs=1e-12)


def test_working_point_negativity_frozen(working_point):
    q = quadrature_block(stationary(working_point), 1, "a", 1, "b")
    assert nu_minus(q) == pytest.approx(NU_WP, rel=1e-9)
    assert log_negativity(q) == pytest.approx(-math.log2(NU_WP), rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(g_plus=st.floats(0.02, 0.24), n_m=st.sampled_from([0.0, 1.0, 10.0]), site=st.integers(1, 8))
def test_invariant_formula_matches_symplectic_oracle(g_plus, n_m, site):
    state = stationary(ChainParams(g_plus=g_plus, n_m=n_m, n_cells=2))
    q = quadrature_block(state, site, "a", site, "b")
    assert nu_minus(q) == pytest.approx(symplectic_nu_minus(q), rel=1e-9, abs=1e-12)


def test_quadrature_block_rejects_same_mode(working_point):
    with pytest.raises(ValidationError):
        quadrature_block(stationary(working_point.replace(n_cells=1)), 2, "a", 2, "a")


def test_corrupted_covariance_detected():
    v = np.array(vacuum_covariance(2))
    v[0, 1] = 0.7  # <a b^+> without the matching <b^+ a>
    with pytest.raises(UnphysicalCovarianceError):
        quadrature_block(CovarianceState(v, Provenance.LYAPUNOV), 1, "a", 1, "b")


def test_indefinite_block_detected():
    # correlations stronger than the variances allow: det < 0
    q = QuadratureBlock(np.diag([1.0, 1.0, 1.0, 1.0]) + np.diag([0.0, 3.0], 2) + np.diag([0.0, 3.0], -2), ())
    with pytest.raises(UnphysicalCovarianceError):
        nu_minus(q)


def test_saturation_in_unstable_end_region():
    res = saturation_negativity(ChainParams(g_plus=0.26))
    assert res.growth_rank == 2
    assert np.ptp(res.nu_iterates[-3:]) < 1e-4
    assert res.nu_limit == pytest.approx(0.6843855, abs=1e-6)
    assert res.e_n > 0
    assert np.all(np.diff(res.pair_populations[:, 1]) > 0)
    assert res.pair_populations[-1, 1] > 1e10


@pytest.mark.parametrize("g_plus", [0.2, 1.0])
def test_saturation_outside_region_c(g_plus):
    with pytest.raises(UnsupportedRegionError):
        saturation_negativity(ChainParams(g_plus=g_plus))


def test_saturation_rejects_same_mode():
    with pytest.raises(ValidationError):
        saturation_negativity(ChainParams(g_plus=0.26), pair=((1, "a"), (1, "a")))


def test_ill_conditioned_note_is_not_raised_at_working_point(working_point):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        stationary(working_point)
