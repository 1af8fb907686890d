import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optolattice.errors import ConvergenceError, DegeneratePointError, PhaseBoundaryError, SymmetryError
from optolattice.lattice import ChainParams, build_bloch
from optolattice.topology import (
    ChiralForm,
    berry_curvature,
    chern_by_quadrature,
    chern_number,
    chiral_operator,
    chiral_residual,
    compactified_hamiltonian,
    compactifier,
    effective_hamiltonian,
    plaquette_chern,
    sigma_pi_form,
    tensor_form,
)

WP = ChainParams()
ZERO = ChainParams(g_plus=0, g_minus=0, j_hop=0)


def test_tensor_form_diagonal():
    # per site (a, b): blue +,+ / red +,- / red -,+ / blue -,- ; repeated on the creation half
    expected = np.array([1, 1, 1, -1, -1, 1, -1, -1], dtype=float)
    np.testing.assert_array_equal(np.diag(tensor_form()), np.r_[expected, expected])


def test_candidate_forms_are_involutions():
    for s in (tensor_form(), sigma_pi_form()):
        np.testing.assert_array_equal(s @ s, np.eye(16))


def test_selected_chiral_operator():
    chi = chiral_operator()
    assert chi.provenance is ChiralForm.MAIN_TEXT
    assert chi.residuals["MainTextForm"] < 1e-12
    assert chi.residuals["SigmaPiForm"] > 1e-3


@pytest.mark.parametrize("k", np.linspace(0, 2 * np.pi, 8, endpoint=False))
def test_chiral_relation_at_working_point(k):
    s = chiral_operator().matrix
    assert chiral_residual(s, build_bloch(WP, k).matrix) < 1e-12


def test_both_forms_pass_without_couplings():
    chi = chiral_operator(lambda k: build_bloch(ZERO, k).matrix)
    assert chi.provenance is ChiralForm.MAIN_TEXT
    assert max(chi.residuals.values()) < 1e-12


def test_no_chiral_operator_for_generic_matrix():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    with pytest.raises(SymmetryError):
        chiral_operator(lambda k: m)


def test_effective_hamiltonian_without_couplings():
    h = effective_hamiltonian(ZERO, 0.7, 0.0)
    assert np.allclose(h, h.conj().T)
    assert sorted(set(np.round(np.abs(np.linalg.eigvalsh(h)), 12))) == [5e-5, 0.5]


def test_effective_hamiltonian_large_eta_splits_by_sign():
    e = np.linalg.eigvalsh(effective_hamiltonian(WP, 1.3, 200.0))
    assert np.all(np.abs(np.abs(e) - 200.0) < 5.0)
    assert (e < 0).sum() == 8


@settings(max_examples=20, deadline=None)
@given(k=st.floats(0, 2 * np.pi), eta=st.floats(-30, 30))
def test_compactified_spectrum_matches(k, eta):
    a = np.linalg.eigvalsh(effective_hamiltonian(WP, k, eta))
    b = np.linalg.eigvalsh(compactified_hamiltonian(WP, k, eta))
    assert np.abs(a - b).max() < 1e-10


def test_compactifier_unitary_and_limits():
    for eta in (-50.0, -1.0, 0.0, 2.0, 50.0):
        r = compactifier(eta)
        np.testing.assert_allclose(r @ r.conj().T, np.eye(16), atol=1e-14)
    np.testing.assert_allclose(compactifier(-50.0), np.eye(16), atol=1e-14)


def _lower_projector(params, k, eta):
    _, v = np.linalg.eigh(effective_hamiltonian(params, k, eta))
    return v[:, :8] @ v[:, :8].conj().T


def _curvature_fd(params, k, eta, d=1e-5):
    p = _lower_projector(params, k, eta)
    dk = (_lower_projector(params, k + d, eta) - _lower_projector(params, k - d, eta)) / (2 * d)
    de = (_lower_projector(params, k, eta + d) - _lower_projector(params, k, eta - d)) / (2 * d)
    # sign convention of the link-variable flux: Omega = -i Tr P [dP/dk, dP/deta]
    return float(np.real(-1j * np.trace(p @ (dk @ de - de @ dk))))


def test_curvature_matches_projector_finite_difference():
    rng = np.random.default_rng(20)
    for k, eta in zip(rng.uniform(0, 2 * np.pi, 20), rng.uniform(-2, 2, 20)):
        exact = berry_curvature(WP, k, eta)
        assert exact == pytest.approx(_curvature_fd(WP, k, eta), abs=1e-5 * max(1.0, abs(exact)))


def test_curvature_vanishes_without_hopping():
    p = WP.replace(j_hop=0.0)
    for k, eta in [(0.3, 0.1), (2.0, -0.4), (4.0, 1.5)]:
        assert abs(berry_curvature(p, k, eta)) < 1e-10


def test_curvature_degenerate_point():
    with pytest.raises(DegeneratePointError) as info:
        berry_curvature(ZERO, 1.0, 0.5)
    assert info.value.eta == 0.5


def test_chern_at_working_point_is_four():
    rep = chern_number(WP)
    assert rep.chern_integer == 4
    assert abs(rep.chern - 4) < 1e-2
    assert rep.boundary_flux < 1e-3
    assert len(rep.trace) >= 2
    assert rep.curvature.shape == (rep.grid_dims[0], rep.grid_dims[1] - 1)


def test_chern_trivial_without_hopping():
    rep = plaquette_chern(WP.replace(j_hop=0.0), 32, 32, 10.0)
    assert abs(rep.chern) < 1e-8


def test_chern_by_quadrature_agrees():
    assert chern_by_quadrature(WP, n_k=32, n_eta=120) == pytest.approx(4.0, abs=0.05)


def test_chern_without_refinement_budget_does_not_converge():
    with pytest.raises(ConvergenceError) as info:
        chern_number(WP, grid_k=16, grid_eta=16, max_refinements=0)
    assert len(info.value.trace) == 1


def test_chern_gap_closing_on_grid():
    # eta = kappa/2 is a grid point, where the uncoupled optical levels cross zero
    with pytest.raises(PhaseBoundaryError):
        plaquette_chern(ZERO, 8, 41, 10.0)
