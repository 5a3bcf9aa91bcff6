import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eigenpurify.errors import DimensionMismatch, InvalidSpec, NonOrthonormalBasis, ZeroCoefficient
from eigenpurify.linalg import kron
from eigenpurify.models import (
    SIGMA_PLUS,
    bell_eigenbasis,
    bell_h_s,
    bell_xx_model,
    ghz_eigenbasis,
    ghz_ising_model,
    on_site,
    stirap_model,
)
from eigenpurify.qops import (
    EXCITED,
    GROUND,
    AncillaSpec,
    PurificationSpec,
    ancilla_parity,
    assemble_full_h,
    assemble_h_p,
    q_ladder,
    q_self_projectors,
    q_transitions_to_target,
    validate_purification,
)

import oracles

nonzero = st.complex_numbers(min_magnitude=0.1, max_magnitude=5, allow_nan=False, allow_infinity=False)


def random_basis(rng, d):
    u = oracles.random_unitary(rng, d)
    return [u[:, k] for k in range(d)]


# ancilla

def test_ancilla_perp_rule():
    a = AncillaSpec(np.array([0.6, 0.8j]))
    assert abs(np.vdot(a.phi, a.phi_perp)) < 1e-12
    assert np.allclose(a.phi_perp, [0.8j, 0.6])
    assert np.allclose(AncillaSpec(EXCITED).phi_perp, GROUND)


def test_ancilla_normalization_enforced():
    with pytest.raises(InvalidSpec):
        AncillaSpec(np.array([1.0, 1.0]))


# builders

def test_transition_two_level():
    q = q_transitions_to_target(np.array([1, 0]), [np.array([0, 1])], [1.0])
    assert np.array_equal(q, np.array([[0, 1], [0, 0]]))


@given(st.lists(nonzero, min_size=3, max_size=3), st.integers(0, 2**31))
def test_transition_annihilates_and_rank_one(coeffs, seed):
    basis = random_basis(np.random.default_rng(seed), 4)
    q = q_transitions_to_target(basis[0], basis[1:], coeffs)
    assert np.linalg.norm(q @ basis[0]) <= 1e-10 * max(1.0, np.linalg.norm(q))
    assert oracles.singular_rank(q) == 1


def test_transition_adjoint_need_not_annihilate(rng):
    basis = random_basis(rng, 3)
    q = q_transitions_to_target(basis[0], basis[1:], [1.0, 2.0])
    assert np.linalg.norm(q.conj().T @ basis[0]) > 0.1


def test_builder_errors(rng):
    basis = random_basis(rng, 3)
    with pytest.raises(ZeroCoefficient):
        q_transitions_to_target(basis[0], basis[1:], [1.0, 0.0])
    with pytest.raises(NonOrthonormalBasis):
        q_transitions_to_target(basis[0], [basis[1], basis[1]], [1.0, 1.0])
    with pytest.raises(NonOrthonormalBasis):
        q_self_projectors([2 * basis[1]])
    with pytest.raises(DimensionMismatch):
        q_transitions_to_target(basis[0], basis[1:], [1.0])


def test_ladder_structure():
    e = np.eye(4)
    q = q_ladder([e[:, 1], e[:, 2], e[:, 3]], [1.0, 1.0])
    assert np.count_nonzero(q) == 2
    assert q[1, 2] == 1 and q[2, 3] == 1


def test_ladder_annihilates_singlet():
    basis, _, _ = bell_eigenbasis(1.0, 1.0)
    others = [basis[:, k] for k in (1, 2, 3)]
    q = q_ladder(others, [0.7, -1.3j])
    assert np.linalg.norm(q @ basis[:, 0]) < 1e-12


@given(st.integers(2, 5), st.integers(0, 2**31))
def test_ladder_nilpotent(n_others, seed):
    rng = np.random.default_rng(seed)
    basis = random_basis(rng, n_others + 1)
    coeffs = rng.uniform(0.5, 2, n_others - 1) * np.exp(1j * rng.uniform(0, 6, n_others - 1))
    q = q_ladder(basis[1:], coeffs)
    assert np.max(np.abs(oracles.mat_power(q, n_others))) < 1e-10
    assert np.max(np.abs(oracles.mat_power(q, n_others - 1))) > 1e-3


def test_self_projectors_ghz():
    basis = ghz_eigenbasis()
    q = q_self_projectors([basis[:, k] for k in range(1, 8)])
    ghz = basis[:, 0]
    assert np.allclose(q, np.eye(8) - np.outer(ghz, ghz.conj()), atol=1e-12)
    assert np.allclose(q @ q, q, atol=1e-12)


real_or_complex = st.tuples(st.floats(0.1, 5) | st.floats(-5, -0.1),
                            st.just(0.0) | st.floats(0.1, 5) | st.floats(-5, -0.1)).map(
    lambda p: complex(p[0], p[1]))


@given(st.lists(real_or_complex, min_size=3, max_size=3), st.integers(0, 2**31))
def test_self_projectors_hermitian_iff_real(coeffs, seed):
    basis = random_basis(np.random.default_rng(seed), 4)
    q = q_self_projectors(basis[1:], coeffs)
    herm = np.allclose(q, q.conj().T, atol=1e-12)
    assert herm == all(c.imag == 0 for c in coeffs)


# validation

def bell_spec(q=None, g_a=0.2):
    basis, vals, _ = bell_eigenbasis(1.0, 1.0)
    if q is None:
        q = on_site(SIGMA_PLUS, 0, 2) + on_site(SIGMA_PLUS, 1, 2)
    return PurificationSpec(q, basis[:, 0], vals[0], g_a, AncillaSpec(EXCITED, -1.0))


def test_validate_bell_passes():
    rep = validate_purification(bell_spec(), bell_h_s(1.0, 1.0))
    assert rep.passed
    assert rep.annihilation < 1e-15 and rep.eigen_residual < 1e-12


def test_validate_single_raiser_fails():
    rep = validate_purification(bell_spec(on_site(SIGMA_PLUS, 0, 2)))
    assert not rep.passed
    # sigma_1^+ |psi-> = -|00>/sqrt(2)
    assert np.isclose(rep.annihilation, 1 / np.sqrt(2))


def test_validate_zero_operator_flagged():
    rep = validate_purification(bell_spec(np.zeros((4, 4))))
    assert rep.passed and rep.degenerate


def test_validate_wrong_eigenvalue():
    spec = bell_spec()
    spec = PurificationSpec(spec.q, spec.target, 5.0, spec.g_a, spec.ancilla)
    assert not validate_purification(spec, bell_h_s(1.0, 1.0)).passed


@pytest.mark.parametrize("model", [bell_xx_model(), ghz_ising_model(), stirap_model(),
                                   bell_xx_model(target_label="phi+")],
                         ids=["bell", "ghz", "stirap", "bell-phi+"])
def test_every_preset_validates(model):
    rep = validate_purification(model.purification, model.h_s)
    assert rep.passed and not rep.degenerate
    assert rep.annihilation <= 1e-10 * max(1.0, rep.q_norm)


# Hamiltonian assembly

def test_h_p_zero_coupling():
    assert not np.any(assemble_h_p(bell_spec(g_a=0.0)))


def test_h_p_rejects_invalid_spec():
    with pytest.raises(InvalidSpec):
        assemble_h_p(bell_spec(on_site(SIGMA_PLUS, 0, 2)))


def test_h_p_blocks():
    spec = bell_spec()
    h_p = assemble_h_p(spec)
    q = spec.q
    assert np.allclose(h_p, h_p.conj().T)
    assert np.allclose(h_p[4:, :4], 0.2 * q)
    assert np.allclose(h_p[:4, 4:], 0.2 * q.conj().T)
    assert not np.any(h_p[:4, :4]) and not np.any(h_p[4:, 4:])


@pytest.mark.parametrize("model", [bell_xx_model(), ghz_ising_model(), stirap_model()],
                         ids=["bell", "ghz", "stirap"])
def test_h_p_parity_structure(model):
    d = model.dim
    h_p = assemble_h_p(model.purification)
    p = ancilla_parity(d)
    assert np.linalg.norm(h_p @ p + p @ h_p) <= 1e-12
    assert not np.any(h_p[:d, :d])


def test_full_h_bare_energies():
    h_s = np.diag([0.0, 1.0, 1.0, 2.0])
    spec = bell_spec(g_a=0.0)
    spec = PurificationSpec(spec.q, np.array([1, 0, 0, 0], dtype=complex), 0.0, 0.0,
                            AncillaSpec(EXCITED, 3.0))
    spec = PurificationSpec(np.zeros((4, 4)), spec.target, 0.0, 0.0, spec.ancilla)
    h = assemble_full_h(h_s, spec)
    assert np.allclose(h, np.diag([0, 1, 1, 2, 3, 4, 4, 5]))


def test_full_h_bell_manual_expansion():
    omega0, g_a = 1.0, 0.2
    g_s = 5 * g_a
    h = assemble_full_h(bell_h_s(omega0, g_s), bell_spec(g_a=g_a))
    assert np.array_equal(h, oracles.bell_full_h_manual(omega0, g_s, g_a, -1.0))


def test_full_h_target_sector_eigenvector():
    spec = bell_spec()
    h_s = bell_h_s(1.0, 1.0)
    h0 = kron(np.eye(2), h_s) + kron(spec.ancilla.h_a(), np.eye(4))
    v = np.kron([1.0, 0.0], spec.target)
    assert np.allclose(h0 @ v, spec.lam * v)


def test_full_h_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        assemble_full_h(np.eye(3), bell_spec())


def test_rwa_excitation_structure():
    h = bell_xx_model().h_joint
    d = 4
    n_sys = sum(on_site(SIGMA_PLUS, k, 2) @ on_site(SIGMA_PLUS, k, 2).conj().T for k in range(2))
    n_tot = kron(np.diag([1.0, 0.0]), np.eye(d)) + kron(np.eye(2), n_sys)
    spec = bell_xx_model().purification
    coupling = assemble_h_p(spec) + kron(spec.ancilla.h_a(), np.eye(d))
    assert np.linalg.norm(coupling @ n_tot - n_tot @ coupling) <= 1e-12
    parity = np.diag(np.exp(1j * np.pi * np.diag(n_tot)).real)
    assert np.linalg.norm(h @ parity - parity @ h) <= 1e-12
    # the XX term changes the excitation number by two, so N itself is not conserved
    assert np.linalg.norm(h @ n_tot - n_tot @ h) > 0.1
