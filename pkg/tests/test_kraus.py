import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eigenpurify.errors import InvalidSpec, NonHermitianInput, VanishingProbability
from eigenpurify.kraus import KrausPair, kraus_from_full_h, kraus_from_q, kraus_spectrum, povm_step
from eigenpurify.linalg import check_density, fidelity_with, maximally_mixed
from eigenpurify.models import bell_xx_model, ghz_ising_model, stirap_model
from eigenpurify.qops import AncillaSpec, PurificationSpec, assemble_h_p, q_transitions_to_target

import oracles

BELL = bell_xx_model(omega0=1.0, g_s=1.0, g_a=0.2, omega_a=-1.0)
GHZ = ghz_ising_model(j=1.0, g_a=0.2)
PRESETS = [BELL, GHZ, stirap_model(), bell_xx_model(target_label="phi-")]
IDS = ["bell", "ghz", "stirap", "bell-phi-"]

taus = st.floats(0.0, 30.0, allow_nan=False)


def test_zero_interval():
    pair = kraus_from_q(BELL.purification, 0.0)
    assert np.allclose(pair.c, np.eye(4))
    assert not np.any(pair.s)


def test_negative_interval_rejected():
    with pytest.raises(InvalidSpec):
        kraus_from_q(BELL.purification, -1.0)


def test_invalid_spec_rejected():
    spec = BELL.purification
    bad = PurificationSpec(np.eye(4), spec.target, spec.lam, spec.g_a, spec.ancilla)
    with pytest.raises(InvalidSpec):
        kraus_from_q(bad, 1.0)


def test_projector_quarter_period_is_target_projector():
    spec = GHZ.purification
    pair = kraus_from_q(spec, np.pi / (2 * spec.g_a))
    t = spec.target
    assert np.allclose(pair.c, np.outer(t, t.conj()), atol=1e-12)


@pytest.mark.parametrize("model", PRESETS, ids=IDS)
@pytest.mark.parametrize("tau", [0.3, 2.0, 7.7, 19.0])
def test_kraus_matches_taylor_blocks(model, tau):
    spec = model.purification
    d = model.dim
    u = oracles.taylor_expm(assemble_h_p(spec), tau)
    pair = kraus_from_q(spec, tau)
    assert np.max(np.abs(pair.c - u[:d, :d])) <= 1e-10
    assert np.max(np.abs(pair.s - u[:d, d:])) <= 1e-10
    assert np.max(np.abs(pair.failure - u[d:, :d])) <= 1e-10


def test_bell_success_probability_closed_form():
    # Q^dag Q for sigma_1^+ + sigma_2^+ has spectrum {0, 0, 2, 2}
    pair = kraus_from_q(BELL.purification, 2.0)
    p = povm_step(maximally_mixed(4), pair.c).p_phi
    assert np.isclose(p, (1 + np.cos(0.4 * np.sqrt(2)) ** 2) / 2, atol=1e-14)
    assert np.isclose(p, 0.8563548985161769, atol=1e-12)


@given(taus, st.integers(0, 2**31))
def test_pair_invariants_random_q(tau, seed):
    rng = np.random.default_rng(seed)
    u = oracles.random_unitary(rng, 4)
    q = q_transitions_to_target(u[:, 0], [u[:, k] for k in (1, 2, 3)],
                                rng.normal(size=3) + 1j * rng.normal(size=3))
    spec = PurificationSpec(q, u[:, 0], 0.0, 0.3)
    pair = kraus_from_q(spec, tau)
    assert pair.completeness_error() <= 1e-9
    assert np.linalg.norm(pair.c - pair.c.conj().T) <= 1e-10
    assert np.linalg.norm(pair.c @ u[:, 0] - u[:, 0]) <= 1e-10


def test_transposed_completeness_form_is_not_an_identity():
    # with a non-normal Q the blocks obey C^dag C + S S^dag = I, not C* C^T + S^dag S = I
    e = np.eye(3)
    q = q_transitions_to_target(e[:, 0], [e[:, 1], e[:, 2]], [1.0, 2.0])
    pair = kraus_from_q(PurificationSpec(q, e[:, 0], 0.0, 1.0), 0.9)
    assert pair.completeness_error() < 1e-12
    other = pair.c.conj() @ pair.c.T + pair.s.conj().T @ pair.s
    assert np.linalg.norm(other - np.eye(3)) > 1e-2


# conditioned operator of a general joint Hamiltonian

@pytest.mark.parametrize("model", PRESETS, ids=IDS)
def test_full_h_reduces_to_pair_in_interaction_picture(model):
    h_p = assemble_h_p(model.purification)
    for tau in (0.0, 1.3, 6.0):
        assert np.allclose(kraus_from_full_h(h_p, model.purification.ancilla, tau),
                           kraus_from_q(model.purification, tau).c, atol=1e-12)


def test_full_h_zero_interval():
    assert np.allclose(kraus_from_full_h(BELL.h_joint, None, 0.0), np.eye(4))


def test_full_h_bell_against_order_12_series():
    h = oracles.bell_full_h_manual(1.0, 1.0, 0.2, -1.0)
    # order-12 series applied on 2**s substeps, so the truncation error is ~1e-14 per step
    s = 4
    step = oracles.taylor_series(h, 2.0 / 2**s, 12)
    u = np.linalg.matrix_power(step, 2**s)
    assert np.max(np.abs(kraus_from_full_h(BELL.h_joint, None, 2.0) - u[:4, :4])) <= 1e-8
    short = oracles.taylor_series(h, 0.2, 12)
    assert np.max(np.abs(kraus_from_full_h(BELL.h_joint, None, 0.2) - short[:4, :4])) <= 1e-8


def test_full_h_odd_dimension_rejected():
    from eigenpurify.errors import DimensionMismatch
    with pytest.raises(DimensionMismatch):
        kraus_from_full_h(np.eye(3), None, 1.0)


# POVM update

@pytest.mark.parametrize("model", PRESETS, ids=IDS)
def test_target_is_a_fixed_point(model):
    t = model.target
    for tau in (0.7, 2.0, 11.0):
        out = povm_step(np.outer(t, t.conj()), model.conditioned(tau))
        assert np.isclose(out.p_phi, 1.0, atol=1e-12)
        assert np.allclose(out.rho_after, np.outer(t, t.conj()), atol=1e-12)


def test_ghz_quarter_period_projects():
    c = GHZ.conditioned(np.pi / (2 * GHZ.purification.g_a))
    out = povm_step(maximally_mixed(8), c)
    t = GHZ.target
    assert np.isclose(out.p_phi, 1 / 8, atol=1e-14)
    assert np.allclose(out.rho_after, np.outer(t, t.conj()), atol=1e-12)


def test_vanishing_probability():
    c = GHZ.conditioned(np.pi / (2 * GHZ.purification.g_a))
    rho = np.zeros((8, 8), dtype=complex)
    rho[1, 1] = 1.0  # |001>, orthogonal to the GHZ target
    with pytest.raises(VanishingProbability) as info:
        povm_step(rho, c)
    assert info.value.p_phi < 1e-12


@pytest.mark.parametrize("model", PRESETS, ids=IDS)
@given(tau=st.floats(0.05, 25.0), seed=st.integers(0, 2**31))
def test_step_recursion_and_monotonicity(model, tau, seed):
    rho = oracles.random_density(np.random.default_rng(seed), model.dim)
    c = model.conditioned(tau)
    unnorm = c @ rho @ c.conj().T
    out = povm_step(rho, c)
    check_density(out.rho_after, 1e-9)
    assert abs(out.p_phi - np.trace(unnorm).real) <= 1e-12
    f0 = fidelity_with(rho, model.target)
    f1 = fidelity_with(out.rho_after, model.target)
    assert abs(f1 * out.p_phi - f0) <= 1e-10
    assert f1 >= f0 - 1e-12


# Kraus spectrum

def test_spectrum_identity(rng):
    rho = oracles.random_density(rng, 4)
    t = BELL.target
    ks = kraus_spectrum(np.eye(4), rho, t)
    assert np.allclose(ks.eigvals, 1.0)
    assert np.isclose(ks.residual, 1 - fidelity_with(rho, t))
    assert np.allclose(ks.eigvecs[:, 0], t)
    assert len(ks.protected()) == 3


def test_spectrum_ghz_projector(rng):
    tau = 3.0
    c = kraus_from_q(GHZ.purification, tau).c
    ks = kraus_spectrum(c, oracles.random_density(rng, 8), GHZ.target)
    assert ks.eigvals[0] == 1.0
    assert np.allclose(ks.eigvals[1:], np.cos(GHZ.purification.g_a * tau), atol=1e-12)


@given(tau=st.floats(0.05, 40.0), seed=st.integers(0, 2**31))
def test_spectrum_decomposition_bell(tau, seed):
    rho = oracles.random_density(np.random.default_rng(seed), 4)
    c = kraus_from_q(BELL.purification, tau).c
    ks = kraus_spectrum(c, rho, BELL.target)
    direct = np.trace(c @ rho @ c.conj().T).real
    assert abs(ks.fidelity + ks.weighted_residual - direct) <= 1e-10
    assert ks.decomposition_error <= 1e-10
    assert ks.max_eig_sq <= 1 + 1e-10
    assert np.isclose(ks.fidelity + ks.residual, 1.0)


def test_spectrum_requires_hermitian():
    with pytest.raises(NonHermitianInput):
        kraus_spectrum(BELL.conditioned(2.0) * 1j + np.diag([0, 0, 0, 1.0]), maximally_mixed(4),
                       BELL.target)


def test_spectrum_protected_states_at_special_interval():
    # Bell Q^dag Q has eigenvalue 2 on two states: cos(g tau sqrt 2) = -1 leaves them unfiltered
    tau = np.pi / (0.2 * np.sqrt(2))
    c = kraus_from_q(BELL.purification, tau).c
    ks = kraus_spectrum(c, maximally_mixed(4), BELL.target)
    assert len(ks.protected()) == 3
    assert np.isclose(ks.p_phi, 1.0)


def test_pair_dataclass_failure_operator():
    pair = KrausPair(np.eye(2), np.array([[0, 1j], [0, 0]]), 1.0, 1.0)
    assert np.array_equal(pair.failure, np.array([[0, 0], [1j, 0]]))


def test_ancilla_spec_ignored_by_block_extraction():
    spec = BELL.purification
    h = BELL.h_joint
    a = kraus_from_full_h(h, spec.ancilla, 1.5)
    b = kraus_from_full_h(h, AncillaSpec(), 1.5)
    assert np.array_equal(a, b)
    assert np.allclose(a, oracles.taylor_expm(h, 1.5)[:4, :4], atol=1e-10)
