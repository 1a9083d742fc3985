"""Tests for the Toda chain: dynamics, generator, integrals and the non-Noether checks"""

import numpy as np
import pytest

from binoether.core.exterior import (
    FiniteDifference,
    canonical_bivector,
    canonical_two_form,
    exterior_derivative_two_form,
    invariant_ladder,
    lie_derivative_two_form,
    polynomial_vector_field,
    pullback_difference,
)
from binoether.core.toda import (
    TodaState,
    bonds,
    integrate_toda,
    lax_spectrum,
    lax_trace_oracle,
    toda_generator,
    toda_generator_field,
    toda_hamiltonian,
    toda_independence,
    toda_integrals_closed,
    toda_involutivity,
    toda_LEomega,
    toda_LEomega_field,
    toda_rhs,
    toda_rhs_field,
    toda_symmetry_residual,
    toda_verify_nonnoether,
)
from binoether.errors import PreconditionError, TodaOverflowError


# ========== Dynamics ==========

def test_rhs_at_rest_pushes_particles_apart():
    s = TodaState(q=np.zeros(2), p=np.zeros(2))
    np.testing.assert_allclose(toda_rhs(s), [0.0, 0.0, -1.0, 1.0])


def test_single_particle_energy():
    assert toda_hamiltonian(TodaState(q=[0.0], p=[3.0])) == pytest.approx(4.5)


def test_state_rejects_mismatched_lengths():
    with pytest.raises(PreconditionError):
        TodaState(q=[0.0, 1.0], p=[0.0])


def test_bond_overflow_raises():
    with pytest.raises(TodaOverflowError):
        bonds(np.array([0.0, -800.0]))


def test_rhs_jacobian_matches_finite_differences(rng):
    s = TodaState.random(rng, 4)
    field = toda_rhs_field(4)
    numeric = FiniteDifference(order=4).derivative(lambda z: field(0.0, z), s.z).T
    np.testing.assert_allclose(field.jacobian(0.0, s.z), numeric, atol=1e-8)


@pytest.mark.parametrize("method", ["leapfrog", "rk4", "yoshida4"])
def test_integrators_conserve_energy(rng, method):
    s0 = TodaState.random(rng, 3)
    traj = integrate_toda(s0, 1e-3, 2.0, method, record_every=500)
    energies = [toda_hamiltonian(s) for s in traj.states]
    assert len(traj) == 5
    assert max(abs(h - energies[0]) for h in energies) < 1e-5 * abs(energies[0])


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_leapfrog_keeps_closed_integrals_within_tolerance(rng, n):
    traj = integrate_toda(TodaState.random(rng, n), 1e-3, 10.0, "leapfrog", record_every=100)
    M = min(n, 4)
    values = np.array([toda_integrals_closed(s, M) for s in traj.states])
    drift = np.max(np.abs(values - values[0]) / (1.0 + np.abs(values[0])))
    assert drift < 1e-6


def test_two_particle_scattering_exchanges_momenta():
    s0 = TodaState(q=[-10.0, 10.0], p=[1.0, -1.0])
    end = integrate_toda(s0, 1e-3, 20.0, "yoshida4", record_every=20000).state(-1)
    np.testing.assert_allclose(end.p, [-1.0, 1.0], atol=1e-6)
    np.testing.assert_allclose(lax_spectrum(end), lax_spectrum(s0), atol=1e-9)


def test_yoshida_beats_leapfrog(rng):
    s0 = TodaState.random(rng, 3)
    h0 = toda_hamiltonian(s0)
    drift = {
        m: abs(toda_hamiltonian(integrate_toda(s0, 1e-2, 5.0, m, record_every=500).state(-1)) - h0)
        for m in ("leapfrog", "yoshida4")
    }
    assert drift["yoshida4"] < drift["leapfrog"]


def test_integrate_rejects_bad_step_and_method(rng):
    s0 = TodaState.random(rng, 2)
    with pytest.raises(PreconditionError):
        integrate_toda(s0, -1e-3, 1.0)
    with pytest.raises(PreconditionError):
        integrate_toda(s0, 1e-3, 1.0, method="euler")


# ========== Generator and symmetry residual ==========

def test_generator_at_rest():
    E = toda_generator(TodaState(q=np.zeros(2), p=np.zeros(2)))
    np.testing.assert_allclose(E[2:], [-1.0, 2.0])
    np.testing.assert_allclose(E[:2], [0.0, 0.0])


def test_generator_for_free_particle():
    E = toda_generator(TodaState(q=[0.3], p=[1.5]))
    np.testing.assert_allclose(E, [1.5, 0.5 * 1.5 ** 2])


def test_generator_jacobian_matches_finite_differences(rng):
    s = TodaState.random(rng, 3)
    field = toda_generator_field(3)
    for t in (0.0, 2.0):
        numeric = FiniteDifference(order=4).derivative(lambda z: field(t, z), s.z).T
        np.testing.assert_allclose(field.jacobian(t, s.z), numeric, atol=1e-8)


def test_generator_solves_linearized_equations(rng):
    traj = integrate_toda(TodaState.random(rng, 3), 1e-3, 1.0, "rk4")
    res = toda_symmetry_residual(traj, order=4)
    assert res.max_residual < 1e-5
    assert res.warning is None


def test_perturbed_generator_fails_linearized_equations(rng):
    traj = integrate_toda(TodaState.random(rng, 3), 1e-3, 1.0, "rk4")
    field = toda_generator_field(3)

    def perturbed(t, z):
        E = field(t, z)
        E[0] += 0.1
        return E

    assert toda_symmetry_residual(traj, perturbed, order=4).max_residual > 1e-3


def test_symmetry_residual_shrinks_with_step(rng):
    s0 = TodaState.random(rng, 3)
    coarse = toda_symmetry_residual(integrate_toda(s0, 2e-3, 1.0, "rk4")).max_residual
    fine = toda_symmetry_residual(integrate_toda(s0, 1e-3, 1.0, "rk4")).max_residual
    assert coarse / fine > 3.0


def test_coarse_step_warns(rng):
    traj = integrate_toda(TodaState.random(rng, 2), 5e-2, 1.0, "rk4")
    assert toda_symmetry_residual(traj).warning is not None


# ========== Integrals ==========

def test_closed_integrals_match_lax_traces(rng):
    for _ in range(10):
        s = TodaState.random(rng, 4)
        np.testing.assert_allclose(toda_integrals_closed(s, 4), lax_trace_oracle(s, 4), rtol=1e-12, atol=1e-12)


def test_closed_integrals_order_bounds(rng):
    with pytest.raises(PreconditionError):
        toda_integrals_closed(TodaState.random(rng, 3), 5)


def test_lax_spectrum_is_conserved(rng):
    traj = integrate_toda(TodaState.random(rng, 3), 1e-3, 3.0, "yoshida4", record_every=1000)
    spectra = np.array([lax_spectrum(s) for s in traj.states])
    np.testing.assert_allclose(spectra, spectra[0], atol=1e-9)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_ladder_reproduces_lax_traces(rng, toda_calibration, n):
    s = TodaState.random(rng, n)
    ladder = invariant_ladder(canonical_bivector(n), toda_LEomega_field(n), s.z, n, toda_calibration)
    np.testing.assert_allclose(ladder.I, lax_trace_oracle(s, n), rtol=1e-9, atol=1e-9)


def test_integrals_are_in_involution_and_independent(rng):
    states = [TodaState.random(rng, 3) for _ in range(3)]
    assert np.max(toda_involutivity(states)) < 1e-6
    assert toda_independence(states[0]) > 1e-8


def test_integrals_are_independent_at_twenty_states(rng):
    assert min(toda_independence(TodaState.random(rng, 3)) for _ in range(20)) > 1e-8


# ========== L_E omega ==========

def test_displayed_lie_derivative_matches_coordinates(rng):
    E = toda_generator_field(3)
    omega = canonical_two_form(3)
    for _ in range(5):
        s = TodaState.random(rng, 3)
        np.testing.assert_allclose(lie_derivative_two_form(E, omega, 0.0, s.z), toda_LEomega(s), atol=1e-6)


def test_displayed_lie_derivative_is_closed(rng):
    sigma = toda_LEomega_field(3)
    for _ in range(5):
        z = TodaState.random(rng, 3).z
        assert np.max(np.abs(exterior_derivative_two_form(sigma, z))) < 1e-8


def test_lie_derivative_has_no_explicit_time(rng):
    E = toda_generator_field(3)
    omega = canonical_two_form(3)
    z = TodaState.random(rng, 3).z
    base = lie_derivative_two_form(E, omega, 0.0, z)
    for t in (1.0, 10.0):
        np.testing.assert_allclose(lie_derivative_two_form(E, omega, t, z), base, atol=1e-9)


def test_pullback_agrees_with_lie_derivative(rng):
    E = toda_generator_field(2)
    omega = canonical_two_form(2)
    z = TodaState.random(rng, 2).z
    a = 1e-4
    richardson = 2.0 * pullback_difference(E, omega, 0.0, z, a / 2) - pullback_difference(E, omega, 0.0, z, a)
    np.testing.assert_allclose(richardson, lie_derivative_two_form(E, omega, 0.0, z), atol=1e-4)


# ========== Non-Noether verification ==========

def test_toda_generator_is_non_noether_and_yang_baxter(rng):
    report = toda_verify_nonnoether(TodaState.random(rng, 3), t=0.5)
    assert report.non_noether
    assert report.yang_baxter
    assert report.label == "non-Noether"


def test_hamiltonian_field_is_noether(rng):
    report = toda_verify_nonnoether(TodaState.random(rng, 3), generator=toda_rhs_field(3))
    assert report.ew_norm < 1e-10
    assert report.label == "Noether"


def test_random_cubic_field_violates_yang_baxter(rng):
    dim = 4
    cubic = polynomial_vector_field(
        0.3 * rng.normal(size=(dim, dim)),
        0.3 * rng.normal(size=(dim,) * 3),
        0.3 * rng.normal(size=(dim,) * 4),
    )
    report = toda_verify_nonnoether(TodaState.random(rng, 2), generator=cubic)
    assert not report.yang_baxter


def test_report_serializes(rng):
    data = toda_verify_nonnoether(TodaState.random(rng, 2)).to_dict()
    assert set(data) >= {"ew_norm", "yb_norm", "yb_scaled", "non_noether", "yang_baxter", "label"}
