"""Tests for phase-space exterior calculus and the invariant ladder"""

import numpy as np
import pytest

from binoether.core.exterior import (
    BivectorField,
    Calibration,
    FiniteDifference,
    PhasePoint,
    RecurrenceVariant,
    TwoFormField,
    calibrate_conventions,
    canonical_bivector,
    canonical_two_form,
    constant_vector_field,
    contraction_invariants,
    elementary_symmetric,
    exterior_derivative_two_form,
    flow,
    invert_bivector,
    invariant_ladder,
    lie_derivative_two_form,
    newton_recurrence,
    paired_spectrum,
    poisson_bracket,
    polynomial_vector_field,
    pullback_difference,
    schouten_bb,
    schouten_vb,
    spectral_invariants,
)
from binoether.core.toda import (
    TodaState,
    lax_trace_oracle,
    toda_calibration_hooks,
    toda_integrals_closed,
    toda_LEomega_field,
)
from binoether.errors import CalibrationError, DegeneracyError, PreconditionError


def _levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[a, b, c] = 1.0
        eps[a, c, b] = -1.0
    return eps


# ========== Types ==========

def test_phase_point_splits_q_and_p():
    z = PhasePoint.from_qp([1.0, 2.0], [3.0, 4.0])
    assert z.n == 2
    np.testing.assert_array_equal(z.q, [1.0, 2.0])
    np.testing.assert_array_equal(z.p, [3.0, 4.0])


@pytest.mark.parametrize("bad", [[1.0, 2.0, 3.0], [], [np.nan, 0.0]])
def test_phase_point_rejects_bad_coordinates(bad):
    with pytest.raises(PreconditionError):
        PhasePoint(np.array(bad))


def test_bivector_field_is_antisymmetrized():
    W = BivectorField(lambda z: np.array([[0.0, 2.0], [0.0, 0.0]]))
    np.testing.assert_allclose(W(np.zeros(2)), [[0.0, 1.0], [-1.0, 0.0]])


def test_unsupported_stencil_order():
    with pytest.raises(PreconditionError):
        FiniteDifference(order=3)


# ========== Fields and flows ==========

def test_polynomial_jacobian_matches_finite_differences(rng):
    dim = 4
    E = polynomial_vector_field(
        rng.normal(size=(dim, dim)), rng.normal(size=(dim, dim, dim)), rng.normal(size=(dim,) * 4)
    )
    z = rng.uniform(-1, 1, dim)
    numeric = FiniteDifference(order=4).derivative(lambda x: E(0.0, x), z).T
    np.testing.assert_allclose(E.jacobian(0.0, z), numeric, atol=1e-7)


def test_flow_of_constant_field_is_translation():
    E = constant_vector_field([1.0, -2.0])
    end = flow(E, [0.5, 0.5], 0.0, 0.25, steps=4)
    np.testing.assert_allclose(end.z, [0.75, 0.0])


def test_flow_rejects_zero_steps():
    with pytest.raises(PreconditionError):
        flow(constant_vector_field([1.0, 0.0]), [0.0, 0.0], 0.0, 1.0, steps=0)


def test_dilation_flow_pullback_converges_at_second_order():
    E = polynomial_vector_field(np.eye(4))
    omega = canonical_two_form(2)
    z = np.array([0.3, -0.1, 0.5, 0.2])
    errors = []
    for a in (0.04, 0.02):
        richardson = 2.0 * pullback_difference(E, omega, 0.0, z, a / 2) - pullback_difference(E, omega, 0.0, z, a)
        # g_a* omega = exp(2a) omega
        exact = (4.0 * np.expm1(a) - np.expm1(2.0 * a)) / a
        np.testing.assert_allclose(richardson, exact * omega(z), atol=2e-7)
        errors.append(np.max(np.abs(richardson - 2.0 * omega(z))))
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.05)


# ========== Brackets ==========

def test_hamiltonian_linear_field_preserves_canonical_bivector(rng):
    W = canonical_bivector(2)
    m = W(np.zeros(4))
    # X_h for h = |z|^2 / 2
    E = polynomial_vector_field(m.T)
    np.testing.assert_allclose(schouten_vb(E, W, 0.0, rng.normal(size=4)), 0.0, atol=1e-12)


def test_dilation_scales_bivector_and_form(rng):
    W = canonical_bivector(2)
    omega = canonical_two_form(2)
    E = polynomial_vector_field(np.eye(4))
    z = rng.normal(size=4)
    np.testing.assert_allclose(schouten_vb(E, W, 0.0, z), -2.0 * W(z), atol=1e-12)
    np.testing.assert_allclose(lie_derivative_two_form(E, omega, 0.0, z), 2.0 * omega(z), atol=1e-12)


def test_lie_poisson_bivector_satisfies_jacobi(rng):
    eps = _levi_civita()
    W = BivectorField(lambda z: np.einsum("abc,c->ab", eps, z), name="so3")
    assert np.max(np.abs(schouten_bb(W, W, rng.normal(size=3)))) < 1e-8


def test_non_poisson_bivector_violates_jacobi():
    def _eval(z):
        m = np.zeros((4, 4))
        m[0, 1] = 1.0
        m[2, 3] = z[0]
        return m - m.T

    W = BivectorField(_eval)
    assert np.max(np.abs(schouten_bb(W, W, np.array([0.3, -0.2, 0.1, 0.4])))) > 1e-2


def test_canonical_form_is_closed(rng):
    assert np.max(np.abs(exterior_derivative_two_form(canonical_two_form(3), rng.normal(size=6)))) < 1e-12


def test_canonical_poisson_bracket():
    W = canonical_bivector(1)
    z = np.array([0.4, -0.7])
    assert poisson_bracket(lambda x: x[1], lambda x: x[0], W, z) == pytest.approx(1.0)
    assert poisson_bracket(lambda x: x[0], lambda x: x[1], W, z) == pytest.approx(-1.0)


def test_poisson_bracket_is_bilinear_antisymmetric_and_leibniz(rng):
    W = canonical_bivector(2)
    z = rng.uniform(-1, 1, 4)
    f = lambda x: x[0] * x[2] ** 2
    g = lambda x: np.sin(x[1]) + x[3]
    h = lambda x: x[0] * x[1] * x[3]
    bracket = lambda u, v: poisson_bracket(u, v, W, z)
    assert bracket(f, f) == pytest.approx(0.0, abs=1e-10)
    assert bracket(f, g) == pytest.approx(-bracket(g, f), abs=1e-10)
    combined = lambda x: 2.0 * g(x) - 3.0 * h(x)
    assert bracket(f, combined) == pytest.approx(2.0 * bracket(f, g) - 3.0 * bracket(f, h), abs=1e-8)
    product = lambda x: g(x) * h(x)
    leibniz = bracket(f, g) * h(z) + g(z) * bracket(f, h)
    assert bracket(f, product) == pytest.approx(leibniz, abs=1e-8)


# ========== Inversion and spectra ==========

def test_inverse_of_canonical_bivector_is_canonical_form():
    z = np.zeros(6)
    np.testing.assert_allclose(invert_bivector(canonical_bivector(3), z), canonical_two_form(3)(z))


def test_inverse_scales_reciprocally_and_satisfies_the_identity(rng):
    m = rng.normal(size=(4, 4))
    W = BivectorField(lambda z: m)
    z = np.zeros(4)
    sigma = invert_bivector(W, z)
    np.testing.assert_allclose(W(z) @ sigma, -np.eye(4), atol=1e-10)
    scaled = invert_bivector(BivectorField(lambda z: 5.0 * m), z)
    np.testing.assert_allclose(scaled, sigma / 5.0, rtol=1e-10, atol=1e-12)


def test_singular_bivector_raises_degeneracy():
    with pytest.raises(DegeneracyError) as exc:
        invert_bivector(BivectorField(lambda z: np.zeros((2, 2))), np.zeros(2))
    assert exc.value.condition_number is not None


def test_elementary_symmetric_of_roots():
    np.testing.assert_allclose(elementary_symmetric([1.0, 2.0, 3.0], 3), [6.0, 11.0, 6.0])
    np.testing.assert_allclose(elementary_symmetric([1.0, 2.0], 3), [3.0, 2.0, 0.0])


def test_newton_recurrence_recovers_scaled_power_sums():
    Y = [6.0, 11.0, 6.0]
    np.testing.assert_allclose(newton_recurrence(Y, RecurrenceVariant.TODA), [6.0, 7.0, 12.0])
    field = Calibration(global_sign=-1, variant=RecurrenceVariant.FIELD)
    np.testing.assert_allclose(newton_recurrence(Y, RecurrenceVariant.FIELD, field), [6.0, 14.0, 36.0])


def test_toda_spectrum_pairs_and_contraction_agrees(rng, toda_calibration):
    s = TodaState.random(rng, 3)
    W, sigma = canonical_bivector(3), toda_LEomega_field(3)
    lam, gap = paired_spectrum(W, sigma, s.z, toda_calibration)
    assert lam.shape == (3,)
    assert gap < 1e-8
    e = elementary_symmetric(lam, 2)
    np.testing.assert_allclose(contraction_invariants(W, sigma, s.z, toda_calibration), e, atol=1e-9)


def test_spectral_invariants_order_bounds(rng):
    s = TodaState.random(rng, 2)
    with pytest.raises(PreconditionError):
        spectral_invariants(canonical_bivector(2), toda_LEomega_field(2), s.z, 3)


def test_zero_form_gives_a_zero_ladder(rng, toda_calibration):
    z = TodaState.random(rng, 3).z
    zero = TwoFormField(lambda x: np.zeros((6, 6)))
    ladder = invariant_ladder(canonical_bivector(3), zero, z, 3, toda_calibration)
    np.testing.assert_array_equal(ladder.Y, 0.0)
    np.testing.assert_array_equal(ladder.I, 0.0)


@pytest.mark.parametrize("scale", [1e-6, 1.0, 1e3])
def test_pairing_tolerance_is_relative_to_the_spectral_radius(rng, toda_calibration, scale):
    s = TodaState.random(rng, 3)
    W, sigma = canonical_bivector(3), toda_LEomega_field(3)
    scaled = TwoFormField(lambda x: scale * sigma(x))
    lam, gap = paired_spectrum(W, scaled, s.z, toda_calibration)
    reference, _ = paired_spectrum(W, sigma, s.z, toda_calibration)
    np.testing.assert_allclose(lam, scale * reference, rtol=1e-9, atol=1e-12 * scale)
    assert gap <= 1e-8 * np.max(np.abs(lam))


def test_free_particle_ladder(toda_calibration):
    s = TodaState(q=[0.4], p=[1.3])
    ladder = invariant_ladder(canonical_bivector(1), toda_LEomega_field(1), s.z, 1, toda_calibration)
    np.testing.assert_allclose(ladder.Y, [1.3], rtol=1e-12)
    np.testing.assert_allclose(lax_trace_oracle(s, 4), [1.3 ** m / m for m in range(1, 5)], rtol=1e-12)
    np.testing.assert_allclose(toda_integrals_closed(s, 4), [1.3 ** m / m for m in range(1, 5)], rtol=1e-12)


# ========== Calibration ==========

def test_calibration_fixes_toda_conventions(toda_calibration):
    assert toda_calibration.inverse_sign == -1
    assert toda_calibration.global_sign == -1
    assert toda_calibration.pairing == "uniform+"
    assert toda_calibration.max_residual < 1e-9


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_calibration_does_not_depend_on_the_seed(seed, toda_calibration):
    calibration = calibrate_conventions(toda_calibration_hooks(), n=3, states=5, seed=seed)
    assert (calibration.inverse_sign, calibration.global_sign, calibration.pairing) == (
        toda_calibration.inverse_sign, toda_calibration.global_sign, toda_calibration.pairing
    )


def test_field_recurrence_fails_toda_calibration():
    with pytest.raises(CalibrationError) as exc:
        calibrate_conventions(toda_calibration_hooks(), n=3, states=5, seed=0, variant="field")
    assert all(r > 1e-9 for r in exc.value.residuals.values())


def test_printed_recurrence_fails_calibration():
    with pytest.raises(CalibrationError) as exc:
        calibrate_conventions(toda_calibration_hooks(), n=3, states=5, seed=0, variant="toda_printed")
    assert set(exc.value.residuals) == {"uniform+", "uniform-", "alternating", "alternating-shifted"}
