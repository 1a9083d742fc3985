"""Tests for the NSE, KdV and mKdV models"""

import numpy as np
import pytest

from binoether.core.fieldkit import Grid, derivative_array
from binoether.core.pdemodels import (
    EXPECTED_SCALE,
    ModelKind,
    ModelSpec,
    calibrate_bracket,
    generator,
    generator_array,
    hamiltonian,
    hamiltonian_flow_check,
    initial_field,
    integrate,
    invariants,
    involutivity_matrix,
    kdv_soliton,
    le_omega_check,
    linearized_residual,
    model_bracket,
    model_functionals,
    plane_wave,
    rhs,
    sine_probe,
)
from binoether.errors import (
    BoundaryError,
    CalibrationRequiredError,
    DivergenceError,
    PreconditionError,
)


def _model(kind: str, **kwargs) -> ModelSpec:
    return ModelSpec(kind=kind, grid=Grid(L=40.0, N=256), **kwargs)


def _wide(kind: str, **kwargs) -> ModelSpec:
    """Box wide enough that a width-4 pulse keeps its dispersive tail off the edges through t = 0.5"""
    return ModelSpec(kind=kind, grid=Grid(L=80.0, N=512), **kwargs)


WIDE_PULSE = {"kdv": {"amplitude": 1.0, "width": 4.0}, "mkdv": {"amplitude": 0.5, "width": 4.0}}


@pytest.fixture
def kdv():
    return _model("kdv")


@pytest.fixture
def nse():
    return _model("nse")


@pytest.fixture
def mkdv():
    return _model("mkdv")


# ========== Model spec ==========

def test_model_spec_defaults_and_validation():
    m = _model("nse")
    assert m.kind is ModelKind.NSE
    assert m.scheme == "strang"
    assert m.structure == "nse"
    with pytest.raises(PreconditionError):
        _model("kdv", scheme="strang")
    with pytest.raises(PreconditionError):
        _model("mkdv", dt=0.0)


def test_refined_model_halves_step_and_doubles_grid(kdv):
    fine = kdv.refined()
    assert fine.dt == pytest.approx(kdv.dt / 2)
    assert fine.grid.N == 2 * kdv.grid.N
    assert fine.grid.L == kdv.grid.L
    coarse = kdv.refined(0.5)
    assert coarse.dt == pytest.approx(2 * kdv.dt)
    assert coarse.grid.N == kdv.grid.N // 2


def test_unknown_preset(kdv):
    with pytest.raises(PreconditionError):
        initial_field(kdv, "planewave")


def test_field_kind_must_match_model(kdv, nse):
    with pytest.raises(PreconditionError):
        rhs(kdv, initial_field(nse, "gaussian"))


# ========== Dynamics ==========

@pytest.mark.parametrize("preset", ["zero", "constant"])
def test_mkdv_trivial_solutions_are_stationary(mkdv, preset):
    u0 = initial_field(mkdv, preset)
    traj = integrate(mkdv, u0, 0.05)
    np.testing.assert_allclose(traj.snapshots[-1], u0.samples, atol=1e-12)


def test_plane_wave_rotates_at_dispersion_relation(nse):
    A, mode = 0.7, 2
    wave = plane_wave(nse.grid, A, mode)
    traj = integrate(nse, nse.field(wave), 1.0, record_every=1000)
    k = 2.0 * np.pi * mode / nse.grid.L
    np.testing.assert_allclose(traj.snapshots[-1], wave * np.exp(-1j * (k ** 2 - 2 * A ** 2) * 1.0), atol=1e-8)


def test_kdv_soliton_keeps_shape(kdv):
    c = 0.25
    traj = integrate(kdv, kdv.field(kdv_soliton(kdv.grid, c)), 1.0, record_every=1000)
    mask = kdv.grid.interior()
    exact = kdv_soliton(kdv.grid, c, t=1.0)
    assert np.max(np.abs(traj.snapshots[-1] - exact)[mask]) < 1e-4


@pytest.mark.parametrize("kind,scheme", [("nse", "strang"), ("nse", "yoshida4"), ("kdv", None), ("mkdv", None)])
def test_invariants_are_conserved(kind, scheme):
    model = _model(kind, scheme=scheme)
    f0 = initial_field(model, "gaussian")
    traj = integrate(model, f0, 0.5, record_every=500)
    start, end = invariants(model, traj.field(0)), invariants(model, traj.field(-1))
    np.testing.assert_allclose(end, start, rtol=1e-6, atol=1e-6)


def test_strang_conserves_mass_to_roundoff(nse):
    f0 = initial_field(nse, "gaussian")
    traj = integrate(nse, f0, 0.5, record_every=500)
    assert invariants(nse, traj.field(-1))[0] == pytest.approx(invariants(nse, f0)[0], rel=1e-12)


def test_stiff_step_diverges(kdv):
    coarse = _model("kdv", dt=0.5)
    with pytest.raises(DivergenceError) as exc:
        integrate(coarse, initial_field(coarse, "gaussian", {"amplitude": 5.0}), 50.0)
    assert exc.value.step is not None


def test_nse_energy_density_relation(nse):
    f0 = initial_field(nse, "gaussian")
    assert invariants(nse, f0)[2] == pytest.approx(2.0 * hamiltonian(nse, f0), rel=1e-12)


def test_plane_wave_rhs_is_a_phase_rotation(nse):
    A, mode = 0.8, 3
    wave = plane_wave(nse.grid, A, mode)
    k = 2.0 * np.pi * mode / nse.grid.L
    np.testing.assert_allclose(rhs(nse, nse.field(wave)).samples, 1j * (2.0 * A ** 2 - k ** 2) * wave, atol=1e-12)


def test_plane_wave_mass(nse):
    A = 0.7
    wave = nse.field(plane_wave(nse.grid, A, 2))
    assert invariants(nse, wave)[0] == pytest.approx(2.0 * A ** 2 * nse.grid.L, rel=1e-12)


def test_kdv_sine_second_invariant(kdv):
    u = kdv.field(np.sin(2.0 * np.pi * kdv.grid.x / kdv.grid.L))
    assert invariants(kdv, u)[1] == pytest.approx(2.0 * kdv.grid.L / 9.0, rel=1e-12)


# ========== Generator ==========

@pytest.mark.parametrize("kind", ["nse", "kdv", "mkdv"])
def test_generator_vanishes_on_zero_field(kind):
    model = _model(kind)
    E = generator(model, initial_field(model, "gaussian") * 0.0, t=1.0)
    np.testing.assert_allclose(E.samples, 0.0, atol=1e-14)


def test_generator_guard_rejects_edge_mass(kdv):
    u = initial_field(kdv, "gaussian", {"center": 17.0})
    with pytest.raises(BoundaryError):
        generator(kdv, u)


@pytest.mark.parametrize("kind", ["nse", "kdv", "mkdv"])
def test_generator_solves_linearized_equations(kind):
    model = _model(kind) if kind == "nse" else _wide(kind)
    traj = integrate(model, initial_field(model, "gaussian", WIDE_PULSE.get(kind)), 0.5)
    res = linearized_residual(model, traj)
    assert res.max_residual < 1e-3
    assert res.warning is None


def test_translation_is_a_symmetry():
    kdv = _wide("kdv")
    traj = integrate(kdv, initial_field(kdv, "gaussian", WIDE_PULSE["kdv"]), 0.5)
    res = linearized_residual(kdv, traj, lambda s, t: derivative_array(kdv.grid, s, 1))
    assert res.max_residual < 1e-6


def test_perturbed_generator_is_rejected():
    kdv = _wide("kdv")
    traj = integrate(kdv, initial_field(kdv, "gaussian", WIDE_PULSE["kdv"]), 0.5)
    baseline = linearized_residual(kdv, traj).max_residual
    perturbed = linearized_residual(kdv, traj, lambda s, t: generator_array(kdv, s, t) + 0.01 * s).max_residual
    assert perturbed > 10.0 * baseline


def test_mkdv_perturbation_residual_grows_linearly():
    mkdv = _wide("mkdv")
    traj = integrate(mkdv, initial_field(mkdv, "gaussian", WIDE_PULSE["mkdv"]), 0.5)
    r1, r2 = (
        linearized_residual(mkdv, traj, lambda s, t, e=e: generator_array(mkdv, s, t) + e * s).max_residual
        for e in (0.01, 0.02)
    )
    assert r2 / r1 == pytest.approx(2.0, abs=0.2)


def test_custom_generator_is_still_guarded_against_edge_mass(kdv):
    traj = integrate(kdv, initial_field(kdv, "gaussian", {"center": 17.0}), 0.01)
    with pytest.raises(BoundaryError):
        linearized_residual(kdv, traj, lambda s, t: derivative_array(kdv.grid, s, 1))


def test_residual_refuses_fields_at_the_edges(kdv):
    traj = integrate(kdv, initial_field(kdv, "gaussian", {"center": 17.0}), 0.01)
    with pytest.raises(BoundaryError):
        linearized_residual(kdv, traj)


def test_residual_needs_three_snapshots(kdv):
    traj = integrate(kdv, initial_field(kdv, "gaussian"), kdv.dt)
    with pytest.raises(PreconditionError):
        linearized_residual(kdv, traj)


# ========== Hamiltonian structure ==========

@pytest.mark.parametrize("kind", ["nse", "kdv", "mkdv"])
def test_bracket_scale_reproduces_flow(kind):
    model = _model(kind)
    flow = hamiltonian_flow_check(model, initial_field(model, "gaussian"))
    assert flow.scale == pytest.approx(EXPECTED_SCALE[model.structure], rel=1e-6)
    assert flow.matches_expected
    assert flow.residual < 1e-4


def test_zero_field_cannot_calibrate(kdv):
    with pytest.raises(PreconditionError):
        hamiltonian_flow_check(kdv, initial_field(kdv, "gaussian") * 0.0)


def test_bracket_requires_calibration(kdv):
    u = initial_field(kdv, "gaussian")
    funcs = model_functionals(kdv)
    with pytest.raises(CalibrationRequiredError):
        model_bracket(kdv, funcs["I2"], funcs["I3"], u)
    with pytest.raises(CalibrationRequiredError):
        involutivity_matrix(kdv, u)


@pytest.mark.parametrize("kind", ["nse", "kdv", "mkdv"])
def test_conservation_laws_commute(kind):
    model = _wide(kind) if kind == "mkdv" else _model(kind)
    u = initial_field(model, "gaussian", WIDE_PULSE["mkdv"] if kind == "mkdv" else None)
    matrix = involutivity_matrix(calibrate_bracket(model, u), u)
    assert matrix.shape == (4, 4)
    assert np.max(np.abs(matrix)) < 1e-4
    np.testing.assert_array_equal(np.diag(matrix), 0.0)


def test_sine_probe_does_not_commute(kdv):
    u = initial_field(kdv, "gaussian")
    model = calibrate_bracket(kdv, u)
    assert abs(model_bracket(model, model_functionals(model)["I3"], sine_probe(model), u)) > 1e-4


def test_euler_lagrange_gradients_agree(kdv):
    from binoether.core.fieldkit import functional_gradient

    u = initial_field(kdv, "gaussian")
    for F in model_functionals(kdv).values():
        functional_gradient(F, u)


# ========== Bi-Hamiltonian 2-form ==========

@pytest.mark.parametrize("kind,normalization", [("kdv", 2.0), ("mkdv", -1.0), ("nse", -1.0)])
def test_display_form_matches_lie_derivative(kind, normalization):
    model = _model(kind)
    report = le_omega_check(model, initial_field(model, "gaussian", {"amplitude": 0.5}), count=6, seed=3)
    assert report.normalization == pytest.approx(normalization, rel=1e-3)
    assert report.max_deviation < 1e-3
    assert report.samples == 7
    assert 0 < report.rank <= report.samples
