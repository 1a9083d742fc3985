"""
NSE, KdV and mKdV
Dynamics, non-Noether generators, conserved-functional ladders, Hamiltonian
realizations, linearized symmetry residuals and bi-Hamiltonian 2-form checks
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import fft as sfft

from binoether.core.fieldkit import (
    ComplexField,
    Functional,
    Grid,
    GridField,
    RealField,
    bracket_from_gradients,
    check_support,
    density_functional,
    derivatives,
    functional_gradient,
    hamiltonian_flow,
    krasny_filter,
    antiderivative_array,
    lie_derivative_constant_form,
    linear_functional,
    quadrature_array,
    random_variation,
    two_form_eval,
)
from binoether.errors import CalibrationRequiredError, DivergenceError, PreconditionError

logger = logging.getLogger(__name__)

BLOWUP_FACTOR = 1e6


class ModelKind(str, Enum):
    NSE = "nse"
    KDV = "kdv"
    MKDV = "mkdv"


SCHEMES = {
    ModelKind.NSE: ("strang", "yoshida4"),
    ModelKind.KDV: ("ifrk4",),
    ModelKind.MKDV: ("ifrk4",),
}

# Bracket scale expected from the Hamiltonian-flow calibration
EXPECTED_SCALE = {"gardner": -0.5, "nse": -1.0}


@dataclass(frozen=True)
class ModelSpec:
    """One PDE model on a grid with its integrator settings and bracket calibration"""
    kind: ModelKind
    grid: Grid = field(default_factory=Grid)
    dt: float = 1e-3
    scheme: Optional[str] = None
    dealias: bool = False
    bracket_scale: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        scheme = self.scheme or SCHEMES[self.kind][0]
        if scheme not in SCHEMES[self.kind]:
            raise PreconditionError(f"Scheme '{scheme}' not available for {self.kind.value}")
        object.__setattr__(self, "scheme", scheme)
        if not self.dt > 0:
            raise PreconditionError(f"dt must be positive, got {self.dt}")

    @property
    def is_complex(self) -> bool:
        return self.kind is ModelKind.NSE

    @property
    def structure(self) -> str:
        return "nse" if self.kind is ModelKind.NSE else "gardner"

    def field(self, samples: np.ndarray) -> GridField:
        if self.is_complex:
            return ComplexField(self.grid, samples)
        return RealField(self.grid, np.real(samples))

    def with_calibration(self, scale: float) -> "ModelSpec":
        return replace(self, bracket_scale=scale)

    def refined(self, factor: float = 2.0) -> "ModelSpec":
        """(dt, N) -> (dt / factor, factor N); factors below 1 coarsen"""
        return replace(self, dt=self.dt / factor, grid=Grid(L=self.grid.L, N=int(round(self.grid.N * factor))))


@dataclass(frozen=True)
class PdeTrajectory:
    times: np.ndarray
    snapshots: np.ndarray
    grid: Grid
    scheme: str
    dt: float

    def __len__(self) -> int:
        return self.times.size

    def field(self, k: int) -> GridField:
        s = self.snapshots[k]
        return ComplexField(self.grid, s) if np.iscomplexobj(s) else RealField(self.grid, s)


def _samples(f) -> np.ndarray:
    return f.samples if isinstance(f, GridField) else np.asarray(f)


def _check_kind(model: ModelSpec, f: GridField) -> None:
    if f.grid != model.grid:
        raise PreconditionError("Field grid does not match model grid")
    if f.is_complex != model.is_complex:
        raise PreconditionError(f"{model.kind.value} needs a {'complex' if model.is_complex else 'real'} field")


# ========== Right-hand sides ==========

def _ik(grid: Grid) -> np.ndarray:
    ik = 1j * grid.k.copy()
    ik[grid.nyquist] = 0.0
    return ik


def _nonlinear_hat(model: ModelSpec, u_hat: np.ndarray) -> np.ndarray:
    """Fourier transform of the nonlinear part of u_t for kdv/mkdv"""
    u = sfft.ifft(u_hat).real
    ik = _ik(model.grid)
    if model.kind is ModelKind.KDV:
        out = -0.5 * ik * sfft.fft(u ** 2)
    else:
        out = 2.0 * ik * sfft.fft(u ** 3)
    if model.dealias:
        out = out * model.grid.dealias_mask()
    return out


def rhs_array(model: ModelSpec, s: np.ndarray) -> np.ndarray:
    g = model.grid
    if model.kind is ModelKind.NSE:
        _, _, psi_xx = derivatives(g, s, 2)
        nonlin = 2.0 * np.abs(s) ** 2 * s
        if model.dealias:
            nonlin = sfft.ifft(sfft.fft(nonlin) * g.dealias_mask())
        return 1j * (psi_xx + nonlin)
    linear = -(_ik(g) ** 3) * sfft.fft(s)
    return sfft.ifft(linear + _nonlinear_hat(model, sfft.fft(s))).real


def rhs(model: ModelSpec, f: GridField, t: float = 0.0) -> GridField:
    """nse: i(psi_xx + 2 psi^2 psibar); kdv: -(u_xxx + u u_x); mkdv: -(u_xxx - 6 u^2 u_x)"""
    _check_kind(model, f)
    return model.field(rhs_array(model, f.samples))


# ========== Integration ==========

_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = -(2.0 ** (1.0 / 3.0)) * _W1


def _strang(model: ModelSpec, psi: np.ndarray, dt: float) -> np.ndarray:
    half = np.exp(-0.5j * model.grid.k ** 2 * dt)
    psi = sfft.ifft(half * sfft.fft(psi))
    psi = psi * np.exp(2j * np.abs(psi) ** 2 * dt)
    return sfft.ifft(half * sfft.fft(psi))


def _nse_step(model: ModelSpec, psi: np.ndarray, dt: float) -> np.ndarray:
    if model.scheme == "yoshida4":
        for w in (_W1, _W0, _W1):
            psi = _strang(model, psi, w * dt)
        return psi
    return _strang(model, psi, dt)


def _ifrk4_step(model: ModelSpec, u_hat: np.ndarray, dt: float) -> np.ndarray:
    lin = -(_ik(model.grid) ** 3)
    E = np.exp(0.5 * dt * lin)
    E2 = E * E
    n1 = _nonlinear_hat(model, u_hat)
    n2 = _nonlinear_hat(model, E * (u_hat + 0.5 * dt * n1))
    n3 = _nonlinear_hat(model, E * u_hat + 0.5 * dt * n2)
    n4 = _nonlinear_hat(model, E2 * u_hat + dt * E * n3)
    return E2 * u_hat + (dt / 6.0) * (E2 * n1 + 2.0 * E * (n2 + n3) + n4)


def integrate(
    model: ModelSpec,
    f0: GridField,
    T: float,
    t0: float = 0.0,
    record_every: int = 1,
) -> PdeTrajectory:
    """
    nse: split-step Fourier (Strang or its fourth-order composition).
    kdv/mkdv: integrating-factor RK4 with the exact linear propagator.
    """
    _check_kind(model, f0)
    dt = model.dt
    steps = int(round(T / dt))
    norm0 = float(np.max(np.abs(f0.samples)))
    limit = BLOWUP_FACTOR * max(1.0, norm0)

    state = np.array(f0.samples) if model.is_complex else sfft.fft(f0.samples)
    times = [t0]
    snaps = [np.array(f0.samples)]
    for k in range(1, steps + 1):
        t = t0 + k * dt
        if model.is_complex:
            state = _nse_step(model, state, dt)
            current = state
        else:
            state = _ifrk4_step(model, state, dt)
            current = sfft.ifft(state).real
        peak = float(np.max(np.abs(current)))
        if not np.isfinite(peak) or peak > limit:
            raise DivergenceError(
                f"{model.kind.value} {model.scheme} integration blew up at t = {t:.6g} (peak {peak:.3e})",
                step=k,
                time=t,
            )
        if k % record_every == 0:
            times.append(t)
            snaps.append(np.array(current))
    logger.debug(f"Integrated {model.kind.value} with {model.scheme}: {steps} steps, dt={dt:g}, N={model.grid.N}")
    return PdeTrajectory(
        times=np.array(times),
        snapshots=np.array(snaps),
        grid=model.grid,
        scheme=model.scheme,
        dt=dt * record_every,
    )


# ========== Generators ==========

def nonlocal_potential(model: ModelSpec, s: np.ndarray) -> np.ndarray:
    """phi (phi_x = |psi|^2), v (v_x = u) or w (w_x = u^2), anchored at the left edge"""
    g = model.grid
    if model.kind is ModelKind.NSE:
        return antiderivative_array(g, np.abs(s) ** 2, "left")
    if model.kind is ModelKind.KDV:
        return antiderivative_array(g, s, "left")
    return antiderivative_array(g, s ** 2, "left")


def generator_array(model: ModelSpec, s: np.ndarray, t: float) -> np.ndarray:
    g = model.grid
    x = g.x
    s = krasny_filter(s)
    d = derivatives(g, s, 5)
    pot = nonlocal_potential(model, s)
    if model.kind is ModelKind.NSE:
        psi, psi_x, psi_xx, psi_xxx = d[0], d[1], d[2], d[3]
        mod2 = np.abs(psi) ** 2
        return (
            1j * (psi_x + 0.5 * x * psi_xx + psi * pot + x * mod2 * psi)
            - t * (psi_xxx + 6.0 * mod2 * psi_x)
        )
    u, ux, uxx, uxxx, _, u5 = d
    if model.kind is ModelKind.KDV:
        return (
            0.5 * uxx
            + u ** 2 / 6.0
            + ux * pot / 24.0
            + x / 8.0 * (uxxx + u * ux)
            - t / 16.0 * (6.0 * u5 + 20.0 * ux * uxx + 10.0 * u * uxxx + 5.0 * u ** 2 * ux)
        )
    return (
        -1.5 * uxx
        + 2.0 * u ** 3
        + ux * pot
        - 0.5 * x * (uxxx - 6.0 * u ** 2 * ux)
        - 1.5 * t * (u5 - 10.0 * u ** 2 * uxxx - 40.0 * u * ux * uxx - 10.0 * ux ** 3 + 30.0 * u ** 4 * ux)
    )


def generator(model: ModelSpec, f: GridField, t: float = 0.0, guard: bool = True) -> GridField:
    """E(field) at time t; guard checks the field stays away from the box edges"""
    _check_kind(model, f)
    if guard:
        check_support(f)
    return model.field(generator_array(model, f.samples, t))


# ========== Linearized symmetry condition ==========

def linearized_rhs(model: ModelSpec, s: np.ndarray, E: np.ndarray) -> np.ndarray:
    g = model.grid
    if model.kind is ModelKind.NSE:
        _, _, E_xx = derivatives(g, E, 2)
        return 1j * (E_xx + 2.0 * s ** 2 * np.conj(E) + 4.0 * np.abs(s) ** 2 * E)
    _, E_x, _, E_xxx = derivatives(g, E, 3)
    u, u_x = derivatives(g, s, 1)
    if model.kind is ModelKind.KDV:
        return -(E_xxx + u_x * E + u * E_x)
    return -(E_xxx - 12.0 * u * u_x * E - 6.0 * u ** 2 * E_x)


@dataclass
class ResidualSeries:
    times: np.ndarray
    residuals: np.ndarray
    warning: Optional[str] = None

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals, initial=0.0))


def linearized_residual(
    model: ModelSpec,
    traj: PdeTrajectory,
    generator_fn: Optional[Callable[[np.ndarray, float], np.ndarray]] = None,
    order: int = 2,
    window: float = 0.25,
    coarse_dt: float = 5e-3,
) -> ResidualSeries:
    """
    Interior L-inf norm of d/dt E(field(t), t) minus the linearized right-hand side
    applied to E, with d/dt by central differences across snapshots
    """
    if order not in (2, 4):
        raise PreconditionError(f"Unsupported time-derivative order {order}")
    width = order // 2
    if len(traj) < 2 * width + 1:
        raise PreconditionError("Trajectory too short for a central time derivative")
    check_support(traj.snapshots[0], traj.grid)
    check_support(traj.snapshots[-1], traj.grid)
    gen = generator_fn or (lambda s, t: generator_array(model, s, t))
    E = np.array([gen(s, float(t)) for s, t in zip(traj.snapshots, traj.times)])
    dt = traj.dt
    if order == 2:
        dE = (E[2:] - E[:-2]) / (2.0 * dt)
    else:
        dE = (-E[4:] + 8.0 * E[3:-1] - 8.0 * E[1:-3] + E[:-4]) / (12.0 * dt)
    mask = traj.grid.interior(window)
    res = []
    for k in range(width, len(traj) - width):
        lin = linearized_rhs(model, traj.snapshots[k], E[k])
        res.append(float(np.max(np.abs(dE[k - width] - lin)[mask])))

    warning = None
    if dt > coarse_dt:
        warning = f"dt = {dt:g} exceeds {coarse_dt:g}; time-derivative error may dominate"
        logger.warning(f"⚠️ {warning}")
    return ResidualSeries(times=traj.times[width:len(traj) - width], residuals=np.array(res), warning=warning)


# ========== Functionals ==========

def _nse_density(index: int) -> Callable[[GridField], float]:
    def _eval(f: GridField) -> float:
        psi, px, pxx = derivatives(f.grid, f.samples, 2)
        cb, cbx, cbxx = np.conj(psi), np.conj(px), np.conj(pxx)
        if index == 1:
            dens = 2.0 * psi * cb
        elif index == 2:
            dens = 1j * (cbx * psi - px * cb)
        elif index == 3:
            dens = 2.0 * (psi ** 2 * cb ** 2 - px * cbx)
        elif index == 4:
            dens = 1j * (cbx * pxx - px * cbxx) + 3j * (cb * psi ** 2 * cbx - psi * cb ** 2 * px)
        else:
            dens = psi ** 2 * cb ** 2 - px * cbx
        return quadrature_array(f.grid, dens)
    return _eval


_C4_KDV = 64.0 / 45.0
_C4_MKDV = 256.0 / 5.0


def _ladder_densities(kind: ModelKind) -> List[tuple]:
    """(name, order, density, partials) for I_1..I_4 then h"""
    if kind is ModelKind.KDV:
        return [
            ("I1", 0, lambda d: (2.0 / 3.0) * d[0], lambda d: [np.full_like(d[0], 2.0 / 3.0)]),
            ("I2", 0, lambda d: (4.0 / 9.0) * d[0] ** 2, lambda d: [(8.0 / 9.0) * d[0]]),
            (
                "I3", 1,
                lambda d: (8.0 / 9.0) * (d[0] ** 3 / 3.0 - d[1] ** 2),
                lambda d: [(8.0 / 9.0) * d[0] ** 2, -(16.0 / 9.0) * d[1]],
            ),
            (
                "I4", 2,
                lambda d: _C4_KDV * (5.0 / 36.0 * d[0] ** 4 - 5.0 / 3.0 * d[0] * d[1] ** 2 + d[2] ** 2),
                lambda d: [
                    _C4_KDV * (5.0 / 9.0 * d[0] ** 3 - 5.0 / 3.0 * d[1] ** 2),
                    _C4_KDV * (-10.0 / 3.0 * d[0] * d[1]),
                    _C4_KDV * 2.0 * d[2],
                ],
            ),
            ("h", 1, lambda d: d[1] ** 2 - d[0] ** 3 / 3.0, lambda d: [-d[0] ** 2, 2.0 * d[1]]),
        ]
    return [
        ("I1", 0, lambda d: -4.0 * d[0] ** 2, lambda d: [-8.0 * d[0]]),
        (
            "I2", 1,
            lambda d: 16.0 * (d[0] ** 4 + d[1] ** 2),
            lambda d: [64.0 * d[0] ** 3, 32.0 * d[1]],
        ),
        (
            "I3", 2,
            lambda d: -32.0 * (2.0 * d[0] ** 6 + 10.0 * d[0] ** 2 * d[1] ** 2 + d[2] ** 2),
            lambda d: [
                -32.0 * (12.0 * d[0] ** 5 + 20.0 * d[0] * d[1] ** 2),
                -32.0 * 20.0 * d[0] ** 2 * d[1],
                -64.0 * d[2],
            ],
        ),
        (
            "I4", 3,
            lambda d: _C4_MKDV * (
                5.0 * d[0] ** 8 + 70.0 * d[0] ** 4 * d[1] ** 2 - 7.0 * d[1] ** 4
                + 14.0 * d[0] ** 2 * d[2] ** 2 + d[3] ** 2
            ),
            lambda d: [
                _C4_MKDV * (40.0 * d[0] ** 7 + 280.0 * d[0] ** 3 * d[1] ** 2 + 28.0 * d[0] * d[2] ** 2),
                _C4_MKDV * (140.0 * d[0] ** 4 * d[1] - 28.0 * d[1] ** 3),
                _C4_MKDV * 28.0 * d[0] ** 2 * d[2],
                _C4_MKDV * 2.0 * d[3],
            ],
        ),
        ("h", 1, lambda d: d[1] ** 2 + d[0] ** 4, lambda d: [4.0 * d[0] ** 3, 2.0 * d[1]]),
    ]


def model_functionals(model: ModelSpec) -> Dict[str, Functional]:
    """I1..I4 and h for the model"""
    if model.kind is ModelKind.NSE:
        names = ["I1", "I2", "I3", "I4", "h"]
        return {name: Functional(eval=_nse_density(i + 1), name=name) for i, name in enumerate(names)}
    return {
        name: density_functional(name, order, dens, parts)
        for name, order, dens, parts in _ladder_densities(model.kind)
    }


def invariants(model: ModelSpec, f: GridField) -> np.ndarray:
    _check_kind(model, f)
    funcs = model_functionals(model)
    return np.array([funcs[f"I{m}"](f) for m in range(1, 5)])


def hamiltonian(model: ModelSpec, f: GridField) -> float:
    """nse: int(|psi|^4 - |psi_x|^2); kdv: int(u_x^2 - u^3/3); mkdv: int(u_x^2 + u^4)"""
    _check_kind(model, f)
    return model_functionals(model)["h"](f)


def sine_probe(model: ModelSpec) -> Functional:
    """G = integral of sin(2 pi x / L) u, not conserved"""
    g = model.grid
    return linear_functional(RealField(g, np.sin(2.0 * np.pi * g.x / g.L)), name="sin_probe")


# ========== Hamiltonian structure ==========

@dataclass
class FlowCalibration:
    """Bracket scale s fitted so that {h, field} reproduces the model right-hand side"""
    structure: str
    scale: float
    expected: float
    residual: float

    @property
    def matches_expected(self) -> bool:
        return abs(self.scale - self.expected) < 1e-3 * abs(self.expected)

    def to_dict(self) -> dict:
        return {
            "structure": self.structure,
            "scale": self.scale,
            "expected": self.expected,
            "residual": self.residual,
        }


def hamiltonian_flow_check(model: ModelSpec, f: GridField, window: float = 0.25) -> FlowCalibration:
    """
    Fit s by least squares between the unit-scale flow of h and the right-hand side,
    then report the interior max residual relative to max |rhs|
    """
    _check_kind(model, f)
    dh = functional_gradient(model_functionals(model)["h"], f)
    base = hamiltonian_flow(dh, model.structure, 1.0).samples
    target = rhs_array(model, f.samples)
    denom = float(np.real(np.vdot(base, base)))
    if denom == 0:
        raise PreconditionError("Hamiltonian flow vanishes identically; pick a nonzero field")
    scale = float(np.real(np.vdot(base, target)) / denom)
    mask = model.grid.interior(window)
    ref = max(float(np.max(np.abs(target[mask]))), np.finfo(float).tiny)
    residual = float(np.max(np.abs(scale * base - target)[mask]) / ref)
    result = FlowCalibration(
        structure=model.structure,
        scale=scale,
        expected=EXPECTED_SCALE[model.structure],
        residual=residual,
    )
    logger.info(f"🔍 {model.kind.value} bracket scale {scale:.6f} (residual {residual:.2e})")
    return result


def calibrate_bracket(model: ModelSpec, f: GridField) -> ModelSpec:
    return model.with_calibration(hamiltonian_flow_check(model, f).scale)


def model_bracket(model: ModelSpec, F: Functional, G: Functional, f: GridField) -> float:
    if model.bracket_scale is None:
        raise CalibrationRequiredError(f"{model.kind.value} bracket used before calibration")
    return bracket_from_gradients(
        functional_gradient(F, f), functional_gradient(G, f), model.structure, model.bracket_scale
    )


def involutivity_matrix(model: ModelSpec, f: GridField, M: int = 4) -> np.ndarray:
    """{I_k, I_m} for k, m <= M; diagonal exactly zero"""
    if model.bracket_scale is None:
        raise CalibrationRequiredError(f"{model.kind.value} bracket used before calibration")
    _check_kind(model, f)
    funcs = model_functionals(model)
    grads = [functional_gradient(funcs[f"I{m}"], f) for m in range(1, M + 1)]
    out = np.zeros((M, M))
    for i in range(M):
        for j in range(i + 1, M):
            out[i, j] = bracket_from_gradients(grads[i], grads[j], model.structure, model.bracket_scale)
            out[j, i] = -out[i, j]
    return out


# ========== Bi-Hamiltonian 2-form ==========

@dataclass
class LeOmegaReport:
    """
    Displayed L_E omega against the commutator-formula Lie derivative of omega

    normalization: c fitted at zero background with display * c = commutator.
    """
    normalization: float
    max_deviation: float
    rank: int
    samples: int
    pairs: List[tuple] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "normalization": self.normalization,
            "max_deviation": self.max_deviation,
            "rank": self.rank,
            "samples": self.samples,
        }


def _le_pair(model: ModelSpec, base: GridField, d1: GridField, d2: GridField) -> tuple:
    kind = model.kind.value
    E = lambda u: generator(model, u, 0.0, guard=False)  # noqa: E731
    display = two_form_eval(f"le-{kind}", base, d1, d2)
    commutator = lie_derivative_constant_form(f"canonical-{kind}", E, base, d1, d2)
    return display, commutator


def display_normalization(model: ModelSpec, variations: Sequence[GridField]) -> float:
    """Least-squares c at zero background"""
    zero = model.field(np.zeros(model.grid.N, dtype=complex if model.is_complex else float))
    pairs = [_le_pair(model, zero, variations[i], variations[i + 1]) for i in range(len(variations) - 1)]
    disp = np.array([p[0] for p in pairs])
    comm = np.array([p[1] for p in pairs])
    denom = float(disp @ disp)
    if denom == 0:
        raise PreconditionError("Displayed 2-form vanishes on all sample variations")
    return float(disp @ comm / denom)


def le_omega_check(
    model: ModelSpec,
    f: GridField,
    variations: Optional[Sequence[GridField]] = None,
    count: int = 10,
    seed: int = 0,
    normalization: Optional[float] = None,
) -> LeOmegaReport:
    _check_kind(model, f)
    if variations is None:
        rng = np.random.default_rng(seed)
        variations = [random_variation(model.grid, rng, model.is_complex) for _ in range(count + 1)]
    if len(variations) < 2:
        raise PreconditionError("Need at least two variations")
    c = display_normalization(model, variations) if normalization is None else normalization

    pairs = [_le_pair(model, f, variations[i], variations[i + 1]) for i in range(len(variations) - 1)]
    ref = max(max(abs(p[1]) for p in pairs), np.finfo(float).tiny)
    deviation = max(abs(c * p[0] - p[1]) for p in pairs) / ref

    gram = np.array([
        [two_form_eval(f"le-{model.kind.value}", f, a, b) for b in variations]
        for a in variations
    ])
    sv = np.linalg.svd(gram, compute_uv=False)
    rank = int(np.sum(sv > 1e-8 * sv[0])) if sv[0] > 0 else 0

    logger.info(f"🔍 {model.kind.value} L_E omega: c={c:.6f}, deviation {deviation:.2e}, rank {rank}/{len(variations)}")
    return LeOmegaReport(
        normalization=c,
        max_deviation=float(deviation),
        rank=rank,
        samples=len(variations),
        pairs=pairs,
    )


# ========== Initial data ==========

def gaussian(grid: Grid, amplitude: float = 1.0, width: float = 3.0, center: float = 0.0) -> np.ndarray:
    return amplitude * np.exp(-((grid.x - center) / width) ** 2)


def kdv_soliton(grid: Grid, c: float = 0.25, t: float = 0.0, x0: float = 0.0) -> np.ndarray:
    """12 c sech^2(sqrt(c) (x - x0 - 4 c t)), speed 4c"""
    return 12.0 * c / np.cosh(np.sqrt(c) * (grid.x - x0 - 4.0 * c * t)) ** 2


def plane_wave(grid: Grid, amplitude: float = 1.0, mode: int = 1) -> np.ndarray:
    k = 2.0 * np.pi * mode / grid.L
    return amplitude * np.exp(1j * k * grid.x)


PRESETS = {
    ModelKind.NSE: ("gaussian", "planewave"),
    ModelKind.KDV: ("gaussian", "soliton"),
    ModelKind.MKDV: ("gaussian", "constant", "zero"),
}


def initial_field(model: ModelSpec, preset: str, params: Optional[Dict[str, float]] = None) -> GridField:
    params = dict(params or {})
    g = model.grid
    if preset not in PRESETS[model.kind]:
        raise PreconditionError(f"Unknown {model.kind.value} preset '{preset}', expected one of {PRESETS[model.kind]}")
    if preset == "gaussian":
        width = params.get("width", 2.0 if model.is_complex else 3.0)
        s = gaussian(g, params.get("amplitude", 1.0), width, params.get("center", 0.0))
        return model.field(s.astype(complex) if model.is_complex else s)
    if preset == "planewave":
        return model.field(plane_wave(g, params.get("amplitude", 1.0), int(params.get("mode", 1))))
    if preset == "soliton":
        return model.field(kdv_soliton(g, params.get("c", 0.25), 0.0, params.get("center", 0.0)))
    if preset == "constant":
        return model.field(np.full(g.N, params.get("amplitude", 1.0)))
    return model.field(np.zeros(g.N))
