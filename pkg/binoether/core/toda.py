"""
Non-periodic n-particle Toda chain
Dynamics, Hamiltonian structure, the non-Noether generator, closed-form integrals,
the Lax-trace oracle and trajectory-level symmetry verification

Bond variables a_j = exp(q_j - q_{j+1}), j = 0..n-2 (0-indexed particles).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from binoether.core.exterior import (
    BivectorField,
    CalibrationHooks,
    FiniteDifference,
    PhasePoint,
    TwoFormField,
    VectorFieldSpec,
    bracket_field,
    canonical_bivector,
    canonical_two_form,
    schouten_bb,
    schouten_vb,
)
from binoether.errors import DivergenceError, PreconditionError, TodaOverflowError

logger = logging.getLogger(__name__)

OVERFLOW_EXPONENT = 700.0
INTEGRATORS = ("leapfrog", "rk4", "yoshida4")


def eps(k: int) -> int:
    """Sign function with eps(0) = 0"""
    return int(np.sign(k))


# ========== Domain types ==========

@dataclass(frozen=True)
class TodaState:
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        p = np.array(self.p, dtype=float).reshape(-1)
        if q.size == 0 or q.size != p.size:
            raise PreconditionError(f"q and p need equal nonzero length, got {q.size} and {p.size}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p)) and np.isfinite(self.t)):
            raise PreconditionError("Toda state has non-finite entries")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.q.size

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    def to_phase_point(self) -> PhasePoint:
        return PhasePoint(self.z)

    @classmethod
    def from_z(cls, z: np.ndarray, t: float = 0.0) -> "TodaState":
        z = np.asarray(z, dtype=float)
        n = z.size // 2
        return cls(q=z[:n], p=z[n:], t=t)

    @classmethod
    def random(cls, rng: np.random.Generator, n: int, t: float = 0.0) -> "TodaState":
        """q, p uniform in [-1, 1]^n"""
        return cls(q=rng.uniform(-1.0, 1.0, n), p=rng.uniform(-1.0, 1.0, n), t=t)


@dataclass(frozen=True)
class TodaTrajectory:
    """Uniformly sampled trajectory; zs[k] = (q, p) at times[k]"""
    times: np.ndarray
    zs: np.ndarray
    method: str
    dt: float

    @property
    def n(self) -> int:
        return self.zs.shape[1] // 2

    def __len__(self) -> int:
        return self.times.size

    def state(self, k: int) -> TodaState:
        return TodaState.from_z(self.zs[k], float(self.times[k]))

    @property
    def states(self) -> List[TodaState]:
        return [self.state(k) for k in range(len(self))]


# ========== Dynamics ==========

def _split(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    n = z.size // 2
    return z[:n], z[n:]


def bonds(q: np.ndarray) -> np.ndarray:
    """a_j = exp(q_j - q_{j+1}); raises TodaOverflowError for |q_j - q_{j+1}| > 700"""
    d = q[:-1] - q[1:]
    if d.size and np.max(np.abs(d)) > OVERFLOW_EXPONENT:
        j = int(np.argmax(np.abs(d)))
        raise TodaOverflowError(f"Bond exponent q_{j} - q_{j + 1} = {d[j]:.3e} out of range")
    return np.exp(d)


def _padded(a: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """(left bond of particle i, right bond of particle i), zero where absent"""
    left = np.zeros(n)
    right = np.zeros(n)
    left[1:] = a
    right[:-1] = a
    return left, right


def toda_force(q: np.ndarray) -> np.ndarray:
    a = bonds(q)
    left, right = _padded(a, q.size)
    return left - right


def toda_rhs(s: TodaState) -> np.ndarray:
    """(dq/dt, dp/dt) stacked as one 2n vector"""
    return np.concatenate([s.p, toda_force(s.q)])


def toda_hamiltonian(s: TodaState) -> float:
    return float(0.5 * np.sum(s.p ** 2) + np.sum(bonds(s.q)))


def toda_hamiltonian_z(z: np.ndarray) -> float:
    return toda_hamiltonian(TodaState.from_z(z))


def _rhs_jacobian(t: float, z: np.ndarray) -> np.ndarray:
    q, _ = _split(z)
    n = q.size
    a = bonds(q)
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    for j in range(n - 1):
        # dF_j = -a_j (dq_j - dq_{j+1}), dF_{j+1} = +a_j (dq_j - dq_{j+1})
        J[n + j, j] -= a[j]
        J[n + j, j + 1] += a[j]
        J[n + j + 1, j] += a[j]
        J[n + j + 1, j + 1] -= a[j]
    return J


def toda_rhs_field(n: int) -> VectorFieldSpec:
    """Time-evolution field as a VectorFieldSpec, analytic Jacobian included"""
    return VectorFieldSpec(
        eval=lambda t, z: toda_rhs(TodaState.from_z(z, t)),
        jacobian=_rhs_jacobian,
        name=f"toda_rhs_n{n}",
    )


# ========== Generator ==========

def _generator(t: float, z: np.ndarray) -> np.ndarray:
    q, p = _split(z)
    n = q.size
    idx = np.arange(n)
    left, right = _padded(bonds(q), n)
    p_left = np.concatenate([[0.0], p[:-1]])
    p_right = np.concatenate([p[1:], [0.0]])

    Ep = (
        0.5 * p ** 2
        + (n - idx + 1) * left
        - (n - idx - 1) * right
        + 0.5 * t * ((p_left + p) * left - (p + p_right) * right)
    )
    csum = np.cumsum(p)
    before = csum - p
    after = csum[-1] - csum
    Eq = (
        (n - idx) * p
        - 0.5 * before
        + 0.5 * after
        + 0.5 * t * (p ** 2 + left + right)
    )
    return np.concatenate([Eq, Ep])


def _generator_jacobian(t: float, z: np.ndarray) -> np.ndarray:
    """J[a, c] = d_c E^a by hand"""
    q, p = _split(z)
    n = q.size
    a = bonds(q)
    left, right = _padded(a, n)
    m = n - 1

    # d a_j / d q = a_j (e_j - e_{j+1})
    dadq = np.zeros((m, n))
    for j in range(m):
        dadq[j, j] = a[j]
        dadq[j, j + 1] = -a[j]

    dEq_dp = np.zeros((n, n))
    dEq_da = np.zeros((n, m))
    dEp_dp = np.zeros((n, n))
    dEp_da = np.zeros((n, m))
    for i in range(n):
        dEq_dp[i, :i] = -0.5
        dEq_dp[i, i + 1:] = 0.5
        dEq_dp[i, i] = (n - i) + t * p[i]
        dEp_dp[i, i] = p[i] + 0.5 * t * (left[i] - right[i])
        if i >= 1:
            dEq_da[i, i - 1] = 0.5 * t
            dEp_dp[i, i - 1] = 0.5 * t * left[i]
            dEp_da[i, i - 1] = (n - i + 1) + 0.5 * t * (p[i - 1] + p[i])
        if i <= n - 2:
            dEq_da[i, i] = 0.5 * t
            dEp_dp[i, i + 1] = -0.5 * t * right[i]
            dEp_da[i, i] = -(n - i - 1) - 0.5 * t * (p[i] + p[i + 1])

    J = np.zeros((2 * n, 2 * n))
    J[:n, :n] = dEq_da @ dadq
    J[:n, n:] = dEq_dp
    J[n:, :n] = dEp_da @ dadq
    J[n:, n:] = dEp_dp
    return J


def toda_generator(s: TodaState) -> np.ndarray:
    """(E(q), E(p)) at the state's own time"""
    return _generator(s.t, s.z)


def toda_generator_field(n: int) -> VectorFieldSpec:
    return VectorFieldSpec(
        eval=_generator,
        time_dependent=True,
        jacobian=_generator_jacobian,
        name=f"toda_generator_n{n}",
    )


# ========== Symmetry condition along trajectories ==========

@dataclass
class SymmetryResidual:
    times: np.ndarray
    r_q: np.ndarray
    r_p: np.ndarray
    warning: Optional[str] = None

    @property
    def max_residual(self) -> float:
        return float(max(np.max(self.r_q, initial=0.0), np.max(self.r_p, initial=0.0)))


def _linearized_force(q: np.ndarray, Eq: np.ndarray) -> np.ndarray:
    """RHS of the p-part of the linearized equations"""
    left, right = _padded(bonds(q), q.size)
    dq_left = np.zeros_like(Eq)
    dq_right = np.zeros_like(Eq)
    dq_left[1:] = Eq[:-1] - Eq[1:]
    dq_right[:-1] = Eq[:-1] - Eq[1:]
    return left * dq_left - right * dq_right


def toda_symmetry_residual(
    traj: TodaTrajectory,
    generator: Optional[Callable[[float, np.ndarray], np.ndarray]] = None,
    order: int = 2,
    coarse_dt: float = 1e-2,
) -> SymmetryResidual:
    """
    Residuals of the linearized equations dE(q)/dt = E(p) and
    dE(p)/dt = linearized force, with d/dt by central differences in trajectory time

    Returns per-time max norms on the interior samples.
    """
    if order not in (2, 4):
        raise PreconditionError(f"Unsupported time-derivative order {order}")
    gen = generator or _generator
    width = order // 2
    if len(traj) < 2 * width + 1:
        raise PreconditionError("Trajectory too short for a central time derivative")
    n = traj.n
    E = np.array([gen(float(t), z) for t, z in zip(traj.times, traj.zs)])
    dt = traj.dt
    if order == 2:
        dE = (E[2:] - E[:-2]) / (2.0 * dt)
    else:
        dE = (-E[4:] + 8.0 * E[3:-1] - 8.0 * E[1:-3] + E[:-4]) / (12.0 * dt)
    inner = slice(width, len(traj) - width)
    E_in = E[inner]
    zs = traj.zs[inner]

    r_q = np.max(np.abs(dE[:, :n] - E_in[:, n:]), axis=1)
    forced = np.array([_linearized_force(z[:n], e[:n]) for z, e in zip(zs, E_in)])
    r_p = np.max(np.abs(dE[:, n:] - forced), axis=1)

    warning = None
    if dt > coarse_dt:
        warning = f"dt = {dt:g} exceeds {coarse_dt:g}; time-derivative error may dominate"
        logger.warning(f"⚠️ {warning}")
    return SymmetryResidual(times=traj.times[inner], r_q=r_q, r_p=r_p, warning=warning)


# ========== Two-forms and integrals ==========

def toda_LEomega_matrix(z: np.ndarray) -> np.ndarray:
    q, p = _split(np.asarray(z, dtype=float))
    n = q.size
    a = bonds(q)
    m = np.zeros((2 * n, 2 * n))
    for i in range(n):
        m[n + i, i] = p[i]                    # p_i dp_i ^ dq_i
        m[n + i, n + i + 1:] = 1.0            # dp_i ^ dp_j, i < j
    for j in range(n - 1):
        m[j, j + 1] = a[j]                    # a_j dq_j ^ dq_{j+1}
    return m - m.T


def toda_LEomega(s: TodaState) -> np.ndarray:
    return toda_LEomega_matrix(s.z)


def toda_LEomega_field(n: int) -> TwoFormField:
    return TwoFormField(toda_LEomega_matrix, name=f"toda_LEomega_n{n}")


def toda_integrals_closed(s: TodaState, M: int = 4) -> np.ndarray:
    """
    I_1..I_M, M <= 4, from the closed forms

    I_4's middle sum uses p_i^2 + p_i p_{i+1} + p_{i+1}^2, consistent with tr L^4 / 4.
    """
    if M < 1 or M > 4:
        raise PreconditionError(f"Closed forms exist for 1 <= M <= 4, got {M}")
    q, p = s.q, s.p
    a = bonds(q)
    pl, pr = p[:-1], p[1:]
    values = [
        np.sum(p),
        0.5 * np.sum(p ** 2) + np.sum(a),
        np.sum(p ** 3) / 3.0 + np.sum((pl + pr) * a),
        (
            0.25 * np.sum(p ** 4)
            + np.sum((pl ** 2 + pl * pr + pr ** 2) * a)
            + 0.5 * np.sum(a ** 2)
            + np.sum(a[:-1] * a[1:])
        ),
    ]
    return np.array(values[:M], dtype=float)


def lax_matrix(s: TodaState) -> np.ndarray:
    a = bonds(s.q)
    return np.diag(s.p) + np.diag(np.sqrt(a), 1) + np.diag(np.sqrt(a), -1)


def lax_trace_oracle(s: TodaState, M: int) -> np.ndarray:
    """I_m = tr(L^m) / m"""
    if M < 1:
        raise PreconditionError(f"M must be >= 1, got {M}")
    L = lax_matrix(s)
    out = np.zeros(M)
    power = np.eye(s.n)
    for m in range(1, M + 1):
        power = power @ L
        out[m - 1] = np.trace(power) / m
    return out


def lax_spectrum(s: TodaState) -> np.ndarray:
    """Ascending eigenvalues of the Lax matrix, the conserved spectrum"""
    return np.linalg.eigvalsh(lax_matrix(s))


# ========== Integration ==========

def _leapfrog_step(q: np.ndarray, p: np.ndarray, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    p = p + 0.5 * dt * toda_force(q)
    q = q + dt * p
    p = p + 0.5 * dt * toda_force(q)
    return q, p


_Y1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_Y0 = -(2.0 ** (1.0 / 3.0)) * _Y1


def _yoshida_step(q: np.ndarray, p: np.ndarray, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    for w in (_Y1, _Y0, _Y1):
        q, p = _leapfrog_step(q, p, w * dt)
    return q, p


def _rk4_step(q: np.ndarray, p: np.ndarray, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    def f(z):
        n = z.size // 2
        return np.concatenate([z[n:], toda_force(z[:n])])
    z = np.concatenate([q, p])
    k1 = f(z)
    k2 = f(z + 0.5 * dt * k1)
    k3 = f(z + 0.5 * dt * k2)
    k4 = f(z + dt * k3)
    z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return _split(z)


_STEPPERS = {
    "leapfrog": _leapfrog_step,
    "rk4": _rk4_step,
    "yoshida4": _yoshida_step,
}


def integrate_toda(
    s0: TodaState,
    dt: float,
    T: float,
    method: str = "leapfrog",
    record_every: int = 1,
) -> TodaTrajectory:
    """Fixed-step integration from s0.t to s0.t + T"""
    if dt <= 0 or not np.isfinite(dt):
        raise PreconditionError(f"dt must be positive, got {dt}")
    if method not in _STEPPERS:
        raise PreconditionError(f"Unknown Toda integrator '{method}', expected one of {INTEGRATORS}")
    step = _STEPPERS[method]
    steps = int(round(T / dt))
    q, p = s0.q.copy(), s0.p.copy()
    times = [s0.t]
    zs = [np.concatenate([q, p])]
    for k in range(1, steps + 1):
        t = s0.t + k * dt
        try:
            q, p = step(q, p, dt)
        except TodaOverflowError as e:
            raise TodaOverflowError(f"{e} at t = {t:.6g}", step=k, time=t) from e
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise DivergenceError(f"Toda {method} integration diverged at t = {t:.6g}", step=k, time=t)
        if k % record_every == 0:
            times.append(t)
            zs.append(np.concatenate([q, p]))
    logger.debug(f"Integrated Toda n={s0.n} with {method}: {steps} steps, dt={dt:g}")
    return TodaTrajectory(
        times=np.array(times),
        zs=np.array(zs),
        method=method,
        dt=dt * record_every,
    )


# ========== Non-Noether verification ==========

@dataclass
class NonNoetherReport:
    """Norms of [E, W] and of the Yang-Baxter bracket [[E, [E, W]], W]"""
    ew_norm: float
    yb_norm: float
    yb_scaled: float
    ew_threshold: float
    yb_tolerance: float
    extra: dict = field(default_factory=dict)

    @property
    def non_noether(self) -> bool:
        return self.ew_norm > self.ew_threshold

    @property
    def yang_baxter(self) -> bool:
        return self.yb_scaled < self.yb_tolerance

    @property
    def label(self) -> str:
        return "non-Noether" if self.non_noether else "Noether"

    def to_dict(self) -> dict:
        return {
            "ew_norm": self.ew_norm,
            "yb_norm": self.yb_norm,
            "yb_scaled": self.yb_scaled,
            "non_noether": self.non_noether,
            "yang_baxter": self.yang_baxter,
            "label": self.label,
            **self.extra,
        }


def toda_verify_nonnoether(
    s: TodaState,
    t: Optional[float] = None,
    generator: Optional[VectorFieldSpec] = None,
    ew_threshold: float = 1e-3,
    yb_tolerance: float = 1e-6,
    inner_step: float = 1e-3,
    outer_step: float = 1e-2,
) -> NonNoetherReport:
    """
    [E, W] uses the generator's Jacobian (analytic for the Toda generator);
    the two nested levels use fourth-order stencils with steps inner_step and outer_step.
    """
    t = s.t if t is None else t
    E = generator or toda_generator_field(s.n)
    W = canonical_bivector(s.n)
    z = s.z
    inner = FiniteDifference(order=4, step=inner_step)
    outer = FiniteDifference(order=4, step=outer_step)

    ew = bracket_field(E, W, t, inner)
    ew_value = ew(z)
    eew = BivectorField(lambda x: schouten_vb(E, ew, t, x, inner), name="[E,[E,W]]")
    yb = schouten_bb(eew, W, z, outer)

    ew_norm = float(np.max(np.abs(ew_value)))
    yb_norm = float(np.max(np.abs(yb)))
    scale = max(1.0, float(np.max(np.abs(eew(z)))))
    report = NonNoetherReport(
        ew_norm=ew_norm,
        yb_norm=yb_norm,
        yb_scaled=yb_norm / scale,
        ew_threshold=ew_threshold,
        yb_tolerance=yb_tolerance,
        extra={"generator": E.name, "t": t},
    )
    logger.debug(f"🔍 {E.name}: |[E,W]|={ew_norm:.3e}, |YB|={yb_norm:.3e} (scale {scale:.3e})")
    return report


# ========== Involutivity and independence ==========

def toda_integral_functions(n: int, M: Optional[int] = None) -> List[Callable[[np.ndarray], float]]:
    """I_1..I_M as functions of z, via the Lax traces"""
    M = n if M is None else M
    return [
        (lambda z, m=m: float(lax_trace_oracle(TodaState.from_z(z), m)[m - 1]))
        for m in range(1, M + 1)
    ]


def toda_involutivity(
    states: List[TodaState],
    M: Optional[int] = None,
    fd: Optional[FiniteDifference] = None,
) -> np.ndarray:
    """Matrix of max_z |{I_k, I_m}| over the states, k, m = 1..M"""
    fd = fd or FiniteDifference(order=4)
    n = states[0].n
    M = n if M is None else M
    funcs = toda_integral_functions(n, M)
    W = canonical_bivector(n)(np.zeros(2 * n))
    out = np.zeros((M, M))
    for s in states:
        grads = np.array([fd.gradient(f, s.z) for f in funcs])
        out = np.maximum(out, np.abs(grads @ W @ grads.T))
    return out


def toda_independence(
    s: TodaState,
    M: Optional[int] = None,
    fd: Optional[FiniteDifference] = None,
) -> float:
    """Ratio of smallest to largest singular value of the M x 2n Jacobian of I_1..I_M"""
    fd = fd or FiniteDifference(order=4)
    funcs = toda_integral_functions(s.n, M)
    jac = np.array([fd.gradient(f, s.z) for f in funcs])
    sv = np.linalg.svd(jac, compute_uv=False)
    return float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0


# ========== Calibration hooks ==========

def toda_calibration_hooks() -> CalibrationHooks:
    return CalibrationHooks(
        random_state=lambda rng, n: TodaState.random(rng, n).to_phase_point(),
        canonical_bivector=canonical_bivector,
        canonical_form=canonical_two_form,
        le_omega=toda_LEomega_field,
        closed_integrals=lambda z, M: toda_integrals_closed(TodaState.from_z(z.z), M),
    )
