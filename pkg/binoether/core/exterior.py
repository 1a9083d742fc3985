"""
Finite-dimensional exterior and Poisson calculus
Schouten brackets, Lie derivatives of 2-forms, flows, and the invariant ladder
extracted from a bivector / 2-form pair

Coordinates are block ordered z = (q_1..q_n, p_1..p_n). A 2-form is stored as the
antisymmetric matrix sigma with sigma(X, Y) = sigma_ab X^a Y^b, so dp_i ^ dq_i has
sigma[p_i, q_i] = +1. A bivector W gives {f, g} = W^ab d_a f d_b g.
"""

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from binoether.config import settings
from binoether.errors import (
    CalibrationError,
    DegeneracyError,
    DivergenceError,
    PreconditionError,
    StructureError,
)

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps
ArrayLike = Union[np.ndarray, Sequence[float]]


# ========== Domain types ==========

@dataclass(frozen=True)
class PhasePoint:
    """Point of the 2n-dimensional phase space"""
    z: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=float).reshape(-1)
        if z.size == 0 or z.size % 2:
            raise PreconditionError(f"Phase point needs an even, nonzero length, got {z.size}")
        if not np.all(np.isfinite(z)):
            raise PreconditionError("Phase point has non-finite entries")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @classmethod
    def from_qp(cls, q: ArrayLike, p: ArrayLike) -> "PhasePoint":
        return cls(np.concatenate([np.asarray(q, float), np.asarray(p, float)]))

    @property
    def n(self) -> int:
        return self.z.size // 2

    @property
    def q(self) -> np.ndarray:
        return self.z[: self.n]

    @property
    def p(self) -> np.ndarray:
        return self.z[self.n:]


def _coords(z: Union[PhasePoint, ArrayLike]) -> np.ndarray:
    if isinstance(z, PhasePoint):
        return z.z
    return np.asarray(z, dtype=float)


def antisymmetrize2(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    return 0.5 * (m - m.T)


_PERMUTATIONS_3 = [
    (perm, 1 if sum(1 for i, j in itertools.combinations(perm, 2) if i > j) % 2 == 0 else -1)
    for perm in itertools.permutations(range(3))
]


def antisymmetrize3(t: np.ndarray) -> np.ndarray:
    """Total antisymmetrization over the three indices of a rank-3 array"""
    t = np.asarray(t)
    return sum(sign * np.transpose(t, perm) for perm, sign in _PERMUTATIONS_3) / 6.0


@dataclass(frozen=True)
class VectorFieldSpec:
    """
    Vector field E(t, z) on phase space

    jacobian, when given, returns J[a, c] = d_c E^a analytically and is used in
    place of finite differences.
    """
    eval: Callable[[float, np.ndarray], np.ndarray]
    time_dependent: bool = False
    jacobian: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    name: str = "E"

    def __call__(self, t: float, z: Union[PhasePoint, ArrayLike]) -> np.ndarray:
        return np.asarray(self.eval(t, _coords(z)), dtype=float)


@dataclass(frozen=True)
class BivectorField:
    """Antisymmetric contravariant field W^ab(z)"""
    eval: Callable[[np.ndarray], np.ndarray]
    name: str = "W"

    def __call__(self, z: Union[PhasePoint, ArrayLike]) -> np.ndarray:
        return antisymmetrize2(self.eval(_coords(z)))


@dataclass(frozen=True)
class TwoFormField:
    """Antisymmetric covariant field sigma_ab(z)"""
    eval: Callable[[np.ndarray], np.ndarray]
    name: str = "sigma"

    def __call__(self, z: Union[PhasePoint, ArrayLike]) -> np.ndarray:
        return antisymmetrize2(self.eval(_coords(z)))


@dataclass(frozen=True)
class TrivectorField:
    """Totally antisymmetric field T^abc(z)"""
    eval: Callable[[np.ndarray], np.ndarray]
    name: str = "T"

    def __call__(self, z: Union[PhasePoint, ArrayLike]) -> np.ndarray:
        return antisymmetrize3(self.eval(_coords(z)))


@dataclass(frozen=True)
class FiniteDifference:
    """
    Central finite differences in phase space

    Default step h = scale * eps^(1/3) * max(1, |z|_inf) for the second-order
    stencil and eps^(1/5) for the fourth-order one; `step` overrides both.
    """
    order: int = 2
    scale: float = field(default_factory=lambda: settings.FD_STEP_SCALE)
    step: Optional[float] = None

    def __post_init__(self):
        if self.order not in (2, 4):
            raise PreconditionError(f"Unsupported stencil order {self.order}")

    def step_for(self, z: np.ndarray) -> float:
        if self.step is not None:
            return float(self.step)
        power = 1.0 / 3.0 if self.order == 2 else 1.0 / 5.0
        return self.scale * EPS ** power * max(1.0, float(np.max(np.abs(z))))

    def derivative(self, f: Callable[[np.ndarray], np.ndarray], z: ArrayLike) -> np.ndarray:
        """D[c, ...] = d_c f(z)"""
        z = np.asarray(z, dtype=float)
        h = self.step_for(z)
        rows = []
        for c in range(z.size):
            e = np.zeros_like(z)
            e[c] = h
            if self.order == 2:
                d = (np.asarray(f(z + e)) - np.asarray(f(z - e))) / (2.0 * h)
            else:
                d = (
                    -np.asarray(f(z + 2 * e)) + 8.0 * np.asarray(f(z + e))
                    - 8.0 * np.asarray(f(z - e)) + np.asarray(f(z - 2 * e))
                ) / (12.0 * h)
            rows.append(d)
        return np.stack(rows)

    def gradient(self, f: Callable[[np.ndarray], float], z: ArrayLike) -> np.ndarray:
        return self.derivative(lambda x: np.asarray(f(x), dtype=float), z)

    def jacobian(self, E: VectorFieldSpec, t: float, z: ArrayLike) -> np.ndarray:
        """J[a, c] = d_c E^a, analytic when E provides it"""
        if E.jacobian is not None:
            return np.asarray(E.jacobian(t, np.asarray(z, float)), dtype=float)
        return self.derivative(lambda x: E(t, x), z).T


DEFAULT_FD = FiniteDifference()


# ========== Standard fields ==========

def canonical_bivector(n: int) -> BivectorField:
    """W = sum_i d/dp_i ^ d/dq_i"""
    m = np.zeros((2 * n, 2 * n))
    for i in range(n):
        m[n + i, i] = 1.0
        m[i, n + i] = -1.0
    m.setflags(write=False)
    return BivectorField(lambda z: m, name="W_canonical")


def canonical_two_form(n: int) -> TwoFormField:
    """omega = sum_i dp_i ^ dq_i"""
    m = np.zeros((2 * n, 2 * n))
    for i in range(n):
        m[n + i, i] = 1.0
        m[i, n + i] = -1.0
    m.setflags(write=False)
    return TwoFormField(lambda z: m, name="omega_canonical")


def constant_vector_field(c: ArrayLike) -> VectorFieldSpec:
    c = np.asarray(c, dtype=float)
    return VectorFieldSpec(
        eval=lambda t, z: c.copy(),
        jacobian=lambda t, z: np.zeros((c.size, c.size)),
        name="constant",
    )


def hamiltonian_vector_field(
    h: Callable[[np.ndarray], float],
    W: BivectorField,
    fd: FiniteDifference = DEFAULT_FD,
) -> VectorFieldSpec:
    """X_h^b = d_a h W^ab, so that df/dt = {h, f} along X_h"""
    def _eval(t, z):
        return fd.gradient(h, z) @ W(z)
    return VectorFieldSpec(eval=_eval, name="hamiltonian")


def polynomial_vector_field(
    linear: np.ndarray,
    quadratic: Optional[np.ndarray] = None,
    cubic: Optional[np.ndarray] = None,
) -> VectorFieldSpec:
    """E^a = A_ai z_i + B_aij z_i z_j + C_aijk z_i z_j z_k with analytic Jacobian"""
    A = np.asarray(linear, dtype=float)
    dim = A.shape[0]
    B = np.zeros((dim, dim, dim)) if quadratic is None else np.asarray(quadratic, float)
    C = np.zeros((dim, dim, dim, dim)) if cubic is None else np.asarray(cubic, float)

    def _eval(t, z):
        return (
            A @ z
            + np.einsum("aij,i,j->a", B, z, z)
            + np.einsum("aijk,i,j,k->a", C, z, z, z)
        )

    def _jac(t, z):
        return (
            A
            + np.einsum("aij,j->ai", B, z) + np.einsum("aij,i->aj", B, z)
            + np.einsum("aijk,j,k->ai", C, z, z)
            + np.einsum("aijk,i,k->aj", C, z, z)
            + np.einsum("aijk,i,j->ak", C, z, z)
        )

    return VectorFieldSpec(eval=_eval, jacobian=_jac, name="polynomial")


# ========== Flows and brackets ==========

def flow(
    E: VectorFieldSpec,
    z0: Union[PhasePoint, ArrayLike],
    t0: float,
    a: float,
    steps: int,
) -> PhasePoint:
    """
    Integrate dz/da = E(t0, z) from a = 0 to a with classical RK4

    The explicit time argument of E stays frozen at t0.
    """
    if steps < 1:
        raise PreconditionError(f"steps must be >= 1, got {steps}")
    if not np.isfinite(a):
        raise PreconditionError("group parameter must be finite")
    z = _coords(z0).copy()
    h = a / steps
    for step in range(1, steps + 1):
        k1 = E(t0, z)
        k2 = E(t0, z + 0.5 * h * k1)
        k3 = E(t0, z + 0.5 * h * k2)
        k4 = E(t0, z + h * k3)
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(z)):
            raise DivergenceError(f"Flow of {E.name} diverged at step {step}", step=step)
    return PhasePoint(z)


def schouten_vb(
    E: VectorFieldSpec,
    W: BivectorField,
    t: float,
    z: Union[PhasePoint, ArrayLike],
    fd: FiniteDifference = DEFAULT_FD,
) -> np.ndarray:
    """[E, W]^ab = E^c d_c W^ab - W^cb d_c E^a - W^ac d_c E^b"""
    x = _coords(z)
    J = fd.jacobian(E, t, x)
    dW = fd.derivative(W, x)
    Wz = W(x)
    out = (
        np.einsum("c,cab->ab", E(t, x), dW)
        - np.einsum("cb,ac->ab", Wz, J)
        - np.einsum("ac,bc->ab", Wz, J)
    )
    return antisymmetrize2(out)


def bracket_field(
    E: VectorFieldSpec,
    W: BivectorField,
    t: float,
    fd: FiniteDifference = DEFAULT_FD,
) -> BivectorField:
    """The bivector field z -> [E, W](z), for nesting brackets"""
    return BivectorField(lambda z: schouten_vb(E, W, t, z, fd), name=f"[{E.name},{W.name}]")


def schouten_bb(
    A: BivectorField,
    B: BivectorField,
    z: Union[PhasePoint, ArrayLike],
    fd: FiniteDifference = DEFAULT_FD,
) -> np.ndarray:
    """
    Schouten-Nijenhuis bracket of two bivectors

    [A, B]^abc = sum over cyclic (abc) of A^da d_d B^bc + B^da d_d A^bc,
    fully antisymmetrized. [W, W] = 0 is the Jacobi identity of W.
    """
    x = _coords(z)
    dA = fd.derivative(A, x)
    dB = fd.derivative(B, x)
    T = np.einsum("da,dbc->abc", A(x), dB) + np.einsum("da,dbc->abc", B(x), dA)
    cyclic = T + np.transpose(T, (1, 2, 0)) + np.transpose(T, (2, 0, 1))
    return antisymmetrize3(cyclic)


def lie_derivative_two_form(
    E: VectorFieldSpec,
    sigma: TwoFormField,
    t: float,
    z: Union[PhasePoint, ArrayLike],
    fd: FiniteDifference = DEFAULT_FD,
) -> np.ndarray:
    """(L_E sigma)_ab = E^c d_c sigma_ab + sigma_cb d_a E^c + sigma_ac d_b E^c"""
    x = _coords(z)
    J = fd.jacobian(E, t, x)
    s = sigma(x)
    out = (
        np.einsum("c,cab->ab", E(t, x), fd.derivative(sigma, x))
        + np.einsum("cb,ca->ab", s, J)
        + np.einsum("ac,cb->ab", s, J)
    )
    return antisymmetrize2(out)


def pullback_difference(
    E: VectorFieldSpec,
    sigma: TwoFormField,
    t0: float,
    z: Union[PhasePoint, ArrayLike],
    a: float,
    steps: int = 8,
    fd: FiniteDifference = DEFAULT_FD,
) -> np.ndarray:
    """(g_a* sigma - sigma) / a, the flow-based oracle for L_E sigma"""
    x = _coords(z)
    D = fd.derivative(lambda y: flow(E, y, t0, a, steps).z, x)
    moved = flow(E, x, t0, a, steps).z
    pulled = np.einsum("ai,ij,bj->ab", D, sigma(moved), D)
    return antisymmetrize2((pulled - sigma(x)) / a)


def exterior_derivative_two_form(
    sigma: TwoFormField,
    z: Union[PhasePoint, ArrayLike],
    fd: FiniteDifference = DEFAULT_FD,
) -> np.ndarray:
    """(d sigma)_abc = d_a sigma_bc + d_b sigma_ca + d_c sigma_ab"""
    d = fd.derivative(sigma, _coords(z))
    return d + np.transpose(d, (2, 0, 1)) + np.transpose(d, (1, 2, 0))


def poisson_bracket(
    f: Callable[[np.ndarray], float],
    g: Callable[[np.ndarray], float],
    W: BivectorField,
    z: Union[PhasePoint, ArrayLike],
    fd: FiniteDifference = DEFAULT_FD,
) -> float:
    """{f, g} = grad f . W(z) . grad g"""
    x = _coords(z)
    return float(fd.gradient(f, x) @ W(x) @ fd.gradient(g, x))


# ========== Conventions ==========

class RecurrenceVariant(str, Enum):
    """Recurrence linking Y_k to I_m"""
    TODA = "toda"
    FIELD = "field"
    TODA_PRINTED = "toda_printed"


PAIRINGS: Dict[str, Callable[[int], float]] = {
    "uniform+": lambda k: 1.0,
    "uniform-": lambda k: -1.0,
    "alternating": lambda k: (-1.0) ** k,
    "alternating-shifted": lambda k: (-1.0) ** (k + 1),
}


@dataclass(frozen=True)
class Calibration:
    """
    Every sign/normalization choice of the Y -> I pipeline in one place

    inverse_sign kappa: W^ac sigma_cb = kappa delta^a_b for the inverted form, and
    the recursion operator is R = kappa W sigma (so that R(omega) = 1).
    pairing: per-order constants c_k in Y_k = c_k e_k(lambda).
    global_sign s: overall sign of the recurrence.
    """
    inverse_sign: int = -1
    global_sign: int = -1
    pairing: str = "uniform+"
    variant: RecurrenceVariant = RecurrenceVariant.TODA
    max_residual: float = 0.0
    states: int = 0
    n: int = 0

    def pairing_constant(self, k: int) -> float:
        return PAIRINGS[self.pairing](k)

    def to_dict(self) -> Dict[str, object]:
        return {
            "inverse_sign": self.inverse_sign,
            "global_sign": self.global_sign,
            "pairing": self.pairing,
            "variant": self.variant.value,
            "max_residual": self.max_residual,
            "states": self.states,
            "n": self.n,
        }


DEFAULT_CALIBRATION = Calibration()


@dataclass(frozen=True)
class InvariantLadder:
    """Y_1..Y_M and their recurrence image I_1..I_M under one calibration"""
    Y: np.ndarray
    I: np.ndarray
    calibration: Calibration

    @property
    def M(self) -> int:
        return int(self.Y.size)


def invert_bivector(
    W: BivectorField,
    z: Union[PhasePoint, ArrayLike],
    calibration: Calibration = DEFAULT_CALIBRATION,
    max_condition: float = 1e12,
) -> np.ndarray:
    """sigma with W^ac sigma_cb = kappa delta^a_b, kappa from the calibration"""
    m = W(z)
    cond = float(np.linalg.cond(m)) if m.size else float("inf")
    if not np.isfinite(cond) or cond > max_condition:
        raise DegeneracyError(f"Bivector is singular (condition number {cond:.3e})", cond)
    return antisymmetrize2(calibration.inverse_sign * np.linalg.inv(m))


def recursion_matrix(
    W: BivectorField,
    sigma: TwoFormField,
    z: Union[PhasePoint, ArrayLike],
    calibration: Calibration = DEFAULT_CALIBRATION,
) -> np.ndarray:
    x = _coords(z)
    return calibration.inverse_sign * (W(x) @ sigma(x))


def paired_spectrum(
    W: BivectorField,
    sigma: TwoFormField,
    z: Union[PhasePoint, ArrayLike],
    calibration: Calibration = DEFAULT_CALIBRATION,
    pair_tol: Optional[float] = None,
) -> Tuple[np.ndarray, float]:
    """
    Eigenvalues of R grouped into n coincident pairs

    Returns one representative per pair and the largest intra-pair gap; gaps
    above pair_tol times the spectral radius raise StructureError.
    """
    tol = settings.PAIR_TOL if pair_tol is None else pair_tol
    eig = np.linalg.eigvals(recursion_matrix(W, sigma, z, calibration))
    order = np.lexsort((np.round(eig.imag, 12), eig.real))
    eig = eig[order]
    radius = float(np.max(np.abs(eig))) if eig.size else 0.0
    first, second = eig[0::2], eig[1::2]
    gap = float(np.max(np.abs(first - second))) if first.size else 0.0
    if gap > tol * radius:
        raise StructureError(
            f"Recursion spectrum does not pair: gap {gap:.3e} vs radius {radius:.3e}"
        )
    lam = 0.5 * (first + second)
    if np.all(np.abs(lam.imag) <= tol * radius):
        lam = lam.real
    return lam, gap


def elementary_symmetric(values: ArrayLike, M: int) -> np.ndarray:
    """e_1..e_M of the given values (zero beyond their count)"""
    coeffs = np.poly(np.asarray(values))
    e = np.array([(-1) ** k * coeffs[k] for k in range(1, len(coeffs))])
    out = np.zeros(M, dtype=e.dtype if e.size else float)
    out[: min(M, e.size)] = e[:M]
    return np.real_if_close(out)


def contraction_invariants(
    W: BivectorField,
    sigma: TwoFormField,
    z: Union[PhasePoint, ArrayLike],
    calibration: Calibration = DEFAULT_CALIBRATION,
) -> np.ndarray:
    """
    e_1, e_2 from direct index contraction of W with sigma

    tr R = 2 e_1 and (tr R)^2 - 2 tr R^2 = 8 e_2 on a paired spectrum.
    """
    x = _coords(z)
    w, s = W(x), sigma(x)
    k = calibration.inverse_sign
    tr1 = k * np.einsum("ab,ba->", w, s)
    tr2 = np.einsum("ab,bc,cd,da->", w, s, w, s)
    return np.array([0.5 * tr1, (tr1 ** 2 - 2.0 * tr2) / 8.0])


def spectral_invariants(
    W: BivectorField,
    sigma: TwoFormField,
    z: Union[PhasePoint, ArrayLike],
    M: int,
    calibration: Calibration = DEFAULT_CALIBRATION,
    cross_check: bool = True,
    pair_tol: Optional[float] = None,
) -> np.ndarray:
    """Y_k = c_k e_k(lambda_1..lambda_n), k = 1..M"""
    n = _coords(z).size // 2
    if M < 1 or M > n:
        raise PreconditionError(f"Order M must satisfy 1 <= M <= n = {n}, got {M}")
    lam, _ = paired_spectrum(W, sigma, z, calibration, pair_tol)
    e = elementary_symmetric(lam, M)
    if cross_check:
        direct = contraction_invariants(W, sigma, z, calibration)[: min(M, 2)]
        scale = max(1.0, float(np.max(np.abs(direct))))
        if np.max(np.abs(direct - e[: direct.size])) > 1e-8 * scale:
            raise StructureError(
                f"Contraction cross-check failed: {direct} vs spectral {e[:direct.size]}"
            )
    c = np.array([calibration.pairing_constant(k) for k in range(1, M + 1)])
    return c * e


def newton_recurrence(
    Y: ArrayLike,
    variant: Union[RecurrenceVariant, str] = RecurrenceVariant.TODA,
    calibration: Calibration = DEFAULT_CALIBRATION,
) -> np.ndarray:
    """I_1..I_M from Y_1..Y_M"""
    variant = RecurrenceVariant(variant)
    Y = np.asarray(Y)
    M = Y.size
    s = calibration.global_sign
    I = np.zeros(M, dtype=np.result_type(Y, float))
    for m in range(1, M + 1):
        if variant is RecurrenceVariant.FIELD:
            acc = (-1) ** m * m * Y[m - 1]
            acc += sum((-1) ** k * I[m - k - 1] * Y[k - 1] for k in range(1, m))
        elif variant is RecurrenceVariant.TODA:
            acc = (-1) ** m * Y[m - 1]
            acc += sum((-1) ** k * (m - k) * I[m - k - 1] * Y[k - 1] for k in range(1, m)) / m
        else:
            acc = (-1) ** m * Y[m - 1]
            acc += sum((-1) ** k * I[m - k - 1] * Y[k - 1] for k in range(1, m)) / m
        I[m - 1] = s * acc
    return I


def invariant_ladder(
    W: BivectorField,
    sigma: TwoFormField,
    z: Union[PhasePoint, ArrayLike],
    M: int,
    calibration: Calibration = DEFAULT_CALIBRATION,
) -> InvariantLadder:
    Y = spectral_invariants(W, sigma, z, M, calibration)
    return InvariantLadder(Y=Y, I=newton_recurrence(Y, calibration.variant, calibration), calibration=calibration)


# ========== Calibration ==========

@dataclass(frozen=True)
class CalibrationHooks:
    """Model-side inputs for calibrate_conventions"""
    random_state: Callable[[np.random.Generator, int], PhasePoint]
    canonical_bivector: Callable[[int], BivectorField]
    canonical_form: Callable[[int], TwoFormField]
    le_omega: Callable[[int], TwoFormField]
    closed_integrals: Callable[[PhasePoint, int], np.ndarray]


def _global_sign_for(variant: RecurrenceVariant) -> int:
    """Sign s making I_1 = Y_1"""
    probe = newton_recurrence([1.0], variant, Calibration(global_sign=1, variant=variant))
    return 1 if probe[0] > 0 else -1


def calibrate_conventions(
    hooks: CalibrationHooks,
    n: Optional[int] = None,
    states: Optional[int] = None,
    seed: int = 0,
    variant: Union[RecurrenceVariant, str] = RecurrenceVariant.TODA,
    tol: Optional[float] = None,
) -> Calibration:
    """
    Fix the unique convention under which spectral_invariants -> newton_recurrence
    reproduces the closed-form integrals at random states

    Raises CalibrationError listing the residual of every candidate when zero or
    several candidates pass.
    """
    variant = RecurrenceVariant(variant)
    n = settings.CALIBRATION_N if n is None else n
    states = settings.CALIBRATION_STATES if states is None else states
    tol = settings.CALIBRATION_TOL if tol is None else tol
    rng = np.random.default_rng(seed)
    points = [hooks.random_state(rng, n) for _ in range(states)]
    M = min(n, 4)

    W = hooks.canonical_bivector(n)
    omega = hooks.canonical_form(n)
    kappas = [
        k for k in (1, -1)
        if np.allclose(invert_bivector(W, points[0], Calibration(inverse_sign=k)), omega(points[0]))
    ]
    if len(kappas) != 1:
        raise CalibrationError(f"Inverse-sign convention is not unique: {kappas}")
    kappa = kappas[0]
    s = _global_sign_for(variant)

    sigma = hooks.le_omega(n)
    residuals: Dict[str, float] = {}
    for pairing in PAIRINGS:
        candidate = Calibration(inverse_sign=kappa, global_sign=s, pairing=pairing, variant=variant)
        worst = 0.0
        for z in points:
            Y = spectral_invariants(W, sigma, z, M, candidate)
            I = newton_recurrence(Y, variant, candidate)
            closed = np.asarray(hooks.closed_integrals(z, M))
            rel = np.abs(I - closed) / np.maximum(1.0, np.abs(closed))
            worst = max(worst, float(np.max(rel)))
        residuals[pairing] = worst
        logger.debug(f"Calibration candidate {pairing}: max residual {worst:.3e}")

    passing = [name for name, r in residuals.items() if r <= tol]
    if len(passing) != 1:
        listing = ", ".join(f"{k}={v:.3e}" for k, v in residuals.items())
        raise CalibrationError(
            f"No unique convention for variant {variant.value} "
            f"({len(passing)} candidates pass): {listing}",
            residuals=residuals,
        )
    chosen = Calibration(
        inverse_sign=kappa,
        global_sign=s,
        pairing=passing[0],
        variant=variant,
        max_residual=residuals[passing[0]],
        states=states,
        n=n,
    )
    logger.info(f"✅ Calibrated conventions: {chosen.to_dict()}")
    return chosen
