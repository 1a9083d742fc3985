"""
Periodic-grid function-space toolkit
Spectral differentiation, quadrature, anchored antiderivatives, Gateaux derivatives,
functional gradients, field Poisson brackets and 2-forms on variations

Complex fields carry psi only; psi-bar is always conj(psi).
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft as sfft
from scipy.integrate import cumulative_trapezoid

from binoether.config import settings
from binoether.errors import (
    BoundaryError,
    CalibrationRequiredError,
    ConjugationSymmetryError,
    GradientConsistencyError,
    PreconditionError,
    ReportIOError,
    StructureError,
)

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps
IMAG_TOL = 1e-10
STRUCTURES = ("gardner", "nse")


# ========== Grid and fields ==========

@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid x_j = -L/2 + j L/N"""
    L: float = field(default_factory=lambda: settings.GRID_L)
    N: int = field(default_factory=lambda: settings.GRID_N)

    def __post_init__(self):
        if not self.L > 0:
            raise PreconditionError(f"Grid length must be positive, got {self.L}")
        if self.N < 16 or self.N & (self.N - 1):
            raise PreconditionError(f"Grid size must be a power of two >= 16, got {self.N}")

    @property
    def dx(self) -> float:
        return self.L / self.N

    @cached_property
    def x(self) -> np.ndarray:
        return -0.5 * self.L + self.dx * np.arange(self.N)

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers 2 pi m / L in FFT order"""
        return 2.0 * np.pi * sfft.fftfreq(self.N, d=self.dx)

    @property
    def nyquist(self) -> int:
        return self.N // 2

    def interior(self, fraction: float = 0.25) -> np.ndarray:
        """Mask of |x| <= fraction * L"""
        return np.abs(self.x) <= fraction * self.L + 1e-12

    def edge_band(self, edge: Optional[float] = None) -> np.ndarray:
        edge = settings.EDGE_FRACTION if edge is None else edge
        return np.abs(self.x) > edge * 0.5 * self.L

    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask in FFT order"""
        m = np.abs(sfft.fftfreq(self.N) * self.N)
        return m < self.N / 3.0


@dataclass(frozen=True, eq=False)
class GridField:
    """Samples of a real or complex function on a Grid"""
    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.shape != (self.grid.N,):
            raise PreconditionError(f"Field needs {self.grid.N} samples, got shape {s.shape}")
        s = s.astype(complex if np.iscomplexobj(s) else float)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.samples)

    @cached_property
    def hat(self) -> np.ndarray:
        return sfft.fft(self.samples)

    @property
    def kind(self) -> str:
        return "complex" if self.is_complex else "real"

    def like(self, samples: np.ndarray) -> "GridField":
        """Same grid and class, new samples"""
        return type(self)(self.grid, samples)

    def conj(self) -> "GridField":
        return self.like(np.conj(self.samples))

    def __add__(self, other: "GridField") -> "GridField":
        return self.like(self.samples + _samples(other))

    def __sub__(self, other: "GridField") -> "GridField":
        return self.like(self.samples - _samples(other))

    def __mul__(self, c: Union[float, complex]) -> "GridField":
        return self.like(self.samples * c)

    __rmul__ = __mul__


class RealField(GridField):
    def __post_init__(self):
        super().__post_init__()
        if self.is_complex:
            raise PreconditionError("RealField given complex samples")


class ComplexField(GridField):
    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))
        super().__post_init__()


class VariationField(GridField):
    """Tangent direction delta-u (real) or delta-psi (complex) at a base field"""

    def check_base(self, base: GridField) -> None:
        if self.grid != base.grid:
            raise PreconditionError("Variation grid does not match base field grid")
        if self.is_complex != base.is_complex:
            raise PreconditionError("Variation and base field differ in kind")


def _samples(f: Union[GridField, np.ndarray]) -> np.ndarray:
    return f.samples if isinstance(f, GridField) else np.asarray(f)


def make_field(grid: Grid, samples: np.ndarray) -> GridField:
    samples = np.asarray(samples)
    return ComplexField(grid, samples) if np.iscomplexobj(samples) else RealField(grid, samples)


# ========== Spectral calculus ==========

def derivative_array(grid: Grid, f: np.ndarray, order: int = 1) -> np.ndarray:
    """Spectral d^order/dx^order of raw samples"""
    if order < 1:
        raise PreconditionError(f"Derivative order must be >= 1, got {order}")
    mult = (1j * grid.k) ** order
    if order % 2:
        mult[grid.nyquist] = 0.0
    out = sfft.ifft(mult * sfft.fft(f))
    return out if np.iscomplexobj(f) else out.real


def spectral_derivative(f: GridField, order: int = 1) -> GridField:
    return f.like(derivative_array(f.grid, f.samples, order))


def derivatives(grid: Grid, f: np.ndarray, count: int) -> List[np.ndarray]:
    """[f, f_x, ..., f^(count)]"""
    fh = sfft.fft(f)
    out = [np.asarray(f)]
    for order in range(1, count + 1):
        mult = (1j * grid.k) ** order
        if order % 2:
            mult[grid.nyquist] = 0.0
        d = sfft.ifft(mult * fh)
        out.append(d if np.iscomplexobj(f) else d.real)
    return out


def krasny_filter(f: np.ndarray, floor: float = 1e-13) -> np.ndarray:
    """Zero Fourier modes below floor * max mode amplitude"""
    fh = sfft.fft(f)
    peak = np.max(np.abs(fh)) if fh.size else 0.0
    fh[np.abs(fh) < floor * peak] = 0.0
    out = sfft.ifft(fh)
    return out if np.iscomplexobj(f) else out.real


def _zero_mean_antiderivative(grid: Grid, f: np.ndarray) -> np.ndarray:
    k = grid.k.copy()
    k[0] = 1.0
    fh = sfft.fft(f) / (1j * k)
    fh[0] = 0.0
    fh[grid.nyquist] = 0.0
    out = sfft.ifft(fh)
    return out if np.iscomplexobj(f) else out.real


def antiderivative_array(
    grid: Grid,
    f: np.ndarray,
    anchoring: str = "left",
    method: str = "spectral",
) -> np.ndarray:
    """
    g with g_x = f

    zero-mean: periodic g with zero mean, requires mean(f) = 0.
    left: g(-L/2) = 0. The spectral method adds the exact linear ramp of the mean
    to the periodic part; trapezoid is the cumulative trapezoid rule.
    """
    f = np.asarray(f)
    mean = np.mean(f)
    if anchoring == "zero-mean":
        if abs(mean) > 1e-10 * max(1.0, float(np.max(np.abs(f))) if f.size else 1.0):
            raise PreconditionError(f"Zero-mean antiderivative of a field with mean {abs(mean):.3e}")
        return _zero_mean_antiderivative(grid, f)
    if anchoring != "left":
        raise PreconditionError(f"Unknown anchoring '{anchoring}'")
    if method == "trapezoid":
        return cumulative_trapezoid(f, dx=grid.dx, initial=0.0)
    if method != "spectral":
        raise PreconditionError(f"Unknown antiderivative method '{method}'")
    periodic = _zero_mean_antiderivative(grid, f - mean)
    return periodic - periodic[0] + mean * (grid.x - grid.x[0])


def antiderivative(f: GridField, anchoring: str = "left", method: str = "spectral") -> GridField:
    return f.like(antiderivative_array(f.grid, f.samples, anchoring, method))


def quadrature_array(grid: Grid, f: np.ndarray, allow_complex: bool = False) -> Union[float, complex]:
    """Rectangle rule on the periodic box"""
    total = grid.dx * np.sum(f)
    if not np.iscomplexobj(total) or allow_complex:
        return total if allow_complex else float(total)
    if abs(total.imag) > IMAG_TOL * max(1.0, abs(total.real)):
        raise ConjugationSymmetryError(
            f"Density integrates to {total.real:.6e} + {total.imag:.3e}i"
        )
    return float(total.real)


def quadrature(f: GridField, allow_complex: bool = False) -> Union[float, complex]:
    return quadrature_array(f.grid, f.samples, allow_complex)


def parseval_sum(f: GridField) -> float:
    """Fourier-side value of quadrature(|f|^2)"""
    return float(f.grid.L / f.grid.N ** 2 * np.sum(np.abs(f.hat) ** 2))


def tail_fraction(f: Union[GridField, np.ndarray], grid: Optional[Grid] = None, edge: Optional[float] = None) -> float:
    grid = f.grid if isinstance(f, GridField) else grid
    a = np.abs(_samples(f))
    total = np.sum(a)
    if total == 0:
        return 0.0
    return float(np.sum(a[grid.edge_band(edge)]) / total)


def check_support(
    f: Union[GridField, np.ndarray],
    grid: Optional[Grid] = None,
    tol: Optional[float] = None,
    edge: Optional[float] = None,
) -> float:
    """Raise BoundaryError when too much of |f| sits in the edge band"""
    tol = settings.TAIL_TOL if tol is None else tol
    frac = tail_fraction(f, grid, edge)
    if frac > tol:
        raise BoundaryError(f"Field has {frac:.3e} of its mass near the box edges (limit {tol:.1e})", frac)
    return frac


# ========== Directional derivatives and gradients ==========

def gateaux(
    F: Callable[[GridField], Union[GridField, float]],
    u: GridField,
    delta: GridField,
    h: Optional[float] = None,
    scale: Optional[float] = None,
) -> Union[GridField, float]:
    """(F(u + h delta) - F(u - h delta)) / 2h"""
    if h is None:
        scale = settings.FD_STEP_SCALE if scale is None else scale
        mag = max(1.0, float(np.max(np.abs(u.samples))))
        dmag = max(1.0, float(np.max(np.abs(_samples(delta)))))
        h = scale * EPS ** (1.0 / 3.0) * mag / dmag
    d = _samples(delta)
    plus = F(u.like(u.samples + h * d))
    minus = F(u.like(u.samples - h * d))
    if isinstance(plus, GridField):
        return plus.like((plus.samples - minus.samples) / (2.0 * h))
    return (plus - minus) / (2.0 * h)


@dataclass(frozen=True)
class Functional:
    """
    Map field -> real

    el_gradient, when present, evaluates the Euler-Lagrange gradient of a density
    functional and is used as an independent cross-check.
    """
    eval: Callable[[GridField], float]
    name: str = "F"
    el_gradient: Optional[Callable[[GridField], GridField]] = None

    def __call__(self, u: GridField) -> float:
        return self.eval(u)


def density_functional(
    name: str,
    order: int,
    density: Callable[[Sequence[np.ndarray]], np.ndarray],
    partials: Optional[Callable[[Sequence[np.ndarray]], Sequence[np.ndarray]]] = None,
) -> Functional:
    """
    F = integral of density(u, u_x, ..., u^(order)) for real fields

    partials returns df/du^(k), k = 0..order, enabling the Euler-Lagrange route.
    """
    def _eval(u: GridField) -> float:
        return quadrature_array(u.grid, density(derivatives(u.grid, u.samples, order)))

    el = None
    if partials is not None:
        def el(u: GridField) -> GridField:
            parts = partials(derivatives(u.grid, u.samples, order))
            out = np.array(parts[0], dtype=float)
            for k in range(1, len(parts)):
                out = out + (-1) ** k * derivative_array(u.grid, np.asarray(parts[k], float), k)
            return u.like(out)

    return Functional(eval=_eval, name=name, el_gradient=el)


def linear_functional(weight: GridField, name: str = "probe") -> Functional:
    """F(u) = integral of weight * u, real part for complex fields"""
    w = weight.samples
    return Functional(
        eval=lambda u: float(np.real(quadrature_array(u.grid, w * u.samples, allow_complex=True))),
        name=name,
        el_gradient=(lambda u: u.like(np.real(w).astype(float))) if not weight.is_complex else None,
    )


def _fd_gradient(F: Functional, u: GridField, h: float) -> np.ndarray:
    base = np.array(u.samples)
    grad = np.zeros(u.grid.N, dtype=base.dtype)
    for j in range(u.grid.N):
        e = np.zeros_like(base)
        e[j] = h
        grad[j] = (F(u.like(base + e)) - F(u.like(base - e))) / (2.0 * h)
    return grad


def functional_gradient(
    F: Functional,
    u: GridField,
    tol: float = 1e-4,
    h: Optional[float] = None,
) -> GridField:
    """
    Grid representation of the variational derivative

    Real fields: dF/du_j / dx. Complex fields return delta F / delta psi-bar
    = (d/dRe + i d/dIm) / (2 dx); delta F / delta psi is its conjugate for real F.
    Functionals carrying an Euler-Lagrange gradient are cross-checked against it.
    """
    grid = u.grid
    if h is None:
        h = settings.FD_STEP_SCALE * EPS ** (1.0 / 3.0) * max(1.0, float(np.max(np.abs(u.samples))))
    if u.is_complex:
        re = np.real(u.samples)
        im = np.imag(u.samples)
        g_re = _fd_gradient(Functional(lambda v: F(u.like(v.samples + 1j * im))), RealField(grid, re), h)
        g_im = _fd_gradient(Functional(lambda v: F(u.like(re + 1j * v.samples))), RealField(grid, im), h)
        return u.like(0.5 * (g_re + 1j * g_im) / grid.dx)

    grad = u.like(_fd_gradient(F, u, h) / grid.dx)
    if F.el_gradient is not None:
        el = F.el_gradient(u).samples
        scale = max(1.0, float(np.max(np.abs(el))))
        diff = float(np.max(np.abs(grad.samples - el)))
        if diff > tol * scale:
            raise GradientConsistencyError(
                f"Gradient of {F.name}: finite-difference and Euler-Lagrange routes differ by {diff:.3e}"
            )
    return grad


# ========== Field Poisson brackets ==========

def bracket_from_gradients(
    dF: GridField,
    dG: GridField,
    structure: str,
    scale: Optional[float],
) -> float:
    """
    gardner: s * integral dF . d/dx dG, gradients w.r.t. u.
    nse: s * i * integral (dF/dpsi dG/dpsibar - dF/dpsibar dG/dpsi), gradients
    given as delta / delta psi-bar.
    """
    if scale is None:
        raise CalibrationRequiredError(f"Bracket structure '{structure}' is not calibrated")
    grid = dF.grid
    if structure == "gardner":
        density = dF.samples * derivative_array(grid, dG.samples, 1)
        return scale * quadrature_array(grid, density)
    if structure == "nse":
        f_bar, g_bar = dF.samples, dG.samples
        density = 1j * (np.conj(f_bar) * g_bar - f_bar * np.conj(g_bar))
        return scale * quadrature_array(grid, density)
    raise PreconditionError(f"Unknown bracket structure '{structure}', expected one of {STRUCTURES}")


def field_poisson_bracket(
    F: Functional,
    G: Functional,
    u: GridField,
    structure: str,
    scale: Optional[float],
) -> float:
    if scale is None:
        raise CalibrationRequiredError(f"Bracket structure '{structure}' is not calibrated")
    return bracket_from_gradients(functional_gradient(F, u), functional_gradient(G, u), structure, scale)


def hamiltonian_flow(dH: GridField, structure: str, scale: float) -> GridField:
    """
    Pointwise {H, u(x_j)} from the gradient of H

    gardner: -s d/dx dH. nse: -s i dH/dpsi-bar.
    """
    if structure == "gardner":
        return dH.like(-scale * derivative_array(dH.grid, dH.samples, 1))
    if structure == "nse":
        return dH.like(-scale * 1j * dH.samples)
    raise PreconditionError(f"Unknown bracket structure '{structure}', expected one of {STRUCTURES}")


# ========== Two-forms on variations ==========

def wedge(a1: np.ndarray, b1: np.ndarray, a2: np.ndarray, b2: np.ndarray) -> np.ndarray:
    """Density of alpha ^ beta on (delta_1, delta_2), given alpha_i = a_i, beta_i = b_i"""
    return a1 * b2 - a2 * b1


def _left(grid: Grid, f: np.ndarray) -> np.ndarray:
    return antiderivative_array(grid, f, "left")


def _canonical_kdv(base: GridField, d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    g = base.grid
    return wedge(d1, _left(g, d1), d2, _left(g, d2))


def _canonical_nse(base: GridField, d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    return 1j * wedge(d1, np.conj(d1), d2, np.conj(d2))


def _le_kdv(base: GridField, d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    g = base.grid
    u = base.samples
    d1x, d2x = derivative_array(g, d1), derivative_array(g, d2)
    return wedge(d1, d1x, d2, d2x) + (2.0 / 3.0) * u * wedge(d1, _left(g, d1), d2, _left(g, d2))


def _le_mkdv(base: GridField, d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    g = base.grid
    u = base.samples
    d1x, d2x = derivative_array(g, d1), derivative_array(g, d2)
    w1, w2 = _left(g, 2.0 * u * d1), _left(g, 2.0 * u * d2)
    return wedge(d1, d1x, d2, d2x) - 2.0 * u * wedge(d1, w1, d2, w2)


def _le_nse(base: GridField, d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    g = base.grid
    psi = base.samples
    phi1 = _left(g, 2.0 * np.real(np.conj(psi) * d1))
    phi2 = _left(g, 2.0 * np.real(np.conj(psi) * d2))
    d1x, d2x = derivative_array(g, d1), derivative_array(g, d2)
    return (
        wedge(d1x, np.conj(d1), d2x, np.conj(d2))
        + psi * wedge(phi1, np.conj(d1), phi2, np.conj(d2))
        + np.conj(psi) * wedge(phi1, d1, phi2, d2)
    )


TWO_FORMS = {
    "canonical-kdv": _canonical_kdv,
    "canonical-mkdv": _canonical_kdv,
    "canonical-nse": _canonical_nse,
    "le-kdv": _le_kdv,
    "le-mkdv": _le_mkdv,
    "le-nse": _le_nse,
}


def two_form_eval(
    kind: str,
    base: GridField,
    d1: GridField,
    d2: GridField,
    tol: float = 1e-10,
) -> float:
    """Value of the named 2-form on the pair of variations"""
    if kind not in TWO_FORMS:
        raise PreconditionError(f"Unknown 2-form '{kind}', expected one of {sorted(TWO_FORMS)}")
    for d in (d1, d2):
        if d.grid != base.grid:
            raise PreconditionError("Variation grid does not match base field grid")
    form = TWO_FORMS[kind]
    a, b = _samples(d1), _samples(d2)
    forward = quadrature_array(base.grid, form(base, a, b))
    backward = quadrature_array(base.grid, form(base, b, a))
    if abs(forward + backward) > tol * max(1.0, abs(forward)):
        raise StructureError(f"2-form '{kind}' is not antisymmetric: {forward:.6e} vs {backward:.6e}")
    return forward


def lie_derivative_constant_form(
    kind: str,
    E: Callable[[GridField], GridField],
    base: GridField,
    d1: GridField,
    d2: GridField,
    h: Optional[float] = None,
) -> float:
    """
    (L_E omega)(d1, d2) = omega(DE d1, d2) + omega(d1, DE d2) for a constant omega,
    DE d the Gateaux derivative of E at base
    """
    e1 = gateaux(E, base, d1, h)
    e2 = gateaux(E, base, d2, h)
    return two_form_eval(kind, base, e1, d2) + two_form_eval(kind, base, d1, e2)


def random_variation(
    grid: Grid,
    rng: np.random.Generator,
    complex_valued: bool = False,
    width: float = 2.0,
    modes: int = 6,
    center: float = 0.0,
) -> VariationField:
    """Zero-mean, Gaussian-windowed, band-limited variation"""
    x = grid.x - center
    window = np.exp(-(x / width) ** 2)
    kmax = modes * 2.0 * np.pi / grid.L * 4.0
    ks = rng.uniform(-kmax, kmax, modes)
    phases = rng.uniform(0.0, 2.0 * np.pi, modes)
    amps = rng.normal(size=modes)
    wave = np.sum(amps[:, None] * np.cos(ks[:, None] * x[None, :] + phases[:, None]), axis=0)
    d = window * wave
    if complex_valued:
        amps_i = rng.normal(size=modes)
        d = d + 1j * window * np.sum(amps_i[:, None] * np.sin(ks[:, None] * x[None, :] + phases[:, None]), axis=0)
    # remove the mean with the window shape so the variation stays localized
    d = d - np.sum(d) / np.sum(window) * window
    return VariationField(grid, d)


# ========== Snapshot I/O ==========

def write_snapshot(path: Union[str, Path], f: GridField, t: float = 0.0) -> Path:
    """Header `# L=.. N=.. kind=.. t=..`, then `x value` or `x re im` rows"""
    path = Path(path)
    lines = [f"# L={float(f.grid.L)!r} N={f.grid.N} kind={f.kind} t={float(t)!r}"]
    for xj, v in zip(f.grid.x, f.samples):
        if f.is_complex:
            lines.append(f"{xj:.17g} {v.real:.17g} {v.imag:.17g}")
        else:
            lines.append(f"{xj:.17g} {v:.17g}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="ascii")
    except OSError as e:
        raise ReportIOError(f"Failed to write snapshot {path}: {e}") from e
    return path


def read_snapshot(path: Union[str, Path]) -> Tuple[GridField, float]:
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except OSError as e:
        raise PreconditionError(f"Cannot read snapshot {path}: {e}") from e
    rows = [r for r in text.splitlines() if r.strip()]
    if not rows or not rows[0].startswith("#"):
        raise PreconditionError(f"Snapshot {path} has no header line")
    header = dict(item.split("=", 1) for item in rows[0][1:].split())
    try:
        grid = Grid(L=float(header["L"]), N=int(header["N"]))
        kind = header["kind"]
        t = float(header.get("t", "0"))
    except (KeyError, ValueError) as e:
        raise PreconditionError(f"Malformed snapshot header in {path}: {rows[0]}") from e
    data = np.array([[float(v) for v in r.split()] for r in rows[1:]])
    if data.shape[0] != grid.N:
        raise PreconditionError(f"Snapshot {path} has {data.shape[0]} rows, header says {grid.N}")
    if kind == "complex":
        return ComplexField(grid, data[:, 1] + 1j * data[:, 2]), t
    if kind == "real":
        return RealField(grid, data[:, 1]), t
    raise PreconditionError(f"Unknown snapshot kind '{kind}' in {path}")
