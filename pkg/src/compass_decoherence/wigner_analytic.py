"""Closed-form Wigner functions of the compass family, initial and thermally evolved.

Values are reported in the *normalized-dxdy* convention: the quasi-probability
density over the (x, y) quadrature plane, integrating to one, with the complex
phase-space coordinate beta = (x + i y) / sqrt(2).  In this convention the
vacuum peaks at 1/pi and the thermal state is

    W_th(x, y) = exp(-(x^2 + y^2) / (2 n_bar + 1)) / (pi (2 n_bar + 1)).

Each ordered component pair (i, j) contributes

    G_ij / den * exp(phi_ij(eta)) * sum_m c_m(E) H_{m,q}(i P_j, i a_i) H_{m,q}(-i Q_i, -i a_j^*)

where P_j, Q_i are linear in eta and c_m collects the factorial weights of the
photon-addition sum.  The kernel quantities (T, T_bar, k1, k2, k3, E, A) are
combined algebraically so that nothing diverges as tau -> 0.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .errors import ConfigurationError, CoverageError, DomainError, NumericalInstabilityError
from .special_functions import hermite_coefficient_matrix, log_factorial
from .states import CompassParams, ReservoirParams, component_amplitudes, normalization

CONVENTION_TAG = "normalized-dxdy"
IMAG_RESIDUE_TOL = 1e-9
_CHUNK = 32768


@dataclass(frozen=True)
class PhasePoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"phase point must be finite, got ({self.x}, {self.y})")

    @property
    def beta(self) -> complex:
        return complex(self.x, self.y) / math.sqrt(2.0)


@dataclass(frozen=True)
class GridSpec:
    """Square lattice [-half_width, half_width]^2 with ``n`` points per axis."""

    half_width: float
    n: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ConfigurationError(f"grid half-width must be > 0, got {self.half_width}")
        if self.n < 3 or self.n % 2 == 0:
            raise ConfigurationError(f"grid point count must be odd and >= 3, got {self.n}")

    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.n)


@dataclass
class WignerGrid:
    """Sampled Wigner function; ``values[iy, ix]`` is W(xs[ix], ys[iy])."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int
    values: np.ndarray
    convention_tag: str = field(default=CONVENTION_TAG)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.ny, self.nx):
            raise ConfigurationError(
                f"values shape {self.values.shape} does not match (ny, nx) = ({self.ny}, {self.nx})")
        if not np.all(np.isfinite(self.values)):
            raise NumericalInstabilityError("grid contains non-finite values")

    @classmethod
    def from_axes(cls, xs: np.ndarray, ys: np.ndarray, values: np.ndarray) -> "WignerGrid":
        return cls(float(xs[0]), float(xs[-1]), float(ys[0]), float(ys[-1]), len(xs), len(ys), values)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xs, self.ys)

    def integral(self) -> float:
        return float(simpson(simpson(self.values, x=self.xs, axis=1), x=self.ys))


@dataclass(frozen=True)
class EvolvedKernelParams:
    """Time-dependent constants of the thermal propagator (unit decay rate)."""

    tau: float
    n_bar: float
    decay: float  # e^{-tau}
    T: float
    T_bar: float
    k3: float
    E: float

    @property
    def den(self) -> float:
        """T_bar + e^{-2 tau}; equals T_bar (2 + k3) / 2."""
        return self.T_bar + self.decay ** 2

    def k1(self, eta):
        return 2 * self.decay * eta / self.T_bar

    def k2(self, eta):
        return 2 * self.decay * np.conj(eta) / self.T_bar


def kernel_params(tau: float, n_bar: float) -> EvolvedKernelParams:
    if tau < 0 or not math.isfinite(tau):
        raise DomainError(f"tau must be finite and >= 0, got {tau}")
    decay = math.exp(-tau)
    T = -math.expm1(-2 * tau)
    T_bar = (1 + 2 * n_bar) * T
    k3 = math.inf if T_bar == 0 else 2 * decay ** 2 / T_bar
    E = 2 * T_bar / (T_bar + decay ** 2)
    return EvolvedKernelParams(tau, n_bar, decay, T, T_bar, k3, E)


def series_coefficients(p: int, E: float) -> np.ndarray:
    """c_m = (p!)^2/(m!)^2 * sum_{n+n'=p-m} (-1)^n E^n' / (n! n'!),  m = 0..p."""
    out = np.empty(p + 1)
    for m in range(p + 1):
        r = p - m
        terms = []
        for n in range(r + 1):
            n2 = r - n
            if E == 0 and n2 > 0:
                continue
            log_t = 2 * log_factorial(p) - 2 * log_factorial(m) - log_factorial(n) - log_factorial(n2)
            if n2:
                log_t += n2 * math.log(E)
            terms.append((-1) ** n * math.exp(log_t))
        out[m] = math.fsum(terms)
    return out


@lru_cache(maxsize=64)
def _hermite_tables(params: CompassParams):
    """Coefficient matrices for the two Hermite factors of every component."""
    alphas = component_amplitudes(params)
    left = [hermite_coefficient_matrix(params.p, params.q, 1j * a) for a in alphas]
    right = [hermite_coefficient_matrix(params.p, params.q, -1j * np.conj(a)) for a in alphas]
    for C in left + right:
        C.setflags(write=False)
    return left, right


def _powers(z: np.ndarray, degree: int) -> np.ndarray:
    out = np.empty(z.shape + (degree + 1,), dtype=complex)
    out[..., 0] = 1.0
    for a in range(1, degree + 1):
        out[..., a] = out[..., a - 1] * z
    return out


def _evaluate_chunk(params: CompassParams, kp: EvolvedKernelParams | None, eta: np.ndarray) -> np.ndarray:
    """Sum over the 16 component pairs at complex points ``eta`` (paper-unit kernel)."""
    alphas = component_amplitudes(params)
    left, right = _hermite_tables(params)
    p = params.p
    if kp is None:
        decay, T_bar, den, coeffs = 1.0, 0.0, 1.0, series_coefficients(p, 0.0)
    else:
        decay, T_bar, den, coeffs = kp.decay, kp.T_bar, kp.den, series_coefficients(p, kp.E)
    eta_c = np.conj(eta)
    abs2 = (eta * eta_c).real
    # Hermite first arguments: i P_j and -i Q_i (at tau=0 these are i gamma_j^*, -i gamma_i)
    P = [(2 * decay * eta_c + np.conj(a) * (T_bar - decay ** 2)) / den for a in alphas]
    Q = [(2 * decay * eta + a * (T_bar - decay ** 2)) / den for a in alphas]
    VP = [_powers(1j * Pj, p) for Pj in P]
    VQ = [_powers(-1j * Qi, p) for Qi in Q]

    total = np.zeros(eta.shape, dtype=complex)
    magnitude = np.zeros(eta.shape)
    for i, ai in enumerate(alphas):
        for j, aj in enumerate(alphas):
            ai_aj = ai * np.conj(aj)
            phase = 2 * (decay * eta * np.conj(aj) + decay * eta_c * ai + ai_aj * T_bar - abs2) / den - ai_aj
            log_g = -0.5 * (abs(ai) ** 2 + abs(aj) ** 2)
            Hj = VP[j] @ left[i].T
            Hi = VQ[i] @ right[j].T
            series = (Hj * Hi) @ coeffs
            term = np.exp(phase + log_g) * series / den
            total += term
            magnitude += np.abs(term)
    if not np.all(np.isfinite(total)):
        raise NumericalInstabilityError("non-finite Wigner series value (overflow)")
    bad = np.abs(total.imag) > IMAG_RESIDUE_TOL * magnitude + 1e-300
    if np.any(bad):
        k = int(np.argmax(np.abs(total.imag) / (magnitude + 1e-300)))
        raise NumericalInstabilityError(
            f"imaginary residue {total.imag.flat[k]:.3e} against term scale {magnitude.flat[k]:.3e}")
    return total.real


def _evaluate(params: CompassParams, kp: EvolvedKernelParams | None, x, y, threads: int = 1) -> np.ndarray:
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    eta = ((x + 1j * y) / math.sqrt(2.0)).ravel()
    chunks = [eta[k:k + _CHUNK] for k in range(0, eta.size, _CHUNK)] or [eta]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: _evaluate_chunk(params, kp, c), chunks))
    else:
        parts = [_evaluate_chunk(params, kp, c) for c in chunks]
    raw = np.concatenate(parts).reshape(x.shape)
    return raw / (math.pi * normalization(params))


def initial_values(params: CompassParams, x, y, threads: int = 1) -> np.ndarray:
    """W at tau = 0 on arrays of quadrature coordinates."""
    return _evaluate(params, None, x, y, threads)


def evolved_values(params: CompassParams, reservoir: ReservoirParams, tau: float, x, y,
                   threads: int = 1) -> np.ndarray:
    """W after dimensionless time ``tau`` in the thermal bath, on arrays."""
    kp = kernel_params(tau, reservoir.n_bar)
    if tau == 0:
        return initial_values(params, x, y, threads)
    return _evaluate(params, kp, x, y, threads)


def wigner_initial(params: CompassParams, point: PhasePoint) -> float:
    return float(initial_values(params, point.x, point.y))


def wigner_evolved(params: CompassParams, reservoir: ReservoirParams, tau: float, point: PhasePoint) -> float:
    return float(evolved_values(params, reservoir, tau, point.x, point.y))


def thermal_values(n_bar: float, x, y) -> np.ndarray:
    s = 2 * n_bar + 1
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.exp(-(x ** 2 + y ** 2) / s) / (math.pi * s)


def wigner_thermal(n_bar: float, point: PhasePoint) -> float:
    return float(thermal_values(n_bar, point.x, point.y))


def wigner_grid(params: CompassParams, reservoir: ReservoirParams, tau: float,
                spec: GridSpec | None = None, *, xs=None, ys=None, threads: int = 1) -> WignerGrid:
    """Sample W on a lattice given either a square ``spec`` or explicit axes."""
    if spec is not None:
        xs = ys = spec.axis()
    if xs is None or ys is None:
        raise ConfigurationError("wigner_grid needs a GridSpec or both axes")
    X, Y = np.meshgrid(xs, ys)
    return WignerGrid.from_axes(np.asarray(xs), np.asarray(ys),
                                evolved_values(params, reservoir, tau, X, Y, threads))


# -- derivatives ---------------------------------------------------------------

DEFAULT_STEP = 1e-3

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]


def richardson_gradient(f: Field, x, y, h: float = DEFAULT_STEP) -> tuple[np.ndarray, np.ndarray]:
    def central(step):
        gx = (f(x + step, y) - f(x - step, y)) / (2 * step)
        gy = (f(x, y + step) - f(x, y - step)) / (2 * step)
        return gx, gy

    gx1, gy1 = central(h)
    gx2, gy2 = central(h / 2)
    return (4 * gx2 - gx1) / 3, (4 * gy2 - gy1) / 3


def richardson_hessian(f: Field, x, y, h: float = DEFAULT_STEP) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(f_xx, f_yy, f_xy) by Richardson-extrapolated central differences."""
    f0 = f(x, y)

    def second(step):
        fxx = (f(x + step, y) - 2 * f0 + f(x - step, y)) / step ** 2
        fyy = (f(x, y + step) - 2 * f0 + f(x, y - step)) / step ** 2
        fxy = (f(x + step, y + step) - f(x + step, y - step)
               - f(x - step, y + step) + f(x - step, y - step)) / (4 * step ** 2)
        return fxx, fyy, fxy

    a = second(h)
    b = second(h / 2)
    return tuple((4 * bb - aa) / 3 for aa, bb in zip(a, b))


def richardson_laplacian(f: Field, x, y, h: float = DEFAULT_STEP) -> np.ndarray:
    fxx, fyy, _ = richardson_hessian(f, x, y, h)
    return fxx + fyy


def state_field(params: CompassParams, reservoir: ReservoirParams, tau: float) -> Field:
    """W(x, y) at fixed tau as a vectorized callable."""
    kernel_params(tau, reservoir.n_bar)  # validates tau
    return lambda x, y: evolved_values(params, reservoir, tau, x, y)


def wigner_derivatives(params: CompassParams, reservoir: ReservoirParams, tau: float,
                       point: PhasePoint, which: str = "gradient", h: float = DEFAULT_STEP):
    f = state_field(params, reservoir, tau)
    x = np.array([point.x])
    y = np.array([point.y])
    if which == "gradient":
        gx, gy = richardson_gradient(f, x, y, h)
        return float(gx[0]), float(gy[0])
    if which == "laplacian":
        return float(richardson_laplacian(f, x, y, h)[0])
    raise ConfigurationError(f"which must be 'gradient' or 'laplacian', got {which!r}")


# -- independent propagator quadrature -----------------------------------------

NORMALIZATION_TOL = 5e-4


def _trapezoid_weights(axis: np.ndarray) -> np.ndarray:
    w = np.full(len(axis), axis[1] - axis[0])
    w[0] = w[-1] = 0.5 * w[0]
    return w


def propagate_convolution(initial: WignerGrid, reservoir: ReservoirParams, tau: float,
                          xs_out=None, ys_out=None) -> WignerGrid:
    """Apply the Gaussian thermal propagator to a sampled Wigner function.

    W(x, y; tau) = 1/(pi T_bar) * integral W0(x', y')
                   exp(-[(x - e x')^2 + (y - e y')^2] / T_bar) dx' dy',   e = exp(-tau)

    evaluated by separable trapezoid quadrature over the input lattice.
    """
    if not tau > 0:
        raise DomainError("propagate_convolution needs tau > 0 (the kernel is a delta at tau = 0)")
    mass = initial.integral()
    if abs(mass - 1) > NORMALIZATION_TOL:
        raise CoverageError(f"input grid integrates to {mass:.6f}, not 1 +- {NORMALIZATION_TOL}")
    kp = kernel_params(tau, reservoir.n_bar)
    xs, ys = initial.xs, initial.ys
    width = math.sqrt(kp.T_bar / 2) / kp.decay
    if width < max(initial.dx, initial.dy):
        raise ConfigurationError(
            f"propagator width {width:.3g} is below the grid spacing; refine the grid or increase tau")
    xs_out = xs if xs_out is None else np.asarray(xs_out, dtype=float)
    ys_out = ys if ys_out is None else np.asarray(ys_out, dtype=float)
    Kx = np.exp(-(xs_out[:, None] - kp.decay * xs[None, :]) ** 2 / kp.T_bar) * _trapezoid_weights(xs)
    Ky = np.exp(-(ys_out[:, None] - kp.decay * ys[None, :]) ** 2 / kp.T_bar) * _trapezoid_weights(ys)
    out = Ky @ initial.values @ Kx.T / (math.pi * kp.T_bar)
    return WignerGrid.from_axes(xs_out, ys_out, out)
