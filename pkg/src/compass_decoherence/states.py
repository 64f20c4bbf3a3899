"""Compass states with photon addition/subtraction, analytic and in Fock space.

A state is fixed by the coherent amplitude scale ``X0`` and the number of
photons added (``p``) and then subtracted (``q``) on each of the four coherent
components at ``+-X0/sqrt(2)`` and ``+-i X0/sqrt(2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import ConfigurationError, CutoffTooSmallError, NumericalInstabilityError
from .special_functions import MAX_DEGREE, LogComplexTerm, bivariate_hermite, compensated_sum, log_factorial

TAIL_WINDOW = 10
TAIL_MASS_LIMIT = 1e-10
NORM_IMAG_TOL = 1e-9


@dataclass(frozen=True)
class CompassParams:
    """Recipe for the (photon-added-then-subtracted) compass state."""

    X0: float
    p: int = 0
    q: int = 0

    def __post_init__(self):
        if not math.isfinite(self.X0) or self.X0 < 0:
            raise ConfigurationError(f"X0 must be a finite real >= 0, got {self.X0}")
        for name in ("p", "q"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 0:
                raise ConfigurationError(f"{name} must be a non-negative integer, got {value}")
            if value > MAX_DEGREE:
                raise ConfigurationError(f"{name}={value} exceeds the Hermite degree cap {MAX_DEGREE}")
            object.__setattr__(self, name, int(value))
        object.__setattr__(self, "X0", float(self.X0))
        if self.X0 == 0 and self.q > self.p:
            raise ConfigurationError("X0=0 with q > p annihilates the state")


@dataclass(frozen=True)
class ReservoirParams:
    """Thermal bath with mean photon number ``n_bar``.

    Time is dimensionless (tau = rate * t); both the loss and the gain terms
    of the master equation carry the same unit rate.
    """

    n_bar: float = 0.5

    def __post_init__(self):
        if not math.isfinite(self.n_bar) or self.n_bar < 0:
            raise ConfigurationError(f"n_bar must be a finite real >= 0, got {self.n_bar}")
        object.__setattr__(self, "n_bar", float(self.n_bar))

    @property
    def diffusion(self) -> float:
        """n_bar + 1/2, the phase-space diffusion constant."""
        return self.n_bar + 0.5


def component_amplitudes(params: CompassParams) -> tuple[complex, complex, complex, complex]:
    a = params.X0 / math.sqrt(2.0)
    return (complex(a, 0.0), complex(-a, 0.0), complex(0.0, a), complex(0.0, -a))


@lru_cache(maxsize=256)
def normalization(params: CompassParams) -> float:
    """Squared norm of the unnormalized four-component superposition.

    Double sum over component pairs and the photon-addition index of
    bivariate-Hermite products, accumulated with compensated summation.
    """
    p, q = params.p, params.q
    alphas = component_amplitudes(params)
    terms = []
    for ai in alphas:
        for aj in alphas:
            # G_ij and the overall (-1)^(p+q)
            log_pair = LogComplexTerm(-0.5 * (abs(ai) ** 2 + abs(aj) ** 2), math.pi * ((p + q) % 2))
            overlap = np.conj(ai) * aj
            for n in range(p + 1):
                log_c = 2 * log_factorial(p) - log_factorial(n) - 2 * log_factorial(p - n)
                h1 = bivariate_hermite(p - n, q, 1j * aj, 1j * np.conj(ai))
                h2 = bivariate_hermite(p - n, q, 1j * np.conj(ai), 1j * aj)
                coef = LogComplexTerm(log_c + overlap.real, math.pi * (n % 2) + overlap.imag) * log_pair
                terms.append(coef.value() * h1 * h2)
    total = compensated_sum(terms)
    scale = max(abs(total), 1e-300)
    if abs(total.imag) > NORM_IMAG_TOL * scale:
        raise NumericalInstabilityError(
            f"normalization has imaginary residue {total.imag:.3e} (value {total.real:.6e})")
    if not total.real > 0:
        raise NumericalInstabilityError(f"normalization is not positive: {total.real:.6e}")
    return float(total.real)


def default_cutoff(params: CompassParams) -> int:
    mean = math.ceil(params.X0 ** 2 / 2)
    return int(math.ceil(mean + params.p + params.q + 8 * math.sqrt(mean + params.p) + 20))


@dataclass(frozen=True)
class FockVector:
    """Truncated number-basis amplitudes (read-only array)."""

    cutoff: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.cutoff,):
            raise ConfigurationError(f"expected {self.cutoff} amplitudes, got shape {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "FockVector") -> complex:
        n = min(self.cutoff, other.cutoff)
        return complex(np.vdot(self.amplitudes[:n], other.amplitudes[:n]))

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """exp(-|alpha|^2/2) alpha^n / sqrt(n!) for n < dim."""
    n = np.arange(dim)
    out = np.zeros(dim, dtype=complex)
    if alpha == 0:
        out[0] = 1.0
        return out
    log_mag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag + 1j * n * np.angle(alpha))


def _create(v: np.ndarray) -> np.ndarray:
    out = np.zeros(len(v) + 1, dtype=complex)
    out[1:] = np.sqrt(np.arange(1, len(v) + 1)) * v
    return out


def _annihilate(v: np.ndarray) -> np.ndarray:
    return np.sqrt(np.arange(1, len(v))) * v[1:]


def unnormalized_fock_state(params: CompassParams, cutoff: int) -> tuple[np.ndarray, float]:
    """Sum over components of a^q a^dag^p |alpha_k>, truncated to ``cutoff``.

    Returns the truncated vector and the squared norm of whatever was cut off
    at or beyond ``cutoff - TAIL_WINDOW`` (the convergence guard quantity).
    """
    if cutoff <= TAIL_WINDOW:
        raise ConfigurationError(f"cutoff must exceed {TAIL_WINDOW}, got {cutoff}")
    # work in a larger space so entries below the cutoff are exact
    work = cutoff + params.p + params.q
    total = np.zeros(work + params.p - params.q, dtype=complex)
    for alpha in component_amplitudes(params):
        v = coherent_amplitudes(alpha, work)
        for _ in range(params.p):
            v = _create(v)
        for _ in range(params.q):
            v = _annihilate(v)
        total[: len(v)] += v
    tail = float(np.sum(np.abs(total[cutoff - TAIL_WINDOW:]) ** 2))
    return total[:cutoff].copy(), tail


def build_fock_state(params: CompassParams, cutoff: int | None = None) -> FockVector:
    """Normalized Fock amplitudes of the state, checked against the tail guard."""
    if cutoff is None:
        cutoff = default_cutoff(params)
    v, tail = unnormalized_fock_state(params, cutoff)
    norm2 = float(np.sum(np.abs(v) ** 2))
    if norm2 == 0:
        raise ConfigurationError("state vanishes for these parameters")
    if tail / norm2 >= TAIL_MASS_LIMIT:
        raise CutoffTooSmallError(
            f"tail mass {tail / norm2:.2e} above index {cutoff - TAIL_WINDOW} (cutoff {cutoff})")
    return FockVector(cutoff, v / math.sqrt(norm2))


def overlap_F(params: CompassParams, cutoff: int | None = None) -> float:
    """|<C|state>|^2 against the plain compass state of the same X0."""
    reference = CompassParams(params.X0, 0, 0)
    if cutoff is None:
        cutoff = max(default_cutoff(params), default_cutoff(reference))
    psi = build_fock_state(params, cutoff)
    ref = build_fock_state(reference, cutoff)
    return min(1.0, abs(ref.inner(psi)) ** 2)
