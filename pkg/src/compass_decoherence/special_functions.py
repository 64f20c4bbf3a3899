"""Bivariate Hermite polynomials and log-domain factorial bookkeeping.

The polynomials follow the generating-function convention

    H_{m,n}(x, y) = d^m/ds^m d^n/dt^n exp(-s t + s x + t y) |_{s=t=0},

so that H_{m,0}(x, y) = x**m and H_{0,n}(x, y) = y**n.  Evaluation uses the
terminating sum

    H_{m,n}(x, y) = m! n! sum_k (-1)^k x^(m-k) y^(n-k) / (k! (m-k)! (n-k)!)

with every coefficient formed in the log domain.  Scalar evaluation goes
through the equivalent Laguerre form, which avoids the cancellation of the
alternating sum.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DomainError, NumericalInstabilityError

MAX_DEGREE = 200

# exp() overflows a double just above this
_LOG_OVERFLOW = 709.0


@dataclass(frozen=True)
class LogComplexTerm:
    """A complex number stored as (ln|z|, arg z).

    Zero is represented by ``log_magnitude = -inf``.
    """

    log_magnitude: float
    phase: float = 0.0

    @classmethod
    def from_complex(cls, z: complex) -> "LogComplexTerm":
        z = complex(z)
        if z == 0:
            return cls(-math.inf, 0.0)
        return cls(math.log(abs(z)), cmath.phase(z))

    @classmethod
    def from_real(cls, value: float) -> "LogComplexTerm":
        return cls.from_complex(complex(value))

    def __mul__(self, other: "LogComplexTerm") -> "LogComplexTerm":
        return LogComplexTerm(self.log_magnitude + other.log_magnitude,
                              self.phase + other.phase)

    def __pow__(self, k: int) -> "LogComplexTerm":
        if k == 0:
            return LogComplexTerm(0.0, 0.0)
        return LogComplexTerm(k * self.log_magnitude, k * self.phase)

    @property
    def is_zero(self) -> bool:
        return self.log_magnitude == -math.inf

    def value(self) -> complex:
        if self.is_zero:
            return 0j
        if self.log_magnitude > _LOG_OVERFLOW:
            raise NumericalInstabilityError(
                f"term magnitude exp({self.log_magnitude:.1f}) overflows double precision")
        mag = math.exp(self.log_magnitude)
        return complex(mag * math.cos(self.phase), mag * math.sin(self.phase))


def log_factorial(n: int) -> float:
    """ln(n!) for a non-negative integer."""
    if n < 0:
        raise DomainError(f"log_factorial needs n >= 0, got {n}")
    if n < 2:
        return 0.0
    return math.lgamma(n + 1)


def compensated_sum(terms: Iterable[complex]) -> complex:
    """Sum complex terms with real and imaginary parts accumulated separately.

    Uses :func:`math.fsum`, which tracks exact partial sums, so the result is
    the correctly rounded sum of each part.
    """
    terms = [complex(t) for t in terms]
    return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))


def _check_degrees(m: int, n: int) -> None:
    if m < 0 or n < 0:
        raise DomainError(f"Hermite degrees must be non-negative, got ({m}, {n})")
    if m > MAX_DEGREE or n > MAX_DEGREE:
        raise DomainError(f"Hermite degree ({m}, {n}) exceeds cap {MAX_DEGREE}")


def _coefficient_terms(m: int, n: int, y: complex) -> list[tuple[int, LogComplexTerm]]:
    """(power of x, coefficient) pairs of H_{m,n}(., y) as a polynomial in x."""
    log_y = LogComplexTerm.from_complex(y)
    base = log_factorial(m) + log_factorial(n)
    out = []
    for k in range(min(m, n) + 1):
        if log_y.is_zero and n - k > 0:
            continue
        log_c = base - log_factorial(k) - log_factorial(m - k) - log_factorial(n - k)
        coef = LogComplexTerm(log_c, math.pi * (k % 2)) * (log_y ** (n - k))
        out.append((m - k, coef))
    return out


def _laguerre(n: int, alpha: int, z: complex) -> complex:
    """L_n^(alpha)(z) by the forward three-term recurrence."""
    l_prev, l_cur = 1.0 + 0j, complex(1 + alpha - z)
    if n == 0:
        return l_prev
    for k in range(1, n):
        l_prev, l_cur = l_cur, ((2 * k + 1 + alpha - z) * l_cur - (k + alpha) * l_prev) / (k + 1)
    return l_cur


def bivariate_hermite(m: int, n: int, x: complex, y: complex) -> complex:
    """Evaluate H_{m,n}(x, y) for complex arguments.

    Uses H_{m,n}(x, y) = (-1)^n n! x^(m-n) L_n^(m-n)(x y) for m >= n (and the
    swap symmetry otherwise).  The alternating sum cancels badly for real
    arguments of moderate size; the Laguerre recurrence does not.
    """
    _check_degrees(m, n)
    x, y = complex(x), complex(y)
    if m < n:
        m, n, x, y = n, m, y, x
    a = m - n
    if x == 0 and a > 0:
        return 0j
    lag = _laguerre(n, a, x * y)
    if lag == 0:
        return 0j
    prefactor = LogComplexTerm(log_factorial(n), math.pi * (n % 2))
    if a > 0:
        prefactor = prefactor * (LogComplexTerm.from_complex(x) ** a)
    out = (prefactor * LogComplexTerm.from_complex(lag)).value()
    if not cmath.isfinite(out):
        raise NumericalInstabilityError(f"H_{{{m},{n}}} is not finite at x={x}, y={y}")
    return out


def hermite_coefficient_matrix(m_max: int, n: int, y: complex) -> np.ndarray:
    """Matrix C with H_{m,n}(x, y) = sum_a C[m, a] x**a for m = 0..m_max."""
    _check_degrees(m_max, n)
    C = np.zeros((m_max + 1, m_max + 1), dtype=complex)
    for m in range(m_max + 1):
        for power, coef in _coefficient_terms(m, n, y):
            C[m, power] = coef.value()
    return C


def hermite_rows(m_max: int, n: int, x: np.ndarray, y: complex) -> np.ndarray:
    """H_{m,n}(x, y) for all m in 0..m_max at every entry of ``x``.

    Returns an array of shape ``x.shape + (m_max + 1,)``.  ``y`` is a scalar;
    the polynomials are evaluated as one matrix product against the powers
    of ``x``.
    """
    x = np.asarray(x, dtype=complex)
    C = hermite_coefficient_matrix(m_max, n, y)
    powers = np.empty(x.shape + (m_max + 1,), dtype=complex)
    powers[..., 0] = 1.0
    for a in range(1, m_max + 1):
        powers[..., a] = powers[..., a - 1] * x
    return powers @ C.T
