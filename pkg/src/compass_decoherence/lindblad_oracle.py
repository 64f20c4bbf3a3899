"""Brute-force reference: truncated-Fock density matrices under the thermal master equation.

The generator is

    L[rho] = (n+1)(2 a rho a^dag - a^dag a rho - rho a^dag a)
           + n (2 a^dag rho a - a a^dag rho - rho a a^dag)

with every operator replaced by its exact truncation to the first ``cutoff``
number states, so ``a a^dag = diag(1, ..., N-1, 0)`` and the generator is
exactly trace preserving in the truncated space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ConfigurationError, CutoffTooSmallError, NumericalInstabilityError
from .states import CompassParams, FockVector, ReservoirParams, build_fock_state
from .wigner_analytic import PhasePoint

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-8
LEAKAGE_TOL = 1e-8
HALVING_TOL = 1e-8
_POINT_CHUNK = 64


@dataclass(frozen=True)
class FockDensityMatrix:
    """Validated density matrix on the first ``cutoff`` number states."""

    cutoff: int
    entries: np.ndarray

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.shape != (self.cutoff, self.cutoff):
            raise ConfigurationError(f"expected a {self.cutoff}x{self.cutoff} matrix, got {rho.shape}")
        check_invariants(rho)
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @classmethod
    def from_vector(cls, psi: FockVector) -> "FockDensityMatrix":
        return cls(psi.cutoff, psi.density_matrix())

    @classmethod
    def from_params(cls, params: CompassParams, cutoff: int | None = None) -> "FockDensityMatrix":
        return cls.from_vector(build_fock_state(params, cutoff))

    @classmethod
    def thermal(cls, n_bar: float, cutoff: int) -> "FockDensityMatrix":
        pops = thermal_populations(n_bar, cutoff)
        return cls(cutoff, np.diag(pops / pops.sum()))

    def populations(self) -> np.ndarray:
        return self.entries.diagonal().real.copy()


def check_invariants(rho: np.ndarray) -> None:
    """Raise NumericalInstabilityError unless rho is Hermitian, unit trace and PSD."""
    if not np.all(np.isfinite(rho)):
        raise NumericalInstabilityError("density matrix has non-finite entries")
    herm = float(np.max(np.abs(rho - rho.conj().T))) if rho.size else 0.0
    if herm > HERMITIAN_TOL:
        raise NumericalInstabilityError(f"density matrix not Hermitian (deviation {herm:.2e})")
    trace = np.trace(rho)
    if abs(trace - 1.0) > TRACE_TOL:
        raise NumericalInstabilityError(f"density matrix trace {trace.real:.12f} != 1")
    lowest = float(np.linalg.eigvalsh(rho)[0])
    if lowest < -PSD_TOL:
        raise NumericalInstabilityError(f"density matrix has eigenvalue {lowest:.2e} < -{PSD_TOL}")


def thermal_populations(n_bar: float, cutoff: int) -> np.ndarray:
    """n^m / (1+n)^(m+1) for m < cutoff."""
    m = np.arange(cutoff)
    if n_bar == 0:
        out = np.zeros(cutoff)
        out[0] = 1.0
        return out
    return np.exp(m * math.log(n_bar) - (m + 1) * math.log1p(n_bar))


def lindblad_rhs(rho: FockDensityMatrix | np.ndarray, reservoir: ReservoirParams) -> np.ndarray:
    """Time derivative of rho under the thermal master equation (unit rate)."""
    r = rho.entries if isinstance(rho, FockDensityMatrix) else np.asarray(rho)
    n = r.shape[0]
    nb = reservoir.n_bar
    s = np.sqrt(np.arange(1, n, dtype=float))
    ss = np.outer(s, s)
    number = np.arange(n, dtype=float)
    # truncated a a^dag
    anti = np.append(np.arange(1, n, dtype=float), 0.0)

    a_rho_ad = np.zeros_like(r)
    a_rho_ad[:-1, :-1] = ss * r[1:, 1:]
    ad_rho_a = np.zeros_like(r)
    ad_rho_a[1:, 1:] = ss * r[:-1, :-1]

    loss = 2 * a_rho_ad - (number[:, None] + number[None, :]) * r
    gain = 2 * ad_rho_a - (anti[:, None] + anti[None, :]) * r
    return (nb + 1) * loss + nb * gain


def default_dt(reservoir: ReservoirParams) -> float:
    return 1e-3 / (1 + reservoir.n_bar)


def _integrate(rho: np.ndarray, reservoir: ReservoirParams, tau: float, dt: float) -> np.ndarray:
    steps = max(1, math.ceil(tau / dt - 1e-12))
    h = tau / steps
    for _ in range(steps):
        k1 = lindblad_rhs(rho, reservoir)
        k2 = lindblad_rhs(rho + 0.5 * h * k1, reservoir)
        k3 = lindblad_rhs(rho + 0.5 * h * k2, reservoir)
        k4 = lindblad_rhs(rho + h * k3, reservoir)
        rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        if not np.all(np.isfinite(rho)):
            raise NumericalInstabilityError(f"integration diverged (dt={h:.3e}); reduce dt")
    return rho


def trace_norm(m: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    h = 0.5 * (m + m.conj().T)
    return float(np.sum(np.abs(np.linalg.eigvalsh(h))))


def evolve(rho0: FockDensityMatrix, reservoir: ReservoirParams, tau: float,
           dt: float | None = None, *, check_halving: bool = True) -> FockDensityMatrix:
    """Fixed-step RK4 integration to time ``tau``.

    With ``check_halving`` the run is repeated at ``dt/2`` and the two results
    must agree in trace norm to HALVING_TOL; the finer result is returned.
    """
    if not math.isfinite(tau) or tau < 0:
        raise ConfigurationError(f"tau must be >= 0, got {tau}")
    if dt is None:
        dt = default_dt(reservoir)
    if not dt > 0:
        raise ConfigurationError(f"dt must be > 0, got {dt}")
    if tau == 0:
        return rho0
    coarse = _integrate(rho0.entries.copy(), reservoir, tau, dt)
    result = coarse
    if check_halving:
        result = _integrate(rho0.entries.copy(), reservoir, tau, dt / 2)
        gap = trace_norm(result - coarse)
        if gap > HALVING_TOL:
            raise NumericalInstabilityError(
                f"step-halving mismatch {gap:.2e} > {HALVING_TOL:.0e}; reduce dt (now {dt:.2e})")
    # remove roundoff drift of the trace before validation
    result = result / np.trace(result).real
    try:
        return FockDensityMatrix(rho0.cutoff, result)
    except NumericalInstabilityError as exc:
        raise NumericalInstabilityError(f"evolved state invalid ({exc}); reduce dt or raise cutoff") from exc


def purity(rho: FockDensityMatrix) -> float:
    """tr(rho^2)."""
    r = rho.entries
    return float(np.sum(np.abs(r) ** 2))


def laguerre_table(x: np.ndarray, dim: int) -> np.ndarray:
    """L[k_pt, n, k] = L_n^(k)(x[k_pt]) for n + k < dim (zero elsewhere).

    Forward three-term recurrence in the degree, run for all orders at once.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = np.arange(dim, dtype=float)
    out = np.zeros((len(x), dim, dim))
    out[:, 0, :] = 1.0
    if dim > 1:
        out[:, 1, :] = 1.0 + k[None, :] - x[:, None]
    for n in range(1, dim - 1):
        out[:, n + 1, :] = ((2 * n + 1 + k[None, :] - x[:, None]) * out[:, n, :]
                            - (n + k[None, :]) * out[:, n - 1, :]) / (n + 1)
    # keep only the entries that are used
    mask = (np.arange(dim)[:, None] + np.arange(dim)[None, :]) < dim
    return out * mask


def displacement_elements(gammas, dim: int) -> np.ndarray:
    """Matrix elements D[k, m, n] = <m|D(gammas[k])|n> for m, n < dim.

    Closed form: for m >= n,
    <m|D(g)|n> = sqrt(n!/m!) exp(-|g|^2/2) g^(m-n) L_n^(m-n)(|g|^2),
    and <m|D(g)|n> = sqrt(m!/n!) exp(-|g|^2/2) (-g^*)^(n-m) L_m^(n-m)(|g|^2)
    for m < n.
    """
    g = np.atleast_1d(np.asarray(gammas, dtype=complex))
    x = np.abs(g) ** 2
    lag = laguerre_table(x, dim)
    idx = np.arange(dim)
    lo = np.minimum.outer(idx, idx)
    order = np.abs(idx[:, None] - idx[None, :])
    lg = gammaln(np.arange(dim) + 1.0)
    log_ratio = 0.5 * (lg[lo] - lg[lo + order])
    mag = np.abs(g)
    safe = np.where(mag > 0, mag, 1.0)
    log_pref = log_ratio[None] - 0.5 * x[:, None, None] + order[None] * np.log(safe)[:, None, None]
    # g = 0: only the diagonal survives
    log_pref = np.where((mag[:, None, None] == 0) & (order[None] > 0), -np.inf, log_pref)
    lower = idx[:, None] >= idx[None, :]
    phase = np.where(lower[None], 1.0, -1.0) * order[None] * np.angle(g)[:, None, None]
    sign = np.where(lower, 1.0, (-1.0) ** order)
    values = lag[:, lo, order]
    return np.exp(log_pref + 1j * phase) * sign[None] * values


def displacement_matrix(gamma: complex, dim: int) -> np.ndarray:
    """<m|D(gamma)|n> for m, n < dim."""
    return displacement_elements(np.array([gamma]), dim)[0]


def _as_points(point) -> tuple[np.ndarray, np.ndarray, tuple]:
    if isinstance(point, PhasePoint):
        return np.array([point.x]), np.array([point.y]), ()
    x, y = point
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    return x.ravel(), y.ravel(), x.shape


def wigner_from_density(rho: FockDensityMatrix, point, *, method: str = "doubled") -> float | np.ndarray:
    """W = tr(rho 2 D(b) Pi D(b)^dag) / (2 pi) with b = (x + i y)/sqrt(2).

    ``point`` is a PhasePoint or an ``(x, y)`` pair of arrays.  The default
    ``"doubled"`` method uses 2 D(b) Pi D(b)^dag = 2 D(2b) Pi, so
    W = (1/pi) sum_mn rho_mn (-1)^m <n|D(2b)|m>.  ``"parity"`` forms the
    displaced parity operator literally; there the squared norm of each
    displacement column that falls outside the cutoff, weighted by the
    populations, must stay below LEAKAGE_TOL.  The doubled form only needs
    matrix elements inside the cutoff, which are exact, so it has no leakage.
    """
    if method not in ("doubled", "parity"):
        raise ConfigurationError(f"unknown method {method!r}")
    x, y, shape = _as_points(point)
    r = rho.entries
    dim = rho.cutoff
    pops = r.diagonal().real
    parity = (-1.0) ** np.arange(dim)
    beta = (x + 1j * y) / math.sqrt(2)
    values = np.empty(len(beta))
    for start in range(0, len(beta), _POINT_CHUNK):
        b = beta[start:start + _POINT_CHUNK]
        D = displacement_elements(2 * b if method == "doubled" else b, dim)
        if method == "parity":
            leak = np.einsum("n,kn->k", pops, 1.0 - np.sum(np.abs(D) ** 2, axis=1))
            worst = float(np.max(leak))
        else:
            worst = 0.0
        if worst > LEAKAGE_TOL:
            raise CutoffTooSmallError(
                f"displacement leakage {worst:.2e} exceeds {LEAKAGE_TOL:.0e}; raise the cutoff (now {dim})")
        if method == "doubled":
            vals = np.einsum("mn,knm,m->k", r, D, parity).real / math.pi
        else:
            # tr(rho D Pi D^dag) = sum_k (D^dag rho D)_kk (-1)^k
            shifted = np.einsum("kam,ab,kbn->kmn", D.conj(), r, D)
            vals = np.einsum("kmm,m->k", shifted, parity).real / math.pi
        values[start:start + len(b)] = vals
    if shape == ():
        return float(values[0])
    return values.reshape(shape)


def linear_entropy_from_density(rho: FockDensityMatrix) -> float:
    return 1.0 - purity(rho)


def entropy_rate_from_density(rho: FockDensityMatrix, reservoir: ReservoirParams) -> float:
    """dS/dtau = -2 tr(rho L[rho]) for the linear entropy S = 1 - tr(rho^2)."""
    r = rho.entries
    return float(-2 * np.real(np.vdot(r, lindblad_rhs(r, reservoir))))
