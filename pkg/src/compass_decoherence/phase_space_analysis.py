"""Scalar and one-dimensional diagnostics of a (possibly decohering) Wigner function.

All integrals use composite Simpson weights on an odd square lattice and are
guarded by a coverage check: the grid border must carry no appreciable
quasi-probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import simpson

from .errors import ConfigurationError, CoverageError, DegenerateStateError, DomainError, StepSizeError
from .states import CompassParams, ReservoirParams
from .wigner_analytic import GridSpec, WignerGrid, evolved_values, wigner_grid

COVERAGE_TOL = 1e-5
DEFAULT_GRID_POINTS = 601
TOMOGRAM_NORM_TOL = 1e-3
TOMOGRAM_FLOOR = -1e-9
ENTROPY_PREFACTOR = 2 * math.pi
S0_STEPS = (1e-3, 5e-4)
S0_AGREEMENT = 0.01


def default_grid(params: CompassParams, n: int = DEFAULT_GRID_POINTS) -> GridSpec:
    """[-L, L]^2 with L = X0 + 2 sqrt(p) + 6."""
    return GridSpec(params.X0 + 2 * math.sqrt(params.p) + 6.0, n)


def check_coverage(grid: WignerGrid, tol: float = COVERAGE_TOL) -> None:
    v = grid.values
    border = max(np.abs(v[0]).max(), np.abs(v[-1]).max(), np.abs(v[:, 0]).max(), np.abs(v[:, -1]).max())
    if border > tol:
        raise CoverageError(f"|W| reaches {border:.2e} on the grid border (limit {tol:.0e}); enlarge the grid")


_INTEGRANDS = {
    "identity": lambda w: w,
    "abs": np.abs,
    "square": np.square,
}


def integrate_2d(grid: WignerGrid, integrand: str = "identity", *, check: bool = True) -> float:
    """Simpson quadrature of f(W) dx dy with f in {identity, abs, square}."""
    try:
        f = _INTEGRANDS[integrand]
    except KeyError:
        raise ConfigurationError(f"integrand must be one of {sorted(_INTEGRANDS)}, got {integrand!r}") from None
    if grid.nx % 2 == 0 or grid.ny % 2 == 0:
        raise ConfigurationError("Simpson quadrature needs an odd number of points per axis")
    if check:
        check_coverage(grid)
    return float(simpson(simpson(f(grid.values), x=grid.xs, axis=1), x=grid.ys))


def state_grid(params: CompassParams, reservoir: ReservoirParams, tau: float,
               spec: GridSpec | None = None, threads: int = 1) -> WignerGrid:
    return wigner_grid(params, reservoir, tau, spec or default_grid(params), threads=threads)


def grid_negativity(grid: WignerGrid) -> float:
    """Integral of |W| minus integral of W, so a non-negative grid gives exactly 0."""
    return integrate_2d(grid, "abs") - integrate_2d(grid, "identity", check=False)


def negativity(params: CompassParams, reservoir: ReservoirParams, tau: float = 0.0,
               spec: GridSpec | None = None, threads: int = 1) -> float:
    """Wigner negativity: integral of |W| over the plane minus one."""
    return grid_negativity(state_grid(params, reservoir, tau, spec, threads))


def grid_linear_entropy(grid: WignerGrid, prefactor: float = ENTROPY_PREFACTOR) -> float:
    return 1.0 - prefactor * integrate_2d(grid, "square")


def linear_entropy(params: CompassParams, reservoir: ReservoirParams, tau: float,
                   spec: GridSpec | None = None, *, prefactor: float = ENTROPY_PREFACTOR,
                   threads: int = 1) -> float:
    """S = 1 - tr(rho^2) = 1 - 2 pi * integral W^2 dx dy."""
    return grid_linear_entropy(state_grid(params, reservoir, tau, spec, threads), prefactor)


def entropy_rate_S0(params: CompassParams, reservoir: ReservoirParams, spec: GridSpec | None = None,
                    *, steps: tuple[float, float] = S0_STEPS, prefactor: float = ENTROPY_PREFACTOR,
                    threads: int = 1) -> float:
    """Initial entropy rate dS/dtau at tau = 0.

    One-sided quotients r(h) = (S(h) - S(0))/h are Richardson-combined as
    2 r(h/2) - r(h) for the step pair (h, h/2), which is the returned value.
    Subtracting the computed S(0) (zero up to quadrature error for a pure
    state) cancels the quadrature bias shared by the grids.  As a convergence
    check the same extrapolation is repeated on (h/2, h/4); the two
    extrapolated estimates must agree within 1%.
    """
    h1, h2 = steps
    if not (h1 > 0 and h2 > 0 and h1 != h2):
        raise ConfigurationError(f"need two distinct positive steps, got {steps}")
    h3 = h2 * h2 / h1
    spec = spec or default_grid(params)

    def S(tau):
        return linear_entropy(params, reservoir, tau, spec, prefactor=prefactor, threads=threads)

    s0 = S(0.0)
    r1, r2, r3 = ((S(h) - s0) / h for h in (h1, h2, h3))

    def extrapolate(ra, rb, ha, hb):
        # removes the first-order error term
        return (ha * rb - hb * ra) / (ha - hb)

    estimate = extrapolate(r1, r2, h1, h2)
    check = extrapolate(r2, r3, h2, h3)
    if abs(estimate - check) > S0_AGREEMENT * max(abs(check), 1e-300):
        raise StepSizeError(
            f"entropy-rate extrapolation not converged: {estimate:.6g} (h={h1}, {h2}) vs "
            f"{check:.6g} (h={h2}, {h3})")
    return estimate


def relative_change(S0_A: float, S0_B: float) -> float:
    """(S0_B - S0_A) / |S0_A| in percent."""
    if S0_A == 0:
        raise DomainError("relative change needs a non-zero reference rate")
    return (S0_B - S0_A) / abs(S0_A) * 100.0


def central_ratio_d(params: CompassParams, reservoir: ReservoirParams, tau: float) -> float:
    """W(0, 0; tau) / |W(0, 0; 0)|."""
    w0 = float(evolved_values(params, reservoir, 0.0, 0.0, 0.0))
    if abs(w0) < 1e-14:
        raise DegenerateStateError(f"W(0, 0) = {w0:.3e} at tau = 0; the ratio is undefined")
    return float(evolved_values(params, reservoir, tau, 0.0, 0.0)) / abs(w0)


@dataclass(frozen=True)
class Tomogram:
    """Marginal R(x_theta) of W along the rotated quadrature x_theta."""

    theta: float
    x_values: np.ndarray
    r_values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x_values, dtype=float)
        r = np.asarray(self.r_values, dtype=float)
        if x.shape != r.shape or x.ndim != 1:
            raise ConfigurationError("tomogram abscissae and values must be 1-D arrays of equal length")
        if r.min() < TOMOGRAM_FLOOR:
            raise CoverageError(f"tomogram dips to {r.min():.2e}, below the quadrature floor")
        mass = self.mass(x, r)
        if abs(mass - 1) > TOMOGRAM_NORM_TOL:
            raise CoverageError(f"tomogram integrates to {mass:.6f}; widen the x range")
        object.__setattr__(self, "x_values", x)
        object.__setattr__(self, "r_values", r)

    @staticmethod
    def mass(x, r) -> float:
        return float(simpson(r, x=x))

    def moments(self) -> tuple[float, float]:
        """(mean, variance) of x_theta under R."""
        mean = float(simpson(self.x_values * self.r_values, x=self.x_values))
        var = float(simpson((self.x_values - mean) ** 2 * self.r_values, x=self.x_values))
        return mean, var


def tomogram(params: CompassParams, reservoir: ReservoirParams, tau: float, theta: float,
             x_range: tuple[float, float] | None = None, n_points: int = 201,
             y_half_width: float | None = None, n_y: int = DEFAULT_GRID_POINTS) -> Tomogram:
    """R(x_theta) = integral of W(x_theta cos - y_theta sin, x_theta sin + y_theta cos) dy_theta."""
    L = default_grid(params).half_width
    lo, hi = x_range if x_range is not None else (-L, L)
    if not hi > lo:
        raise ConfigurationError(f"empty x range ({lo}, {hi})")
    if n_y % 2 == 0 or n_y < 3:
        raise ConfigurationError("n_y must be odd and >= 3")
    yw = L if y_half_width is None else y_half_width
    xs = np.linspace(lo, hi, n_points)
    ys = np.linspace(-yw, yw, n_y)
    c, s = math.cos(theta), math.sin(theta)
    XT, YT = np.meshgrid(xs, ys, indexing="ij")
    values = evolved_values(params, reservoir, tau, XT * c - YT * s, XT * s + YT * c)
    edge = max(np.abs(values[:, 0]).max(), np.abs(values[:, -1]).max())
    if edge > COVERAGE_TOL:
        raise CoverageError(f"|W| reaches {edge:.2e} at the ends of the integration line; widen it")
    return Tomogram(theta, xs, simpson(values, x=ys, axis=1))


def marginal(grid: WignerGrid, axis: str = "x") -> np.ndarray:
    """Row/column quadrature of a grid: the x-marginal integrates over y."""
    if axis == "x":
        return simpson(grid.values, x=grid.ys, axis=0)
    if axis == "y":
        return simpson(grid.values, x=grid.xs, axis=1)
    raise ConfigurationError(f"axis must be 'x' or 'y', got {axis!r}")


# -- time curves -----------------------------------------------------------------

@dataclass(frozen=True)
class EntropyReport:
    tau_values: np.ndarray
    S_values: np.ndarray
    S0: float
    S_inf: float


@dataclass(frozen=True)
class NegativityReport:
    tau_values: np.ndarray
    delta_values: np.ndarray


def thermal_entropy(n_bar: float) -> float:
    return 2 * n_bar / (2 * n_bar + 1)


def _check_schedule(taus: Sequence[float]) -> np.ndarray:
    t = np.asarray(taus, dtype=float)
    if t.ndim != 1 or len(t) == 0 or np.any(t < 0) or np.any(np.diff(t) < 0):
        raise ConfigurationError("tau schedule must be a non-empty, sorted sequence of values >= 0")
    return t


def entropy_curve(params: CompassParams, reservoir: ReservoirParams, taus: Sequence[float],
                  spec: GridSpec | None = None, threads: int = 1) -> EntropyReport:
    t = _check_schedule(taus)
    S = np.array([linear_entropy(params, reservoir, tau, spec, threads=threads) for tau in t])
    return EntropyReport(t, S, entropy_rate_S0(params, reservoir, spec, threads=threads),
                         thermal_entropy(reservoir.n_bar))


def negativity_curve(params: CompassParams, reservoir: ReservoirParams, taus: Sequence[float],
                     spec: GridSpec | None = None, threads: int = 1) -> NegativityReport:
    t = _check_schedule(taus)
    return NegativityReport(t, np.array([negativity(params, reservoir, tau, spec, threads) for tau in t]))


# -- entropy-rate benchmark table ---------------------------------------------------

@dataclass(frozen=True)
class Table1Entry:
    i: int
    X0: float
    p: int
    q: int
    n_bar: float
    S0_reference: float
    delta_reference: float | None = None
    compare_to: int | None = None


TABLE1_ROWS = (
    Table1Entry(1, 3.0, 0, 0, 0.5, 38.945),
    Table1Entry(2, 5.0, 0, 0, 0.5, 101.999, 161.90, 1),
    Table1Entry(3, 5.0, 0, 0, 1.0, 153.999, 50.98, 2),
    Table1Entry(4, 1.5, 14, 14, 0.5, 66.760),
    Table1Entry(5, 1.5, 20, 14, 0.5, 112.563, 68.61, 4),
    Table1Entry(6, 1.5, 20, 20, 0.5, 79.784, -29.12, 5),
    Table1Entry(7, 1.5, 20, 20, 1.0, 120.676, 51.25, 6),
)
TABLE1_S0_RTOL = 0.02
TABLE1_DELTA_ATOL = 2.0


@dataclass
class Table1Result:
    entry: Table1Entry
    S0: float
    delta_percent: float | None = None
    passed: bool = field(default=False)

    def check(self) -> bool:
        ok = abs(self.S0 / self.entry.S0_reference - 1) <= TABLE1_S0_RTOL
        if self.entry.delta_reference is not None:
            ok = ok and self.delta_percent is not None and \
                abs(self.delta_percent - self.entry.delta_reference) <= TABLE1_DELTA_ATOL
        self.passed = ok
        return ok


def table1_pipeline(rows: Sequence[int] | None = None, *, prefactor: float = ENTROPY_PREFACTOR,
                    threads: int = 1) -> list[Table1Result]:
    """Entropy rates for the benchmark rows; comparison rows are computed as needed."""
    by_index = {e.i: e for e in TABLE1_ROWS}
    wanted = list(by_index) if rows is None else list(rows)
    for i in wanted:
        if i not in by_index:
            raise ConfigurationError(f"table 1 has rows 1..{len(TABLE1_ROWS)}, got {i}")
    needed = set(wanted) | {by_index[i].compare_to for i in wanted if by_index[i].compare_to}
    rates = {}
    for i in sorted(needed):
        e = by_index[i]
        rates[i] = entropy_rate_S0(CompassParams(e.X0, e.p, e.q), ReservoirParams(e.n_bar),
                                   prefactor=prefactor, threads=threads)
    results = []
    for i in wanted:
        e = by_index[i]
        delta = relative_change(rates[e.compare_to], rates[i]) if e.compare_to else None
        r = Table1Result(e, rates[i], delta)
        r.check()
        results.append(r)
    return results
