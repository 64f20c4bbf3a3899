import math

import numpy as np
import pytest

from compass_decoherence.errors import ConfigurationError, CoverageError, DegenerateStateError, DomainError
from compass_decoherence.lindblad_oracle import (
    FockDensityMatrix,
    entropy_rate_from_density,
    evolve,
    purity,
)
from compass_decoherence.phase_space_analysis import (
    Tomogram,
    central_ratio_d,
    check_coverage,
    default_grid,
    entropy_curve,
    grid_negativity,
    integrate_2d,
    linear_entropy,
    marginal,
    negativity,
    negativity_curve,
    relative_change,
    entropy_rate_S0,
    state_grid,
    thermal_entropy,
    tomogram,
)
from compass_decoherence.states import CompassParams, ReservoirParams
from compass_decoherence.wigner_analytic import GridSpec, WignerGrid, thermal_values

VACUUM = CompassParams(0.0)
HALF = ReservoirParams(0.5)


def gaussian_grid(n_bar, center=(0.0, 0.0), L=10.0, n=401):
    x = np.linspace(-L, L, n)
    X, Y = np.meshgrid(x, x)
    return WignerGrid.from_axes(x, x, thermal_values(n_bar, X - center[0], Y - center[1]))


def test_default_grid():
    spec = default_grid(CompassParams(1.5, 16, 14))
    assert spec.half_width == pytest.approx(1.5 + 8 + 6)
    assert spec.n == 601


@pytest.mark.parametrize("integrand,expected", [("identity", 1.0), ("abs", 1.0), ("square", 1 / (2 * math.pi))])
def test_vacuum_integrals(integrand, expected):
    assert integrate_2d(gaussian_grid(0.0), integrand) == pytest.approx(expected, abs=1e-6)


def test_thermal_square_integral():
    assert integrate_2d(gaussian_grid(0.5), "square") == pytest.approx(1 / (4 * math.pi), abs=1e-6)


def test_integrate_rejects_bad_input():
    with pytest.raises(ConfigurationError):
        integrate_2d(gaussian_grid(0.0), "cube")
    with pytest.raises(CoverageError):
        integrate_2d(gaussian_grid(0.5, L=3.0), "identity")
    x = np.linspace(-8, 8, 40)
    with pytest.raises(ConfigurationError):
        integrate_2d(WignerGrid.from_axes(x, x, np.zeros((40, 40))))


def test_coverage_guard():
    check_coverage(gaussian_grid(0.0))
    with pytest.raises(CoverageError):
        check_coverage(gaussian_grid(0.0, center=(7.0, 0.0)))


def test_coherent_state_has_no_negativity():
    assert grid_negativity(gaussian_grid(0.0, center=(2.1, -1.3), L=9.0)) == pytest.approx(0.0, abs=1e-6)
    assert negativity(VACUUM, HALF) == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("n,tol", [(601, 1e-4), (2001, 1e-5)])
def test_fock_one_negativity(n, tol):
    # |W| has a kink on the zero circle, which limits Simpson to low order
    delta = negativity(CompassParams(0.0, 1, 0), HALF, spec=GridSpec(7.0, n))
    assert delta == pytest.approx(4 * math.exp(-0.5) - 2, abs=tol)


def test_negativity_vanishes_at_long_times():
    assert negativity(CompassParams(3.0), HALF, 10.0, GridSpec(9.0, 301)) <= 1e-3


@pytest.mark.parametrize("n_bar", [0.5, 1.0])
def test_entropy_anchors(n_bar):
    spec = GridSpec(9.0, 401)
    assert linear_entropy(CompassParams(3.0), ReservoirParams(n_bar), 0.0, spec) == pytest.approx(0.0, abs=1e-6)
    S = linear_entropy(CompassParams(3.0), ReservoirParams(n_bar), 10.0, GridSpec(12.0, 401))
    assert S == pytest.approx(thermal_entropy(n_bar), abs=1e-3)


@pytest.mark.parametrize("tau", [0.06, 0.12])
def test_entropy_matches_oracle_purity(tau):
    params = CompassParams(3.0)
    rho = evolve(FockDensityMatrix.from_params(params, 60), HALF, tau)
    assert linear_entropy(params, HALF, tau) == pytest.approx(1 - purity(rho), abs=1e-4)


@pytest.mark.parametrize("n_bar", [0.5, 1.0])
def test_vacuum_entropy_rate(n_bar):
    # S = 1 - 1/(1 + 2 n (1 - e^{-2 tau})), so dS/dtau(0) = 4 n
    reservoir = ReservoirParams(n_bar)
    assert entropy_rate_S0(VACUUM, reservoir) == pytest.approx(4 * n_bar, rel=1e-4)
    rho = FockDensityMatrix.from_params(VACUUM, 20)
    assert entropy_rate_from_density(rho, reservoir) == pytest.approx(4 * n_bar, rel=1e-12)


def test_entropy_rate_matches_fock_path():
    params = CompassParams(3.0)
    fock = entropy_rate_from_density(FockDensityMatrix.from_params(params), HALF)
    assert entropy_rate_S0(params, HALF) == pytest.approx(fock, rel=0.01)


def test_entropy_rate_bad_steps():
    with pytest.raises(ConfigurationError):
        entropy_rate_S0(VACUUM, HALF, steps=(1e-3, 1e-3))


@pytest.mark.parametrize("a,b,expected", [(38.945, 101.999, 161.90), (112.563, 79.784, -29.12), (5.0, 5.0, 0.0)])
def test_relative_change(a, b, expected):
    assert relative_change(a, b) == pytest.approx(expected, abs=0.01)


def test_relative_change_zero_reference():
    with pytest.raises(DomainError):
        relative_change(0.0, 1.0)


@pytest.mark.parametrize("params", [CompassParams(3.0), CompassParams(1.5, 14, 14)])
def test_central_ratio_at_zero(params):
    assert central_ratio_d(params, HALF, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_central_ratio_sign_and_degenerate(monkeypatch):
    # odd photon-number parity puts -1/pi at the origin
    assert central_ratio_d(CompassParams(0.0, 1, 0), HALF, 0.0) == pytest.approx(-1.0)
    import compass_decoherence.phase_space_analysis as psa
    monkeypatch.setattr(psa, "evolved_values", lambda *args, **kw: np.array(0.0))
    with pytest.raises(DegenerateStateError):
        central_ratio_d(CompassParams(3.0), HALF, 0.1)


def test_marginal_consistency():
    params = CompassParams(3.0)
    grid = state_grid(params, HALF, 0.0, GridSpec(9.0, 601))
    tx = tomogram(params, HALF, 0.0, 0.0, x_range=(-9.0, 9.0), n_points=601, y_half_width=9.0, n_y=601)
    assert np.max(np.abs(tx.r_values - marginal(grid, "x"))) <= 1e-6
    ty = tomogram(params, HALF, 0.0, math.pi / 2, x_range=(-9.0, 9.0), n_points=601, y_half_width=9.0, n_y=601)
    # y_theta runs along -x at theta = pi/2; the four-fold symmetry makes the profile even anyway
    assert np.max(np.abs(ty.r_values - marginal(grid, "y"))) <= 1e-6


def test_rotation_covariance():
    params = CompassParams(3.0)
    a = tomogram(params, HALF, 0.0, 0.3)
    b = tomogram(params, HALF, 0.0, 0.3 + math.pi / 2)
    assert np.max(np.abs(a.r_values - b.r_values)) <= 1e-8


def test_diagonal_tomogram_differs():
    params = CompassParams(3.0)
    a = tomogram(params, HALF, 0.0, 0.0)
    b = tomogram(params, HALF, 0.0, math.pi / 4)
    assert np.max(np.abs(a.r_values - b.r_values)) > 0.05


@pytest.mark.parametrize("n_bar", [0.5, 1.0])
def test_thermal_tomogram(n_bar):
    t = tomogram(CompassParams(3.0), ReservoirParams(n_bar), 10.0, 0.7)
    mean, var = t.moments()
    assert abs(mean) < 1e-8
    assert var == pytest.approx((2 * n_bar + 1) / 2, rel=0.01)
    s = 2 * n_bar + 1
    assert np.max(np.abs(t.r_values - np.exp(-t.x_values ** 2 / s) / math.sqrt(math.pi * s))) < 1e-6


def test_tomogram_validation():
    x = np.linspace(-5, 5, 101)
    with pytest.raises(CoverageError):
        Tomogram(0.0, x, np.exp(-x ** 2))
    with pytest.raises(CoverageError):
        tomogram(CompassParams(3.0), HALF, 0.0, 0.0, y_half_width=3.0)
    with pytest.raises(ConfigurationError):
        tomogram(CompassParams(3.0), HALF, 0.0, 0.0, x_range=(1.0, -1.0))


def test_curves():
    params = CompassParams(3.0)
    taus = [0.0, 0.05, 0.5, 10.0]
    spec = GridSpec(9.0, 301)
    neg = negativity_curve(params, HALF, taus, spec)
    assert np.all(neg.delta_values >= 0)
    assert np.all(np.diff(neg.delta_values) <= 1e-6)
    assert neg.delta_values[-1] <= 1e-3
    ent = entropy_curve(params, HALF, [0.0, 10.0], GridSpec(12.0, 401))
    assert ent.S_values[0] == pytest.approx(0.0, abs=1e-6)
    assert ent.S_inf == 0.5
    with pytest.raises(ConfigurationError):
        negativity_curve(params, HALF, [0.5, 0.1])


def test_negativity_plateau_at_large_amplitude():
    # growth flattens out once the components stop overlapping
    values = [negativity(CompassParams(x), HALF) for x in (2.0, 4.0, 6.0, 8.0)]
    assert np.all(np.diff(values) > 0)
    assert values[3] / values[2] - 1 < 0.01
    assert values[1] / values[0] - 1 > 0.5
