"""Acceptance criteria, each run at its stated tolerance.

Every test records a one-line verdict (see conftest.py), printed in the
terminal summary as ``criterion N PASS|FAIL: ...``.
"""

import math

import numpy as np
import pytest

from compass_decoherence import patch_dynamics as patches
from compass_decoherence import phase_space_analysis as analysis
from compass_decoherence.cli import RunConfig, oracle_compare
from compass_decoherence.lindblad_oracle import FockDensityMatrix, evolve, lindblad_rhs
from compass_decoherence.special_functions import bivariate_hermite
from compass_decoherence.states import CompassParams, ReservoirParams
from compass_decoherence.wigner_analytic import (
    GridSpec,
    PhasePoint,
    WignerGrid,
    evolved_values,
    propagate_convolution,
    state_field,
    thermal_values,
    wigner_grid,
    wigner_initial,
)

HALF = ReservoirParams(0.5)
PURE_STATES = [CompassParams(3.0), CompassParams(5.0), CompassParams(1.5, 14, 14),
               CompassParams(1.5, 20, 14), CompassParams(1.5, 20, 20)]
_CRITERION_4 = {}
BENCHMARK_STATES = [(CompassParams(e.X0, e.p, e.q), ReservoirParams(e.n_bar)) for e in analysis.TABLE1_ROWS]


@pytest.fixture(scope="session")
def table2_results():
    """Per Table II row: (metrics, contour, field) or the raised error."""
    out = {}
    for e in patches.TABLE2_ROWS:
        params = CompassParams(e.X0, e.p, e.q)
        try:
            metrics, contour = patches.central_patch_metrics(params, HALF)
            out[e.i] = (metrics, contour, state_field(params, HALF, 0.0))
        except Exception as exc:  # recorded as a failed check
            out[e.i] = exc
    return out


def test_criterion_1_table1(record_criterion):
    checks = {}
    for r in analysis.table1_pipeline():
        e = r.entry
        print(f"  row {e.i}: S0 = {r.S0:.4f} (reference {e.S0_reference})"
              + (f", Delta = {r.delta_percent:.2f}% (reference {e.delta_reference})" if e.compare_to else ""))
        checks[f"row {e.i} S0"] = abs(r.S0 / e.S0_reference - 1) <= 0.02
        if e.delta_reference is not None:
            checks[f"row {e.i} Delta"] = abs(r.delta_percent - e.delta_reference) <= 2.0
    failed = record_criterion(1, "entropy-rate table, S0 within 2% and Delta within 2 points", checks)
    assert not failed


def test_criterion_2_table2(record_criterion, table2_results):
    checks = {}
    for e in patches.TABLE2_ROWS:
        result = table2_results[e.i]
        if isinstance(result, Exception):
            checks[f"row {e.i} ({type(result).__name__}: {result})"] = False
            continue
        m = result[0]
        print(f"  row {e.i}: a = {m.a0:.4f}, v = {m.v0:.4f}, vdot = {m.vdot0:.3f}, "
              f"vdot/v = {m.vdot_rel:.2f}, adot = {m.adot0:.4f} (reference adot {e.adot_plus_0})")
        for name, ok in patches.table2_row_checks(e, m).items():
            checks[f"row {e.i} {name}"] = bool(ok)
    failed = record_criterion(2, "patch table, a, v, vdot, vdot/v within 5% and adot within 10% "
                                 "(0.05 absolute near zero)", checks)
    assert not failed


def test_criterion_3_convention_anchors(record_criterion):
    checks = {}
    for params in PURE_STATES:
        S = analysis.linear_entropy(params, HALF, 0.0)
        checks[f"S(0) {params}"] = abs(S) <= 1e-4
    x = np.linspace(-4, 4, 41)
    X, Y = np.meshgrid(x, x)
    for n_bar in (0.5, 1.0):
        reservoir = ReservoirParams(n_bar)
        for params in PURE_STATES:
            S = analysis.linear_entropy(params, reservoir, 10.0)
            checks[f"S(10) n_bar={n_bar} {params}"] = abs(S - 2 * n_bar / (2 * n_bar + 1)) <= 1e-3
            gap = np.max(np.abs(evolved_values(params, reservoir, 10.0, X, Y) - thermal_values(n_bar, X, Y)))
            checks[f"W(10) vs thermal n_bar={n_bar} {params}"] = gap <= 1e-5
    checks["delta(vacuum)"] = abs(analysis.negativity(CompassParams(0.0), HALF)) <= 1e-6
    axis = np.linspace(-9, 9, 601)
    X, Y = np.meshgrid(axis, axis)
    displaced = WignerGrid.from_axes(axis, axis, thermal_values(0.0, X - 3.0, Y + 1.0))
    checks["delta(displaced coherent)"] = abs(analysis.grid_negativity(displaced)) <= 1e-6
    failed = record_criterion(3, "convention anchors S(0), S(10), thermal limit, coherent negativity", checks)
    assert not failed


@pytest.mark.parametrize("params", [CompassParams(3.0), CompassParams(5.0), CompassParams(1.5, 14, 14),
                                    CompassParams(1.5, 20, 20)], ids=str)
def test_criterion_4_oracle_equivalence(params, record_criterion):
    tol = 1e-6 if max(params.p, params.q) <= 14 else 1e-4
    cutoff = 120 if max(params.p, params.q) <= 14 else 160
    cfg = RunConfig(params, HALF, {"L": 4.0, "n": 41}, [0.0, 0.06, 0.12])
    checks = {}
    for tau, max_abs, _, s_wigner, s_oracle in oracle_compare(cfg, cutoff):
        print(f"  {params} tau={tau}: max |dW| = {max_abs:.2e}, |dS| = {abs(s_wigner - s_oracle):.2e}")
        checks[f"{params} W tau={tau}"] = max_abs <= tol
        checks[f"{params} S tau={tau}"] = abs(s_wigner - s_oracle) <= 1e-4
    # the verdict line covers all parameter sets run so far
    _CRITERION_4.update(checks)
    failed = record_criterion(4, "analytic vs Fock-space oracle Wigner and entropy", _CRITERION_4)
    assert not [k for k in failed if str(params) in k]


def test_criterion_5_parity_anchor(record_criterion):
    checks = {}
    for p in (0, 14, 20):
        for X0 in (0.5, 1.5, 3.0):
            value = wigner_initial(CompassParams(X0, p, p), PhasePoint(0.0, 0.0))
            checks[f"X0={X0} p=q={p}"] = abs(value - 1 / math.pi) <= 1e-8
    failed = record_criterion(5, "W(0,0) = 1/pi for p = q", checks)
    assert not failed


def test_criterion_6_figure_properties(record_criterion):
    checks = {}
    delta_p = [analysis.negativity(CompassParams(1.5, p, 14), HALF) for p in (10, 14)]
    checks["delta increasing in p (q=14)"] = delta_p[1] > delta_p[0]
    delta_q = [analysis.negativity(CompassParams(1.5, 14, q), HALF) for q in (10, 14)]
    checks["delta decreasing in q (p=14)"] = delta_q[1] < delta_q[0]
    d3, d5 = (analysis.negativity(CompassParams(x), HALF) for x in (3.0, 5.0))
    print(f"  delta(X0=3) = {d3:.4f}, delta(X0=5) = {d5:.4f}, relative gap {abs(d5 / d3 - 1):.3f}")
    checks["delta(X0=3) vs delta(X0=5) within 5%"] = abs(d5 / d3 - 1) < 0.05

    ratio = analysis.central_ratio_d
    checks["d decays faster for X0=5 than X0=3"] = \
        ratio(CompassParams(5.0), HALF, 0.05) < ratio(CompassParams(3.0), HALF, 0.05)
    checks["d decays slower for (20,20) than (20,14)"] = \
        ratio(CompassParams(1.5, 20, 20), HALF, 0.05) > ratio(CompassParams(1.5, 20, 14), HALF, 0.05)

    taus = [0.0] + list(np.logspace(-3, 1, 19))
    for params, reservoir in BENCHMARK_STATES:
        delta = analysis.negativity_curve(params, reservoir, taus).delta_values
        normalized = delta / delta[0]
        checks[f"normalized delta non-increasing {params} n_bar={reservoir.n_bar}"] = \
            bool(np.all(np.diff(normalized) <= 1e-6))

    for n_bar in (0.5, 1.0):
        for theta in (0.0, 0.4, math.pi / 4):
            _, var = analysis.tomogram(CompassParams(3.0), ReservoirParams(n_bar), 10.0, theta).moments()
            expected = (2 * n_bar + 1) / 2
            checks[f"tomogram variance n_bar={n_bar} theta={theta:.3f}"] = abs(var / expected - 1) <= 0.01
    failed = record_criterion(6, "qualitative figure properties", checks)
    assert not failed


def test_criterion_7_independent_paths(record_criterion, table2_results):
    checks = {}
    params = CompassParams(3.0)
    initial_fd = wigner_grid(params, HALF, 0.0, GridSpec(9.0, 361))
    initial_fine = wigner_grid(params, HALF, 0.0, GridSpec(9.0, 721))
    window = initial_fd.xs[np.abs(initial_fd.xs) <= 4.0 + 1e-12]
    inner = np.abs(initial_fd.xs) <= 4.0 + 1e-12
    X, Y = np.meshgrid(window, window)
    for tau in (0.02, 0.06, 0.12):
        series = evolved_values(params, HALF, tau, X, Y)
        pde = patches.fd_evolve(initial_fd, 0.5, tau).values[np.ix_(inner, inner)]
        conv = propagate_convolution(initial_fine, HALF, tau, window, window).values
        gaps = {"pde-series": np.abs(pde - series).max(), "conv-series": np.abs(conv - series).max(),
                "pde-conv": np.abs(pde - conv).max()}
        print(f"  tau={tau}: " + ", ".join(f"{k} {v:.2e}" for k, v in gaps.items()))
        for name, gap in gaps.items():
            checks[f"{name} tau={tau}"] = gap <= 5e-4
    for e in patches.TABLE2_ROWS:
        result = table2_results[e.i]
        if isinstance(result, Exception):
            checks[f"area-rate forms row {e.i} ({type(result).__name__})"] = False
            continue
        _, contour, field = result
        forms = patches.area_rate_forms(contour, HALF, field, 1)
        a, b = forms.curvature_free, forms.laplacian_form
        print(f"  row {e.i}: area-rate forms {a:.5f} vs {b:.5f}")
        checks[f"area-rate forms row {e.i}"] = abs(a - b) <= 0.01 * max(abs(a), abs(b))
    failed = record_criterion(7, "PDE, convolution and series agree; both area-rate forms agree", checks)
    assert not failed


def test_criterion_8_property_suite(record_criterion, table2_results):
    checks = {}
    for params in PURE_STATES:
        for tau in (0.0, 0.06):
            grid = analysis.state_grid(params, HALF, tau)
            checks[f"normalization {params} tau={tau}"] = abs(grid.integral() - 1) <= 5e-4

    params = CompassParams(3.0)
    grid = wigner_grid(params, HALF, 0.0, GridSpec(9.0, 601))
    tomo = analysis.tomogram(params, HALF, 0.0, 0.0, x_range=(-9.0, 9.0), n_points=601,
                             y_half_width=9.0, n_y=601)
    checks["marginal consistency"] = np.max(np.abs(tomo.r_values - analysis.marginal(grid, "x"))) <= 1e-6

    rng = np.random.default_rng(2024)
    x, y = rng.uniform(-4, 4, size=(2, 50))
    for params in PURE_STATES:
        for tau in (0.0, 0.12):
            a = evolved_values(params, HALF, tau, x, y)
            b = evolved_values(params, HALF, tau, -y, x)
            checks[f"four-fold symmetry {params} tau={tau}"] = np.max(np.abs(a - b)) <= 1e-9

    worst = 0.0
    for _ in range(200):
        m, n = (int(v) for v in rng.integers(0, 30, size=2))
        hx, hy = rng.uniform(-10, 10, size=2)
        lhs = bivariate_hermite(m + 1, n, hx, hy)
        rhs = hx * bivariate_hermite(m, n, hx, hy) - (n * bivariate_hermite(m, n - 1, hx, hy) if n else 0)
        scale = max(abs(lhs), abs(hx * bivariate_hermite(m, n, hx, hy)), 1e-300)
        worst = max(worst, abs(lhs - rhs) / scale)
    checks["Hermite recurrence"] = worst <= 1e-9

    rho = FockDensityMatrix.from_params(CompassParams(1.5, 14, 14), 120)
    checks["rhs is traceless"] = abs(np.trace(lindblad_rhs(rho, HALF))) <= 1e-12
    try:
        out = evolve(rho, HALF, 0.12)
        checks["trace preserved"] = abs(np.trace(out.entries) - 1) <= 1e-10
        checks["Hermiticity preserved"] = np.max(np.abs(out.entries - out.entries.conj().T)) <= 1e-12
    except Exception:
        checks["trace and Hermiticity preserved"] = False

    for e in patches.TABLE2_ROWS:
        result = table2_results[e.i]
        if isinstance(result, Exception):
            checks[f"sign opposition row {e.i} ({type(result).__name__})"] = False
            continue
        m = result[0]
        checks[f"sign opposition row {e.i}"] = m.v0 * m.vdot0 < 0
    failed = record_criterion(8, "property suite", checks)
    assert not failed
