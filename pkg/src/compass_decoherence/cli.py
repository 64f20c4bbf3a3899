"""Command-line interface.

Exit codes: 0 success, 1 numerical or tolerance failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import lindblad_oracle as oracle
from . import patch_dynamics as patches
from . import phase_space_analysis as analysis
from .errors import CompassError, ConfigurationError, NumericalError
from .states import CompassParams, ReservoirParams, default_cutoff, overlap_F
from .wigner_analytic import GridSpec, PhasePoint, evolved_values, wigner_evolved, wigner_grid

log = logging.getLogger("compass_decoherence")

NORMALIZATION_TOL = 5e-4
ORACLE_TOL_LOW_ORDER = 1e-6
ORACLE_TOL_HIGH_ORDER = 1e-4
ORACLE_TOL_VACUUM = 1e-10
PURITY_PATH_TOL = 1e-4


class ToleranceFailure(NumericalError):
    """A reproduction or comparison run finished outside its tolerance."""


# -- configuration -------------------------------------------------------------------

@dataclass
class RunConfig:
    state: CompassParams
    reservoir: ReservoirParams
    grid: dict = field(default_factory=lambda: {"L": 6.0, "n": 301})
    tau_schedule: list = field(default_factory=lambda: [0.0])
    output_dir: Path | None = None
    format: str = "csv"

    def __post_init__(self):
        L, n = self.grid["L"], self.grid["n"]
        if not (isinstance(L, (int, float)) and L > 0):
            raise ConfigurationError(f"grid L must be > 0, got {L}")
        if not isinstance(n, int) or n < 3 or n % 2 == 0:
            raise ConfigurationError(f"grid n must be an odd integer >= 3, got {n}")
        taus = list(self.tau_schedule)
        if any((not math.isfinite(t)) or t < 0 for t in taus) or taus != sorted(taus):
            raise ConfigurationError(f"tau schedule must be non-negative and sorted, got {taus}")
        if self.format not in ("csv", "json"):
            raise ConfigurationError(f"format must be csv or json, got {self.format!r}")

    def grid_spec(self) -> GridSpec:
        return GridSpec(float(self.grid["L"]), int(self.grid["n"]))


_CONFIG_KEYS = {"x0", "p", "q", "nbar", "tau", "tau_schedule", "grid_l", "grid_n", "theta",
                "threads", "out", "format", "cutoff"}


def load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError("config file must hold a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    return data


def _setting(args, config: dict, name: str, default: Any = None) -> Any:
    """Flag value if given, else config value, else default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    return config.get(name, default)


def build_config(args, config: dict, *, default_grid_for_state: bool = True) -> RunConfig:
    try:
        state = CompassParams(float(_setting(args, config, "x0", 3.0)),
                              int(_setting(args, config, "p", 0)), int(_setting(args, config, "q", 0)))
        reservoir = ReservoirParams(float(_setting(args, config, "nbar", 0.5)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from exc
    default = analysis.default_grid(state) if default_grid_for_state else GridSpec(6.0, 301)
    grid = {"L": float(_setting(args, config, "grid_l", default.half_width)),
            "n": int(_setting(args, config, "grid_n", default.n))}
    schedule = _setting(args, config, "tau_schedule")
    if schedule is None:
        schedule = [float(_setting(args, config, "tau", 0.0))]
    out = _setting(args, config, "out")
    return RunConfig(state, reservoir, grid, [float(t) for t in schedule],
                     Path(out) if out else None, _setting(args, config, "format", "csv"))


# -- output --------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return f"{float(value):.6e}"


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if value is None or isinstance(value, str):
        return value
    return float(f"{float(value):.6e}")


def write_table(name: str, columns: Sequence[str], rows: Sequence[Sequence], cfg: RunConfig,
                meta: dict | None = None, footer: dict | None = None) -> None:
    """Write a table as CSV or JSON to ``<out>/<name>.<ext>`` or stdout."""
    meta = dict(meta or {})
    meta.setdefault("X0", cfg.state.X0)
    meta.setdefault("p", cfg.state.p)
    meta.setdefault("q", cfg.state.q)
    meta.setdefault("nbar", cfg.reservoir.n_bar)
    if cfg.format == "json":
        doc = {"meta": {k: _json_value(v) for k, v in meta.items()},
               "columns": {c: [_json_value(r[k]) for r in rows] for k, c in enumerate(columns)}}
        if footer:
            doc["footer"] = {k: _json_value(v) for k, v in footer.items()}
        text = json.dumps(doc, indent=1, sort_keys=False) + "\n"
    else:
        lines = [",".join(columns)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        if footer:
            lines += [f"# {k},{_fmt(v)}" for k, v in footer.items()]
        text = "\n".join(lines) + "\n"
    if cfg.output_dir is None:
        sys.stdout.write(text)
    else:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        path = cfg.output_dir / f"{name}.{cfg.format}"
        path.write_text(text)
        log.info("wrote %s", path)


def _grid_rows(grid) -> list:
    X, Y = grid.mesh()
    return [(x, y, w) for x, y, w in zip(X.ravel(), Y.ravel(), grid.values.ravel())]


def _normalization_footer(grid) -> dict:
    mass = analysis.integrate_2d(grid, "identity", check=False)
    if abs(mass - 1) > NORMALIZATION_TOL:
        raise ToleranceFailure(f"grid integrates to {mass:.6f}; widen it (--grid-l) or refine (--grid-n)")
    return {"integral_W": mass}


# -- subcommands ---------------------------------------------------------------------

def cmd_wigner(args, config):
    cfg = build_config(args, config)
    tau = cfg.tau_schedule[0]
    if args.point is not None:
        value = wigner_evolved(cfg.state, cfg.reservoir, tau, PhasePoint(*args.point))
        print(f"{value:.6f}")
        return 0
    grid = wigner_grid(cfg.state, cfg.reservoir, tau, cfg.grid_spec(), threads=args.threads)
    write_table("wigner", ["x", "y", "W"], _grid_rows(grid), cfg, {"tau": tau}, _normalization_footer(grid))
    return 0


def cmd_evolve(args, config):
    cfg = build_config(args, config)
    rows = []
    footer = {}
    for tau in cfg.tau_schedule:
        grid = wigner_grid(cfg.state, cfg.reservoir, tau, cfg.grid_spec(), threads=args.threads)
        rows += [(tau, x, y, w) for x, y, w in _grid_rows(grid)]
        footer[f"integral_W_tau_{tau:g}"] = _normalization_footer(grid)["integral_W"]
    write_table("evolve", ["tau", "x", "y", "W"], rows, cfg, {}, footer)
    return 0


def cmd_tomogram(args, config):
    cfg = build_config(args, config)
    theta = float(_setting(args, config, "theta", 0.0))
    rows = []
    for tau in cfg.tau_schedule:
        tomo = analysis.tomogram(cfg.state, cfg.reservoir, tau, theta)
        rows += [(tau, theta, x, r) for x, r in zip(tomo.x_values, tomo.r_values)]
    write_table("tomogram", ["tau", "theta", "x", "R"], rows, cfg)
    return 0


def cmd_negativity(args, config):
    cfg = build_config(args, config)
    report = analysis.negativity_curve(cfg.state, cfg.reservoir, cfg.tau_schedule, cfg.grid_spec(),
                                       threads=args.threads)
    write_table("negativity", ["tau", "delta"], list(zip(report.tau_values, report.delta_values)), cfg)
    return 0


def cmd_entropy(args, config):
    cfg = build_config(args, config)
    report = analysis.entropy_curve(cfg.state, cfg.reservoir, cfg.tau_schedule, cfg.grid_spec(),
                                    threads=args.threads)
    write_table("entropy", ["tau", "S"], list(zip(report.tau_values, report.S_values)), cfg,
                footer={"S0": report.S0, "S_inf": report.S_inf})
    return 0


def cmd_central_peak(args, config):
    cfg = build_config(args, config)
    rows = [(tau, analysis.central_ratio_d(cfg.state, cfg.reservoir, tau)) for tau in cfg.tau_schedule]
    write_table("central_peak", ["tau", "d"], rows, cfg)
    return 0


def cmd_patch(args, config):
    cfg = build_config(args, config)
    m, contour = patches.central_patch_metrics(cfg.state, cfg.reservoir)
    write_table("patch", ["X0", "p", "q", "a_plus_0", "v_0", "vdot_0", "vdot_over_v", "adot_plus_0"],
                [(cfg.state.X0, cfg.state.p, cfg.state.q, m.a0, m.v0, m.vdot0, m.vdot_rel, m.adot0)], cfg,
                {"sign": m.sign})
    if cfg.output_dir is not None:
        write_table("contour", ["x", "y", "contour_id"], [(x, y, 0) for x, y in contour.points], cfg)
    return 0


def cmd_overlap_sweep(args, config):
    cfg = build_config(args, config)
    start, stop, step = args.x0_range
    if not (step > 0 and stop >= start >= 0):
        raise ConfigurationError("--x0-range needs 0 <= start <= stop and step > 0")
    x0s = np.round(np.arange(start, stop + 0.5 * step, step), 12)
    cutoff = _setting(args, config, "cutoff")
    rows = [(x0, overlap_F(CompassParams(float(x0), cfg.state.p, cfg.state.q), cutoff)) for x0 in x0s]
    write_table("overlap", ["X0", "F"], rows, cfg)
    return 0


def oracle_tolerance(params: CompassParams) -> float:
    if params.X0 == 0 and params.p == 0 and params.q == 0:
        return ORACLE_TOL_VACUUM
    return ORACLE_TOL_LOW_ORDER if max(params.p, params.q) <= 14 else ORACLE_TOL_HIGH_ORDER


def default_oracle_cutoff(params: CompassParams) -> int:
    floor = 120 if max(params.p, params.q) <= 14 else 160
    return max(default_cutoff(params), floor)


def oracle_compare(cfg: RunConfig, cutoff: int | None = None) -> list[tuple]:
    """Rows (tau, max_abs, rms, S_wigner, S_oracle) comparing analytic and Fock evaluations."""
    cutoff = cutoff or default_oracle_cutoff(cfg.state)
    rho0 = oracle.FockDensityMatrix.from_params(cfg.state, cutoff)
    axis = cfg.grid_spec().axis()
    X, Y = np.meshgrid(axis, axis)
    rows = []
    previous_tau, rho = 0.0, rho0
    for tau in cfg.tau_schedule:
        rho = oracle.evolve(rho, cfg.reservoir, tau - previous_tau)
        previous_tau = tau
        diff = oracle.wigner_from_density(rho, (X, Y)) - evolved_values(cfg.state, cfg.reservoir, tau, X, Y)
        s_wigner = analysis.linear_entropy(cfg.state, cfg.reservoir, tau)
        s_oracle = 1 - oracle.purity(rho)
        rows.append((tau, float(np.abs(diff).max()), float(np.sqrt(np.mean(diff ** 2))), s_wigner, s_oracle))
    return rows


def cmd_oracle_compare(args, config):
    cfg = build_config(args, config, default_grid_for_state=False)
    cutoff = _setting(args, config, "cutoff")
    rows = oracle_compare(cfg, cutoff)
    tol = oracle_tolerance(cfg.state)
    rows = [r + (r[1] <= tol and abs(r[3] - r[4]) <= PURITY_PATH_TOL,) for r in rows]
    write_table("oracle_compare", ["tau", "max_abs", "rms", "S_wigner", "S_oracle", "pass"], rows, cfg,
                {"tolerance": tol, "purity_tolerance": PURITY_PATH_TOL})
    failed = [r[0] for r in rows if not r[-1]]
    if failed:
        raise ToleranceFailure(f"oracle comparison outside tolerance at tau = {failed}")
    return 0


# -- reproduction recipes -----------------------------------------------------------------

def reproduce_table1(args, config, cfg: RunConfig) -> int:
    rows = [args.row] if args.row else None
    prefactor = args.entropy_prefactor if args.entropy_prefactor is not None else analysis.ENTROPY_PREFACTOR
    results = analysis.table1_pipeline(rows, prefactor=prefactor, threads=args.threads)
    out = [(r.entry.i, r.entry.X0, r.entry.p, r.entry.q, r.entry.n_bar, r.S0, r.delta_percent,
            r.entry.S0_reference, r.entry.delta_reference, r.passed) for r in results]
    write_table("table1", ["i", "X0", "p", "q", "nbar", "S0", "Delta_percent", "S0_reference",
                           "Delta_percent_reference", "pass"], out, cfg,
                {"S0_rtol": analysis.TABLE1_S0_RTOL, "delta_atol": analysis.TABLE1_DELTA_ATOL})
    failed = [r.entry.i for r in results if not r.passed]
    if failed:
        raise ToleranceFailure(f"table1 rows outside tolerance: {failed}")
    return 0


def reproduce_table2(args, config, cfg: RunConfig) -> int:
    entries = [e for e in patches.TABLE2_ROWS if not args.row or e.i == args.row]
    if not entries:
        raise ConfigurationError(f"table2 has rows 1..{len(patches.TABLE2_ROWS)}, got {args.row}")
    out, failed = [], []
    for e in entries:
        m = patches.table2_pipeline([CompassParams(e.X0, e.p, e.q)])[0]
        checks = patches.table2_row_checks(e, m)
        ok = all(checks.values())
        if not ok:
            failed.append((e.i, [k for k, v in checks.items() if not v]))
        out.append((e.i, e.X0, e.p, e.q, m.a0, m.v0, m.vdot0, m.vdot_rel, m.adot0,
                    e.a_plus_0, e.v_0, e.vdot_0, e.vdot_over_v, e.adot_plus_0, ok))
    write_table("table2", ["i", "X0", "p", "q", "a_plus_0", "v_0", "vdot_0", "vdot_over_v", "adot_plus_0",
                           "a_plus_0_reference", "v_0_reference", "vdot_0_reference",
                           "vdot_over_v_reference", "adot_plus_0_reference", "pass"], out, cfg,
                {"nbar": 0.5})
    if failed:
        raise ToleranceFailure(f"table2 rows outside tolerance: {failed}")
    return 0


def _benchmark_states():
    return [(CompassParams(e.X0, e.p, e.q), ReservoirParams(e.n_bar)) for e in analysis.TABLE1_ROWS]


def _figure_schedule(cfg: RunConfig) -> list[float]:
    if len(cfg.tau_schedule) > 1:
        return cfg.tau_schedule
    return [0.0] + list(np.logspace(-3, 1, 20))


def reproduce_fig1d(args, config, cfg: RunConfig) -> int:
    p = args.p if args.p is not None else 14
    q = args.q if args.q is not None else 14
    x0s = np.round(np.arange(0.25, 6.0 + 1e-9, 0.25), 12)
    rows = [(x0, p, q, overlap_F(CompassParams(float(x0), p, q))) for x0 in x0s]
    write_table("fig1d", ["X0", "p", "q", "F"], rows, cfg)
    return 0


def reproduce_fig2(args, config, cfg: RunConfig) -> int:
    vacuum_bath = ReservoirParams(0.5)
    cases = [("a", CompassParams(x0, 0, 0)) for x0 in np.arange(1.0, 8.01, 0.5)]
    cases += [("b", CompassParams(1.5, p, 14)) for p in range(10, 21, 2)]
    cases += [("c", CompassParams(1.5, 14, q)) for q in range(10, 21, 2)]
    rows = [(panel, s.X0, s.p, s.q, analysis.negativity(s, vacuum_bath, 0.0, threads=args.threads))
            for panel, s in cases]
    write_table("fig2", ["panel", "X0", "p", "q", "delta"], rows, cfg)
    return 0


def _curve_figure(name: str, column: str, fn, args, cfg: RunConfig) -> int:
    taus = _figure_schedule(cfg)
    rows = []
    worst = 0.0
    for state, bath in _benchmark_states():
        spec = analysis.default_grid(state)
        for tau in taus:
            grid = analysis.state_grid(state, bath, tau, spec, args.threads)
            worst = max(worst, abs(analysis.integrate_2d(grid) - 1))
            rows.append((state.X0, state.p, state.q, bath.n_bar, tau, fn(grid)))
    if worst > NORMALIZATION_TOL:
        raise ToleranceFailure(f"grid normalization off by {worst:.2e}")
    write_table(name, ["X0", "p", "q", "nbar", "tau", column], rows, cfg,
                footer={"max_normalization_error": worst})
    return 0


def reproduce_fig5(args, config, cfg):
    return _curve_figure("fig5", "delta", analysis.grid_negativity, args, cfg)


def reproduce_fig6(args, config, cfg):
    return _curve_figure("fig6", "S", analysis.grid_linear_entropy, args, cfg)


_RECIPES = {
    "table1": reproduce_table1,
    "table2": reproduce_table2,
    "fig1d": reproduce_fig1d,
    "fig2": reproduce_fig2,
    "fig5": reproduce_fig5,
    "fig6": reproduce_fig6,
}


def cmd_reproduce(args, config):
    cfg = build_config(args, config)
    return _RECIPES[args.target](args, config, cfg)


# -- parser ----------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--x0", type=float, help="coherent amplitude scale X0 (>= 0)")
    p.add_argument("--p", type=int, help="photons added per component")
    p.add_argument("--q", type=int, help="photons subtracted per component")
    p.add_argument("--nbar", type=float, help="mean thermal photon number of the bath")
    p.add_argument("--tau", type=float, help="dimensionless time")
    p.add_argument("--tau-schedule", dest="tau_schedule", type=float, nargs="+",
                   help="sorted list of times (overrides --tau)")
    p.add_argument("--grid-l", dest="grid_l", type=float, help="grid half-width L")
    p.add_argument("--grid-n", dest="grid_n", type=int, help="grid points per axis (odd)")
    p.add_argument("--theta", type=float, help="tomogram quadrature angle in radians")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"], help="output format")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--cutoff", type=int, help="Fock cutoff for oracle and overlap commands")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compass-decoherence",
                                     description="Phase-space decoherence of compass states.")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "wigner": (cmd_wigner, "Wigner function on a grid or at --point"),
        "evolve": (cmd_evolve, "Wigner grids over --tau-schedule"),
        "tomogram": (cmd_tomogram, "marginal along --theta"),
        "negativity": (cmd_negativity, "Wigner negativity over --tau-schedule"),
        "entropy": (cmd_entropy, "linear entropy curve and initial rate"),
        "central-peak": (cmd_central_peak, "central-peak ratio d(tau)"),
        "patch": (cmd_patch, "central patch area, volume and rates at tau = 0"),
        "overlap-sweep": (cmd_overlap_sweep, "overlap with the plain compass state over X0"),
        "oracle-compare": (cmd_oracle_compare, "analytic vs Fock-space Wigner comparison"),
        "reproduce": (cmd_reproduce, "benchmark tables and figure data"),
    }
    for name, (fn, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.set_defaults(handler=fn)
        if name == "wigner":
            p.add_argument("--point", type=float, nargs=2, metavar=("X", "Y"), help="single phase-space point")
        if name == "overlap-sweep":
            p.add_argument("--x0-range", dest="x0_range", type=float, nargs=3, default=(2.0, 6.0, 0.5),
                           metavar=("START", "STOP", "STEP"))
        if name == "reproduce":
            p.add_argument("target", choices=sorted(_RECIPES))
            p.add_argument("--row", type=int, help="single table row")
            p.add_argument("--entropy-prefactor", dest="entropy_prefactor", type=float,
                           help=argparse.SUPPRESS)
    return parser


def _configure_logging() -> None:
    level = os.environ.get("COMPASS_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def run(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config_file(args.config)
        return args.handler(args, config)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CompassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
