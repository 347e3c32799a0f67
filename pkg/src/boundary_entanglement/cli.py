"""
Command-line driver.

Configuration comes from an optional JSON file; command-line flags override
file values, which override built-in defaults. Output is CSV only.

Exit codes: 0 success, 1 configuration error, 2 computation error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analysis, oracle
from .coefficients import GeometryParams, compute_coefficients, raw_coefficients
from .dynamics import DEFAULT_DT, InitialState, initial_state, integrate
from .entanglement import concurrence_array
from .errors import ConfigError, SimulationError

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_IO = 0, 1, 2, 3

MODES = ("trajectory", "sweep", "coefficients", "oracle-check")
DEFAULT_T_MAX = {"trajectory": 30.0, "sweep": analysis.DEFAULT_SURVIVAL_T_MAX, "oracle-check": 30.0, "coefficients": None}
ORACLE_TOLERANCE = 1e-8
ORACLE_POINTS = 201
DEFAULT_GRID_START, DEFAULT_GRID_STOP, DEFAULT_GRID_COUNT = 0.05, 3.0, 120

TRAJECTORY_HEADER = [
    "tau", "concurrence", "p_gg", "p_ee", "p_aa", "p_ss",
    "re_rho_as", "im_rho_as", "re_rho_ge", "im_rho_ge",
]
SWEEP_HEADER = ["omega_y", "omega_L", "scenario", "max_concurrence", "tau_of_max", "survival_time", "generated"]
COEFFICIENT_HEADER = ["b1", "b2", "b3", "d", "delta"]


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    count: int
    spacing: str = "linear"
    axis: str = "omega_L"

    def points(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class RunConfig:
    mode: str
    omega_y: Optional[float] = None
    omega_L: Optional[float] = None
    grid: Optional[GridSpec] = None
    initial_state: str = "product10"
    t_max: Optional[float] = None
    dt: float = DEFAULT_DT
    scenarios: tuple[str, ...] = tuple(s.name for s in analysis.SCENARIOS)
    output: str = "out"
    threshold: float = analysis.DEFAULT_THRESHOLD
    precision: int = 12
    workers: int = 1
    sample_every: int = 1
    oracle: bool = False

    def geometry(self) -> GeometryParams:
        return GeometryParams(self.omega_y, self.omega_L)

    def grid_geometries(self) -> list[GeometryParams]:
        fixed = {"omega_y": self.omega_y, "omega_L": self.omega_L}
        out = []
        for x in self.grid.points():
            fixed[self.grid.axis] = float(x)
            out.append(GeometryParams(fixed["omega_y"], fixed["omega_L"]))
        return out

    def scenario_objects(self) -> list[analysis.Scenario]:
        return [analysis.scenario(n) for n in self.scenarios]


_TOP_KEYS = {
    "mode", "geometry", "omega_y", "omega_L", "grid", "initial_state", "t_max", "dt",
    "scenarios", "output", "threshold", "precision", "workers", "sample_every", "oracle",
}
_GEOMETRY_KEYS = {"omega_y", "omega_L", "grid"}
_GRID_KEYS = {"start", "stop", "count", "spacing", "axis"}


def _positive(value, path, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if integer and (not float(value).is_integer()):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if not (math.isfinite(value) and value > 0):
        raise ConfigError(path, f"must be positive and finite, got {value!r}")
    return int(value) if integer else float(value)


def _check_keys(obj, allowed, prefix):
    if not isinstance(obj, dict):
        raise ConfigError(prefix or "<root>", "expected an object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{prefix}.{key}" if prefix else key, "unknown field")


def _parse_grid(raw) -> GridSpec:
    _check_keys(raw, _GRID_KEYS, "geometry.grid")
    for key in ("start", "stop", "count"):
        if key not in raw:
            raise ConfigError(f"geometry.grid.{key}", "required")
    start = _positive(raw["start"], "geometry.grid.start")
    stop = _positive(raw["stop"], "geometry.grid.stop")
    count = _positive(raw["count"], "geometry.grid.count", integer=True)
    spacing = raw.get("spacing", "linear")
    if spacing not in ("linear", "log"):
        raise ConfigError("geometry.grid.spacing", f"expected 'linear' or 'log', got {spacing!r}")
    axis = raw.get("axis", "omega_L")
    if axis not in ("omega_y", "omega_L"):
        raise ConfigError("geometry.grid.axis", f"expected 'omega_y' or 'omega_L', got {axis!r}")
    return GridSpec(start, stop, count, spacing, axis)


def build_config(raw: dict, overrides: Optional[dict] = None) -> RunConfig:
    """Validate a decoded config tree, apply overrides and defaults."""
    _check_keys(raw, _TOP_KEYS, "")
    geometry = dict(raw.get("geometry", {}))
    _check_keys(geometry, _GEOMETRY_KEYS, "geometry")
    for key in _GEOMETRY_KEYS:
        if key in raw:
            geometry[key] = raw[key]
    merged = {k: v for k, v in raw.items() if k not in _GEOMETRY_KEYS and k != "geometry"}
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in _GEOMETRY_KEYS:
            geometry[key] = value
        else:
            merged[key] = value

    mode = merged.get("mode")
    if mode is None and merged.get("oracle") is True:
        mode = "oracle-check"
    if mode not in MODES:
        raise ConfigError("mode", f"expected one of {', '.join(MODES)}, got {mode!r}")

    kw: dict = {"mode": mode}
    for key in ("omega_y", "omega_L"):
        if key in geometry:
            kw[key] = _positive(geometry[key], f"geometry.{key}")
    if "grid" in geometry:
        kw["grid"] = _parse_grid(geometry["grid"])

    if mode == "sweep":
        kw.setdefault("grid", GridSpec(DEFAULT_GRID_START, DEFAULT_GRID_STOP, DEFAULT_GRID_COUNT))
        fixed = "omega_y" if kw["grid"].axis == "omega_L" else "omega_L"
        if fixed not in kw:
            raise ConfigError(f"geometry.{fixed}", "required for mode sweep")
    else:
        for key in ("omega_y", "omega_L"):
            if key not in kw:
                raise ConfigError(f"geometry.{key}", f"required for mode {mode}")

    if "initial_state" in merged:
        name = merged["initial_state"]
        valid = [s.value for s in InitialState if s is not InitialState.CUSTOM]
        if not isinstance(name, str) or name.lower() not in valid:
            raise ConfigError("initial_state", f"expected one of {', '.join(valid)}, got {name!r}")
        kw["initial_state"] = name.lower()

    kw["t_max"] = _positive(merged["t_max"], "t_max") if "t_max" in merged else DEFAULT_T_MAX[mode]
    if "dt" in merged:
        kw["dt"] = _positive(merged["dt"], "dt")
    if kw["t_max"] is not None and kw.get("dt", DEFAULT_DT) > kw["t_max"]:
        raise ConfigError("dt", "must not exceed t_max")
    if "threshold" in merged:
        kw["threshold"] = _positive(merged["threshold"], "threshold")
    for key in ("precision", "workers", "sample_every"):
        if key in merged:
            kw[key] = _positive(merged[key], key, integer=True)
    if kw.get("precision", 12) > 17:
        raise ConfigError("precision", "at most 17 significant digits")

    if "scenarios" in merged:
        names = merged["scenarios"]
        if isinstance(names, str):
            names = [n.strip() for n in names.split(",") if n.strip()]
        if not isinstance(names, list) or not names:
            raise ConfigError("scenarios", "expected a non-empty list")
        known = [s.name for s in analysis.SCENARIOS]
        for i, n in enumerate(names):
            if n not in known:
                raise ConfigError(f"scenarios[{i}]", f"unknown scenario {n!r}")
        if len(set(names)) != len(names):
            raise ConfigError("scenarios", "duplicate scenario")
        kw["scenarios"] = tuple(names)

    if "output" in merged:
        if not isinstance(merged["output"], str) or not merged["output"]:
            raise ConfigError("output", "expected a non-empty path")
        kw["output"] = merged["output"]
    if "oracle" in merged:
        if not isinstance(merged["oracle"], bool):
            raise ConfigError("oracle", "expected a boolean")
        kw["oracle"] = merged["oracle"]
    return RunConfig(**kw)


def parse_config(source: str, overrides: Optional[dict] = None) -> RunConfig:
    """Parse a JSON config document into a validated :class:`RunConfig`."""
    try:
        raw = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from None
    return build_config(raw, overrides)


def fmt(x: float, precision: int) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    # normalise -0.0 so repeated runs and toggled scenarios print identically
    return f"{x + 0.0:.{precision}g}"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _run_trajectory(cfg: RunConfig, out: Path, log) -> int:
    g = cfg.geometry()
    s0 = initial_state(cfg.initial_state)
    p = cfg.precision
    for sc in cfg.scenario_objects():
        gs = sc.apply(g)
        traj = integrate(s0, compute_coefficients(gs), cfg.t_max, cfg.dt, geometry=gs)
        conc = concurrence_array(traj.states)[2]
        idx = np.arange(0, len(traj), cfg.sample_every)
        if idx[-1] != len(traj) - 1:
            idx = np.append(idx, len(traj) - 1)
        rows = (
            [fmt(traj.tau[i], p), fmt(conc[i], p)] + [fmt(v, p) for v in traj.states[i]]
            for i in idx
        )
        path = out / f"trajectory_{sc.name}.csv"
        _write_csv(path, TRAJECTORY_HEADER, rows)
        log(f"wrote {path}")
    return EXIT_OK


def _run_sweep(cfg: RunConfig, out: Path, log) -> int:
    results = analysis.sweep(
        cfg.grid_geometries(),
        cfg.initial_state,
        cfg.t_max,
        cfg.dt,
        cfg.threshold,
        cfg.scenario_objects(),
        workers=cfg.workers,
    )
    p = cfg.precision
    rows = [
        [fmt(r.omega_y, p), fmt(r.omega_L, p), r.scenario, fmt(r.max_concurrence, p),
         fmt(r.tau_of_max, p), fmt(r.survival_time, p), "true" if r.generated else "false"]
        for r in results
    ]
    path = out / "sweep.csv"
    _write_csv(path, SWEEP_HEADER, rows)
    log(f"wrote {path}")
    failed = [r for r in results if not r.ok]
    for r in failed:
        print(f"error: {r.error}", file=sys.stderr)
    return EXIT_COMPUTE if failed else EXIT_OK


def _run_coefficients(cfg: RunConfig, out: Path, log) -> int:
    raw = raw_coefficients(cfg.geometry())
    path = out / "coefficients.csv"
    _write_csv(path, COEFFICIENT_HEADER, [[fmt(v, cfg.precision) for v in raw.as_tuple()]])
    log(f"wrote {path}")
    return EXIT_OK


def oracle_check(cfg: RunConfig) -> tuple[float, list[str]]:
    """Max elementwise deviation between the RK4 path and the exact
    exponential on an evenly spaced subset of samples, per scenario."""
    g = cfg.geometry()
    s0 = initial_state(cfg.initial_state)
    rho0 = oracle.x_state_to_matrix(s0)
    lines = []
    worst = 0.0
    for sc in cfg.scenario_objects():
        c = compute_coefficients(sc.apply(g))
        traj = integrate(s0, c, cfg.t_max, cfg.dt)
        idx = np.unique(np.linspace(0, len(traj) - 1, ORACLE_POINTS).round().astype(int))
        rhos = oracle.evolve_on_grid(rho0, oracle.build_liouvillian(c), traj.tau[idx])
        dev = 0.0
        for k, rho in zip(idx, rhos):
            ode = oracle.x_state_to_matrix(traj[k][1])
            dev = max(dev, float(np.max(np.abs(rho - ode))))
        worst = max(worst, dev)
        lines.append(f"{sc.name}: max deviation {dev:.3e} over {len(idx)} samples")
    status = "PASS" if worst < ORACLE_TOLERANCE else "FAIL"
    lines.append(
        f"oracle-check omega_y={g.omega_y:g} omega_L={g.omega_L:g} state={cfg.initial_state} "
        f"t_max={cfg.t_max:g}: max deviation {worst:.3e} ({status}, tolerance {ORACLE_TOLERANCE:g})"
    )
    return worst, lines


def _run_oracle(cfg: RunConfig, out: Path, log) -> int:
    worst, lines = oracle_check(cfg)
    report = "\n".join(lines) + "\n"
    path = out / "oracle_check.txt"
    with open(path, "w") as fh:
        fh.write(report)
    sys.stdout.write(report)
    return EXIT_OK if worst < ORACLE_TOLERANCE else EXIT_COMPUTE


_RUNNERS = {
    "trajectory": _run_trajectory,
    "sweep": _run_sweep,
    "coefficients": _run_coefficients,
    "oracle-check": _run_oracle,
}


def run(cfg: RunConfig, log=None) -> int:
    """Execute a validated configuration and return the process exit code."""
    log = log or (lambda msg: print(msg, file=sys.stderr))
    out = Path(cfg.output)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"I/O error: cannot create {out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    try:
        code = _RUNNERS[cfg.mode](cfg, out, log)
        if cfg.oracle and cfg.mode != "oracle-check" and code == EXIT_OK and cfg.omega_L is not None:
            code = _run_oracle(_with_oracle_defaults(cfg), out, log)
        return code
    except OSError as exc:
        print(f"I/O error: {exc.filename or out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except (SimulationError, ArithmeticError, ValueError) as exc:
        print(f"computation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


def _with_oracle_defaults(cfg: RunConfig) -> RunConfig:
    return replace(cfg, mode="oracle-check", t_max=cfg.t_max or DEFAULT_T_MAX["oracle-check"])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="boundary-entanglement",
        description="Entanglement dynamics of two atoms near a reflecting plane.",
        epilog="Flags override values from --config, which override built-in defaults.",
    )
    p.add_argument("config", nargs="?", help="JSON configuration file")
    p.add_argument("--config", dest="config_opt", metavar="FILE", help="JSON configuration file")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--omega-y", type=float, dest="omega_y")
    p.add_argument("--omega-l", type=float, dest="omega_L")
    p.add_argument("--initial-state", dest="initial_state")
    p.add_argument("--t-max", type=float, dest="t_max")
    p.add_argument("--dt", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--precision", type=int)
    p.add_argument("--scenarios", help="comma-separated subset of full,none,atom_atom_only,atom_plate_only")
    p.add_argument("--workers", type=int)
    p.add_argument("--sample-every", type=int, dest="sample_every")
    p.add_argument("--out", dest="output")
    p.add_argument("--oracle", action="store_true", default=None,
                   help="also compare the ODE against the exact exponential")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    path = args.config_opt or args.config
    overrides = {k: v for k, v in vars(args).items() if k not in ("config", "config_opt")}
    try:
        source = Path(path).read_text() if path else "{}"
    except OSError as exc:
        print(f"I/O error: {path}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = parse_config(source, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
