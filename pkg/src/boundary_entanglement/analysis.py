"""
Trajectory observables and geometry sweeps over the four interaction
scenarios.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .coefficients import GeometryParams, compute_coefficients
from .dynamics import DEFAULT_DT, Trajectory, initial_state, integrate
from .entanglement import concurrence_array
from .errors import SimulationError, WindowTooShort

__all__ = [
    "Scenario",
    "SCENARIOS",
    "scenario",
    "concurrence_series",
    "max_concurrence",
    "survival_time",
    "dark_intervals",
    "SweepResult",
    "sweep",
    "run_scenarios",
    "DEFAULT_THRESHOLD",
    "DEFAULT_SURVIVAL_T_MAX",
]

DEFAULT_THRESHOLD = 1e-9
DEFAULT_SURVIVAL_T_MAX = 50.0
TIE_TOL = 1e-9
CROSSING_RESOLUTION = 1e-6


@dataclass(frozen=True)
class Scenario:
    name: str
    include_atom_atom: bool
    include_atom_plate: bool

    def apply(self, g: GeometryParams) -> GeometryParams:
        return g.with_toggles(self.include_atom_atom, self.include_atom_plate)


SCENARIOS = (
    Scenario("full", True, True),
    Scenario("none", False, False),
    Scenario("atom_atom_only", True, False),
    Scenario("atom_plate_only", False, True),
)
_BY_NAME = {s.name: s for s in SCENARIOS}


def scenario(name: str) -> Scenario:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; expected one of {sorted(_BY_NAME)}") from None


def concurrence_series(traj: Trajectory) -> np.ndarray:
    return concurrence_array(traj.states)[2]


def _conc_after(traj: Trajectory, i: int, h: float) -> float:
    return float(concurrence_array(traj.advance_from(i, h))[2])


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, a: float, b: float, tol: float = 1e-10) -> tuple[float, float]:
    """Golden-section search for the maximum of a unimodal ``f`` on [a, b]."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def max_concurrence(traj: Trajectory, conc: Optional[np.ndarray] = None) -> tuple[float, float]:
    """Largest concurrence along the trajectory and the time it is reached.

    The best sample is refined by a golden-section search over a single
    re-integrated RK4 step spanning its two neighbours. Among samples within
    1e-9 of the maximum, the earliest one wins.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    conc = concurrence_series(traj) if conc is None else conc
    top = float(conc.max())
    k = int(np.argmax(conc >= top - TIE_TOL))
    value, tau = float(conc[k]), float(traj.tau[k])
    if value <= 0.0 or k == 0 or k == len(conc) - 1:
        return value, tau

    t0 = float(traj.tau[k - 1])
    span = float(traj.tau[k + 1]) - t0
    h, refined = _golden_max(lambda h: _conc_after(traj, k - 1, h), 0.0, span)
    if refined > value:
        return refined, t0 + h
    return value, tau


def _refine_crossing(traj: Trajectory, i: int, threshold: float) -> float:
    """Time in ``[tau_i, tau_{i+1}]`` where concurrence falls through
    ``threshold``, by bisection on re-integrated steps."""
    lo, hi = 0.0, float(traj.tau[i + 1] - traj.tau[i])
    while hi - lo > CROSSING_RESOLUTION:
        mid = 0.5 * (lo + hi)
        if _conc_after(traj, i, mid) > threshold:
            lo = mid
        else:
            hi = mid
    return float(traj.tau[i]) + 0.5 * (lo + hi)


def survival_time(
    traj: Trajectory,
    threshold: float = DEFAULT_THRESHOLD,
    conc: Optional[np.ndarray] = None,
) -> float:
    """Time after which concurrence stays at or below ``threshold``.

    Returns 0 if the threshold is never exceeded and ``math.inf`` if the
    concurrence is still above it, and decreasing, at the end of the window.

    Raises
    ------
    WindowTooShort
        Concurrence is above ``threshold`` at ``t_max`` and not decreasing.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    conc = concurrence_series(traj) if conc is None else conc
    above = conc > threshold
    if not above.any():
        return 0.0
    if above[-1]:
        if len(conc) < 2 or conc[-1] - conc[-2] >= 0.0:
            raise WindowTooShort(
                f"concurrence {conc[-1]:.3g} still above threshold and not decaying at tau={traj.t_max:g}"
            )
        return math.inf
    last = int(np.flatnonzero(above)[-1])
    return _refine_crossing(traj, last, threshold)


def dark_intervals(traj: Trajectory, threshold: float = DEFAULT_THRESHOLD, conc=None) -> list[tuple[float, float]]:
    """Sample-resolution intervals where concurrence vanishes between two
    entangled stretches (revivals)."""
    conc = concurrence_series(traj) if conc is None else conc
    above = conc > threshold
    idx = np.flatnonzero(above)
    if len(idx) == 0:
        return []
    out = []
    gaps = np.flatnonzero(np.diff(idx) > 1)
    for g in gaps:
        out.append((float(traj.tau[idx[g] + 1]), float(traj.tau[idx[g + 1] - 1])))
    return out


@dataclass(frozen=True)
class SweepResult:
    """Summary of one (geometry point, scenario) integration.

    ``survival_time`` is ``math.inf`` when entanglement outlives the window.
    ``error`` holds a diagnostic when this point failed; the fields that
    could not be computed are then NaN (a window too short to classify
    survival still reports the maximum).
    """

    omega_y: float
    omega_L: float
    scenario: str
    max_concurrence: float
    tau_of_max: float
    survival_time: float
    generated: bool
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def run_scenarios(
    g: GeometryParams,
    s0,
    t_max: float,
    dt: float = DEFAULT_DT,
    scenarios: Sequence[Scenario] = SCENARIOS,
) -> dict[str, Trajectory]:
    """Integrate one geometry under each scenario; keys are scenario names."""
    s0 = initial_state(s0) if not hasattr(s0, "to_array") else s0
    out = {}
    for sc in scenarios:
        gs = sc.apply(g)
        out[sc.name] = integrate(s0, compute_coefficients(gs), t_max, dt, geometry=gs)
    return out


def _describe(g: GeometryParams, sc: Scenario, exc: Exception) -> str:
    return f"omega_y={g.omega_y!r}, omega_L={g.omega_L!r}, scenario={sc.name}: {type(exc).__name__}: {exc}"


def _evaluate_point(args) -> list[SweepResult]:
    g, s0, t_max, dt, threshold, scenarios = args
    nan = math.nan
    results = []
    for sc in scenarios:
        try:
            gs = sc.apply(g)
            traj = integrate(s0, compute_coefficients(gs), t_max, dt, geometry=gs)
            conc = concurrence_series(traj)
            value, tau = max_concurrence(traj, conc)
        except (SimulationError, ArithmeticError, ValueError) as exc:
            results.append(SweepResult(g.omega_y, g.omega_L, sc.name, nan, nan, nan, False, _describe(g, sc, exc)))
            continue
        generated = bool(value > threshold)
        try:
            surv, err = survival_time(traj, threshold, conc), None
        except WindowTooShort as exc:
            # the maximum over the window is still meaningful
            surv, err = nan, _describe(g, sc, exc)
        results.append(SweepResult(g.omega_y, g.omega_L, sc.name, value, tau, surv, generated, err))
    return results


def sweep(
    grid: Iterable[GeometryParams],
    s0,
    t_max: float = DEFAULT_SURVIVAL_T_MAX,
    dt: float = DEFAULT_DT,
    threshold: float = DEFAULT_THRESHOLD,
    scenarios: Sequence[Scenario] = SCENARIOS,
    workers: int = 1,
) -> list[SweepResult]:
    """Maximum concurrence and survival time for every grid point and scenario.

    Results come in grid order, and within a point in the order of
    ``scenarios``, whatever the completion order of parallel workers. A
    failing point yields results with ``error`` set instead of aborting.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty grid")
    s0 = initial_state(s0) if not hasattr(s0, "to_array") else s0
    tasks = [(g, s0, t_max, dt, threshold, tuple(scenarios)) for g in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_evaluate_point, tasks))
    else:
        chunks = [_evaluate_point(t) for t in tasks]
    return [r for chunk in chunks for r in chunk]
