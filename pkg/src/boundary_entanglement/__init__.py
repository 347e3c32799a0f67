"""Entanglement dynamics of two atoms near a perfectly reflecting plane."""

from .coefficients import Coefficients, GeometryParams, compute_coefficients, f1, f2, raw_coefficients
from .dynamics import InitialState, Trajectory, XState, initial_state, integrate, rhs
from .entanglement import (
    ConcurrenceSample,
    concurrence,
    early_slope_generation,
    series_k1_antisymmetric,
    series_k1_product10,
)
from .analysis import SCENARIOS, Scenario, SweepResult, max_concurrence, survival_time, sweep
from .errors import (
    ConfigError,
    DegenerateGeometry,
    IntegrationDiverged,
    InvalidState,
    NonPhysicalState,
    OracleDivergence,
    SimulationError,
    WindowTooShort,
)

__version__ = "0.1.0"
