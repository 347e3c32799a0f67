"""
Environment-induced rates and shifts for two atoms on a line perpendicular to
a perfectly reflecting plane.

Everything is dimensionless: rates and energies are measured in units of the
free-space spontaneous emission rate, and the geometry enters only through
``omega_y`` (transition frequency times the distance of the nearer atom from
the plane) and ``omega_L`` (transition frequency times the interatomic
separation).

The image-method correlator yields two spectral functions,

    f1(x) = sin(2x) / (2x)        (dissipative, finite at 0)
    f2(x) = cos(2x) / (2x)        (dispersive, diverges at 0)

from which the five coefficients entering the X-state equations follow:

    b1    = [1 - f1(y)] / 4
    b2    = [1 - f1(y + L)] / 4
    b3    = [f1(L/2) - f1(y + L/2)] / 4
    d     = [f2(L/2) - f2(y + L/2)] / 4
    delta = [f2(y + L) - f2(y)] / 4
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateGeometry

__all__ = [
    "SINC_SERIES_THRESHOLD",
    "F2_MIN_ARGUMENT",
    "f1",
    "f2",
    "GeometryParams",
    "Coefficients",
    "raw_coefficients",
    "compute_coefficients",
]

# below this |2x| the closed form of f1 is replaced by its Taylor series
SINC_SERIES_THRESHOLD = 1e-4
F2_MIN_ARGUMENT = 1e-8


def f1(x: float) -> float:
    """Return ``sin(2x)/(2x)``, equal to 1 at ``x = 0``."""
    z = 2.0 * x
    if abs(z) < SINC_SERIES_THRESHOLD:
        z2 = z * z
        return 1.0 - z2 / 6.0 + z2 * z2 / 120.0
    return math.sin(z) / z


def f2(x: float, x_min: float = F2_MIN_ARGUMENT) -> float:
    """Return ``cos(2x)/(2x)``.

    Raises
    ------
    DegenerateGeometry
        If ``|x| < x_min``; the induced shift diverges like ``1/x``.
    """
    if not abs(x) >= x_min:
        raise DegenerateGeometry(
            f"f2 argument {x!r} below minimum {x_min:g} (coincident points)"
        )
    z = 2.0 * x
    return math.cos(z) / z


@dataclass(frozen=True)
class GeometryParams:
    """Dimensionless geometry plus the two interaction toggles.

    Attributes
    ----------
    omega_y : float
        Transition frequency times the nearer atom's distance to the plane.
    omega_L : float
        Transition frequency times the interatomic separation.
    include_atom_atom : bool
        Keep the induced interatomic coupling ``d`` in the dynamics.
    include_atom_plate : bool
        Keep the shift difference ``delta`` in the dynamics.
    """

    omega_y: float
    omega_L: float
    include_atom_atom: bool = True
    include_atom_plate: bool = True

    def __post_init__(self):
        for name in ("omega_y", "omega_L"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise DegenerateGeometry(f"{name} must be finite and > 0, got {value!r}")

    def with_toggles(self, include_atom_atom: bool, include_atom_plate: bool) -> "GeometryParams":
        return replace(
            self,
            include_atom_atom=include_atom_atom,
            include_atom_plate=include_atom_plate,
        )


@dataclass(frozen=True)
class Coefficients:
    """Rates ``b1, b2, b3`` and energies ``d, delta`` in units of the
    free-space emission rate."""

    b1: float
    b2: float
    b3: float
    d: float
    delta: float

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.b1, self.b2, self.b3, self.d, self.delta)

    def kossakowski_block(self) -> np.ndarray:
        """The 2x2 matrix ``[[b1, b3], [b3, b2]]``; must be positive
        semidefinite for the evolution to be completely positive."""
        return np.array([[self.b1, self.b3], [self.b3, self.b2]])


def raw_coefficients(g: GeometryParams) -> Coefficients:
    """Evaluate all five coefficients ignoring the toggles in ``g``."""
    y, L = g.omega_y, g.omega_L
    half = 0.5 * L
    return Coefficients(
        b1=0.25 * (1.0 - f1(y)),
        b2=0.25 * (1.0 - f1(y + L)),
        b3=0.25 * (f1(half) - f1(y + half)),
        d=0.25 * (f2(half) - f2(y + half)),
        delta=0.25 * (f2(y + L) - f2(y)),
    )


def compute_coefficients(g: GeometryParams) -> Coefficients:
    """Coefficients with ``d`` and ``delta`` zeroed according to the toggles.

    The raw values are always evaluated first, so degenerate geometries are
    rejected regardless of the toggle settings.
    """
    raw = raw_coefficients(g)
    return replace(
        raw,
        d=raw.d if g.include_atom_atom else 0.0,
        delta=raw.delta if g.include_atom_plate else 0.0,
    )
