"""
Concurrence of X states and short-time series of the concurrence coefficient.

For an X state the concurrence is ``max(0, K1, K2)`` with

    K1 = sqrt((p_aa - p_ss)^2 - (rho_AS - rho_SA)^2) - 2 sqrt(p_gg p_ee)
    K2 = 2 |rho_GE| - sqrt((p_aa + p_ss)^2 - (rho_AS + rho_SA)^2)

Since ``rho_AS - rho_SA = 2i Im(rho_AS)`` the first radicand is a sum of
squares; the second one can only go negative through round-off or a
non-physical state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coefficients import Coefficients
from .dynamics import XState
from .errors import NonPhysicalState

__all__ = [
    "ConcurrenceSample",
    "concurrence",
    "concurrence_array",
    "early_slope_generation",
    "series_k1_product10",
    "series_k1_antisymmetric",
]

RADICAND_TRIPWIRE = -1e-6


@dataclass(frozen=True)
class ConcurrenceSample:
    k1: float
    k2: float
    concurrence: float


def concurrence_array(states: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ``(k1, k2, concurrence)`` for states of shape ``(..., 8)``.

    Radicands are clamped at zero; anything below -1e-6 raises
    :class:`NonPhysicalState`.
    """
    states = np.asarray(states, dtype=float)
    gg, ee, aa, ss, xr, xi, gr, gi = np.moveaxis(states, -1, 0)

    rad1 = (aa - ss) ** 2 + 4.0 * xi**2
    rad2 = (aa + ss) ** 2 - 4.0 * xr**2
    pge = gg * ee
    for name, rad in (("K1", rad1), ("K2", rad2), ("p_gg*p_ee", pge)):
        if np.any(rad < RADICAND_TRIPWIRE):
            raise NonPhysicalState(f"{name} radicand {np.min(rad):.3g} below tolerance")

    k1 = np.sqrt(np.maximum(rad1, 0.0)) - 2.0 * np.sqrt(np.maximum(pge, 0.0))
    k2 = 2.0 * np.hypot(gr, gi) - np.sqrt(np.maximum(rad2, 0.0))
    conc = np.maximum(0.0, np.maximum(k1, k2))
    return k1, k2, conc


def concurrence(s: XState) -> ConcurrenceSample:
    k1, k2, c = concurrence_array(s.to_array())
    return ConcurrenceSample(float(k1), float(k2), float(c))


def early_slope_generation(c: Coefficients) -> float:
    """Initial growth rate ``dK1/dtau`` at 0 for the product state |10>.

    Does not depend on ``delta``.
    """
    return 4.0 * math.hypot(c.b3, c.d)


def _as_time(tau):
    # object arrays (e.g. mpmath scalars) keep their own arithmetic
    tau = np.asarray(tau)
    return tau if tau.dtype == object else tau.astype(float)


def _finish(out):
    if isinstance(out, np.ndarray) and out.ndim > 0:
        return out
    return out.item() if isinstance(out, (np.ndarray, np.generic)) else out


def series_k1_product10(c: Coefficients, tau):
    """Third-order expansion of K1 around 0 for the initial state |10>."""
    b1, b2, b3, d, delta = c.as_tuple()
    r = math.hypot(b3, d)
    cubic = 28 * b1**2 + 16 * b1 * b2 + 4 * b2**2 + 16 * b3**2 - 16 * d**2 - delta**2
    tau = _as_time(tau)
    return _finish(4 * r * tau - 4 * (3 * b1 + b2) * r * tau**2 + (2.0 / 3.0) * r * cubic * tau**3)


def series_k1_antisymmetric(c: Coefficients, tau):
    """Third-order expansion of K1 around 0 for the initial state |A>.

    The ``b1`` bracket of the cubic term carries ``12 b3**2``; this is what
    the Taylor expansion of the equations of motion gives (checked by the
    fourth-order remainder of the test-suite).
    """
    b1, b2, b3, d, delta = c.as_tuple()
    g = b1 + b2 - 2 * b3
    cubic = (
        b1**3
        + b2**3
        + b1**2 * (3 * b2 - 8 * b3)
        - 8 * b2**2 * b3
        + 12 * b2 * b3**2
        - 8 * b3**3
        + b1 * (3 * b2**2 - 8 * b2 * b3 + 12 * b3**2)
        - 4 * b2 * d * delta
        + 4 * b1 * d * delta
        + 2 * b3 * delta**2
    )
    tau = _as_time(tau)
    return _finish(1 - 2 * tau * g + 2 * tau**2 * g**2 - (4.0 / 3.0) * tau**3 * cubic)
