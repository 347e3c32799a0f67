"""
X-state representation in the coupled basis and fixed-step RK4 integration of
the reduced master equation.

Coupled basis::

    |G> = |00>,  |A> = (|10> - |01>)/sqrt(2),
    |S> = (|10> + |01>)/sqrt(2),  |E> = |11>

An X state has eight real degrees of freedom: the four populations, the
complex coherence rho_AS and the complex coherence rho_GE. The populations are
all kept (none is eliminated through the trace) so that trace conservation is
something we can check instead of something we impose.
"""

from __future__ import annotations

import enum
import math
from dataclasses import astuple, dataclass
from typing import Iterator, Optional

import numpy as np

from .coefficients import Coefficients, GeometryParams
from .errors import IntegrationDiverged, InvalidState

__all__ = [
    "FIELDS",
    "XState",
    "InitialState",
    "initial_state",
    "rhs",
    "rhs_array",
    "rk4_step",
    "rk4_step_matrix",
    "auto_substeps",
    "Trajectory",
    "integrate",
    "DEFAULT_DT",
]

FIELDS = ("p_gg", "p_ee", "p_aa", "p_ss", "c_as_re", "c_as_im", "c_ge_re", "c_ge_im")
GG, EE, AA, SS, ASR, ASI, GER, GEI = range(8)

DEFAULT_DT = 1e-3
STATE_TOL = 1e-9
TRACE_TOL = 1e-9
# any |field| above this means the integrator blew up; physical values are <= 1
DIVERGENCE_BOUND = 10.0
# bound on h * spectral_radius for the internal RK4 step; keeps the phase error
# of the fast induced-coupling oscillation (4d ~ 1/omega_L) below ~1e-9 over
# tens of decay times
MAX_STEP_PHASE = 2.5e-3


@dataclass(frozen=True)
class XState:
    """Real coordinates of an X-structured two-atom density matrix.

    ``rho_SA`` and ``rho_EG`` are the complex conjugates of ``rho_AS`` and
    ``rho_GE`` and are not stored.
    """

    p_gg: float = 0.0
    p_ee: float = 0.0
    p_aa: float = 0.0
    p_ss: float = 0.0
    c_as_re: float = 0.0
    c_as_im: float = 0.0
    c_ge_re: float = 0.0
    c_ge_im: float = 0.0

    @classmethod
    def from_array(cls, values) -> "XState":
        arr = np.asarray(values, dtype=float)
        if arr.shape != (8,):
            raise ValueError(f"expected 8 components, got shape {arr.shape}")
        return cls(*(float(v) for v in arr))

    def to_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @property
    def rho_as(self) -> complex:
        return complex(self.c_as_re, self.c_as_im)

    @property
    def rho_ge(self) -> complex:
        return complex(self.c_ge_re, self.c_ge_im)

    @property
    def trace(self) -> float:
        return self.p_gg + self.p_ee + self.p_aa + self.p_ss

    def violations(self, tol: float = STATE_TOL) -> list[str]:
        """List the invariants this state breaks (empty if it is physical)."""
        out = []
        if not all(math.isfinite(v) for v in astuple(self)):
            out.append("non-finite component")
            return out
        if abs(self.trace - 1.0) > tol:
            out.append(f"trace {self.trace!r} differs from 1")
        for name in ("p_gg", "p_ee", "p_aa", "p_ss"):
            if getattr(self, name) < -tol:
                out.append(f"{name} is negative")
        if abs(self.rho_as) ** 2 > self.p_aa * self.p_ss + tol:
            out.append("|rho_AS|^2 exceeds p_aa*p_ss")
        if abs(self.rho_ge) ** 2 > self.p_gg * self.p_ee + tol:
            out.append("|rho_GE|^2 exceeds p_gg*p_ee")
        return out

    def validate(self, tol: float = STATE_TOL) -> "XState":
        problems = self.violations(tol)
        if problems:
            raise InvalidState("; ".join(problems))
        return self


class InitialState(str, enum.Enum):
    PRODUCT10 = "product10"
    ANTISYMMETRIC = "antisymmetric"
    SYMMETRIC = "symmetric"
    EXCITED = "excited"
    GROUND = "ground"
    CUSTOM = "custom"


_NAMED_STATES = {
    # |10><10| = (|S>+|A>)(<S|+<A|)/2
    InitialState.PRODUCT10: XState(p_aa=0.5, p_ss=0.5, c_as_re=0.5),
    InitialState.ANTISYMMETRIC: XState(p_aa=1.0),
    InitialState.SYMMETRIC: XState(p_ss=1.0),
    InitialState.EXCITED: XState(p_ee=1.0),
    InitialState.GROUND: XState(p_gg=1.0),
}


def initial_state(name, custom: Optional[dict] = None) -> XState:
    """Build a named initial state.

    Parameters
    ----------
    name : str or InitialState
        One of ``product10``, ``antisymmetric``, ``symmetric``, ``excited``,
        ``ground`` or ``custom``.
    custom : dict, optional
        Field values (keys from :data:`FIELDS`) for ``custom``; missing keys
        default to 0.

    Raises
    ------
    InvalidState
        If a custom state is not a valid density matrix.
    """
    kind = InitialState(name.lower() if isinstance(name, str) else name)
    if kind is not InitialState.CUSTOM:
        return _NAMED_STATES[kind]
    if custom is None:
        raise InvalidState("custom initial state requires field values")
    unknown = set(custom) - set(FIELDS)
    if unknown:
        raise InvalidState(f"unknown X-state fields: {sorted(unknown)}")
    return XState(**{k: float(v) for k, v in custom.items()}).validate()


def rhs_array(y: np.ndarray, c: Coefficients) -> np.ndarray:
    """Time derivative of the X-state coordinates.

    ``y`` has the 8 coordinates along its first axis; trailing axes are
    carried along, so a stack of states (or the identity) can be pushed
    through in one call.
    """
    b1, b2, b3, d, delta = c.as_tuple()
    s = b1 + b2
    minus = s - 2.0 * b3  # antisymmetric channel rate / 2
    plus = s + 2.0 * b3  # symmetric channel rate / 2
    asym = b2 - b1

    gg, ee, aa, ss, xr, xi, gr, gi = y
    # rho_AS + rho_SA = 2 xr ; i (rho_AS - rho_SA) = -2 xi
    herm = 2.0 * xr
    skew = -2.0 * xi

    out = np.empty_like(y, dtype=float)
    out[GG] = 2.0 * minus * aa + 2.0 * plus * ss - 2.0 * asym * herm
    out[EE] = -4.0 * s * ee
    out[AA] = -2.0 * minus * aa + 2.0 * minus * ee + asym * herm - delta * skew
    out[SS] = -2.0 * plus * ss + 2.0 * plus * ee + asym * herm + delta * skew
    # rho_AS' = -2(s + 2i d) rho_AS + 2 asym ee + asym (ss + aa) + i delta (ss - aa)
    out[ASR] = -2.0 * s * xr + 4.0 * d * xi + 2.0 * asym * ee + asym * (ss + aa)
    out[ASI] = -2.0 * s * xi - 4.0 * d * xr + delta * (ss - aa)
    out[GER] = -2.0 * s * gr
    out[GEI] = -2.0 * s * gi
    return out


def rhs(s: XState, c: Coefficients) -> XState:
    """Derivative of ``s`` as an :class:`XState` (not itself a valid state)."""
    return XState.from_array(rhs_array(s.to_array(), c))


def rk4_step(y: np.ndarray, h: float, c: Coefficients) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of size ``h``."""
    k1 = rhs_array(y, c)
    k2 = rhs_array(y + 0.5 * h * k1, c)
    k3 = rhs_array(y + 0.5 * h * k2, c)
    k4 = rhs_array(y + h * k3, c)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_step_matrix(h: float, c: Coefficients) -> np.ndarray:
    """The 8x8 matrix of one RK4 step.

    The right-hand side is linear, so an RK4 step is a linear map; pushing
    the identity through :func:`rk4_step` gives it column by column.
    """
    return rk4_step(np.eye(8), h, c)


def auto_substeps(dt: float, c: Coefficients) -> int:
    """Number of RK4 steps per sample interval ``dt`` so that each step
    satisfies ``h * spectral_radius <= MAX_STEP_PHASE``."""
    radius = float(np.max(np.abs(np.linalg.eigvals(rhs_array(np.eye(8), c)))))
    return max(1, math.ceil(dt * radius / MAX_STEP_PHASE - 1e-9))


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of the X-state equations.

    Attributes
    ----------
    tau : ndarray, shape (n,)
        Strictly increasing sample times (units of the inverse emission rate).
    states : ndarray, shape (n, 8)
        X-state coordinates at each sample, columns ordered as :data:`FIELDS`.
    geometry : GeometryParams or None
    coefficients : Coefficients
    dt : float
        Sample spacing.
    substeps : int
        RK4 steps per sample interval (internal step ``dt / substeps``).
    """

    tau: np.ndarray
    states: np.ndarray
    coefficients: Coefficients
    dt: float
    geometry: Optional[GeometryParams] = None
    substeps: int = 1

    def __post_init__(self):
        self.tau.setflags(write=False)
        self.states.setflags(write=False)

    def __len__(self) -> int:
        return len(self.tau)

    def __getitem__(self, i: int) -> tuple[float, XState]:
        return float(self.tau[i]), XState.from_array(self.states[i])

    def __iter__(self) -> Iterator[tuple[float, XState]]:
        for i in range(len(self)):
            yield self[i]

    @property
    def t_max(self) -> float:
        return float(self.tau[-1])

    def column(self, name: str) -> np.ndarray:
        return self.states[:, FIELDS.index(name)]

    def advance_from(self, i: int, h: float) -> np.ndarray:
        """Re-integrate from sample ``i`` over a length ``h``, with steps no
        longer than the trajectory's internal step.

        Used to refine events between samples without interpolation.
        """
        return _advance(np.array(self.states[i]), h, self.dt / self.substeps, self.coefficients)


def _advance(y: np.ndarray, h: float, step: float, c: Coefficients) -> np.ndarray:
    n = max(1, math.ceil(h / step - 1e-9))
    for _ in range(n):
        y = rk4_step(y, h / n, c)
    return y


# number of steps propagated per vectorized block
_BLOCK = 512


def _check_block(block: np.ndarray, tau: np.ndarray) -> None:
    bad = np.abs(block) > DIVERGENCE_BOUND
    if bad.any():
        i = int(np.argmax(bad.any(axis=1)))
        raise IntegrationDiverged(f"state component exceeded {DIVERGENCE_BOUND} at tau={tau[i]:.6g}")
    drift = np.abs(block[:, :4].sum(axis=1) - 1.0)
    if not np.all(drift <= TRACE_TOL):
        i = int(np.argmax(~(drift <= TRACE_TOL)))
        raise IntegrationDiverged(f"trace drift {drift[i]:.3g} at tau={tau[i]:.6g}")


def integrate(
    s0: XState,
    c: Coefficients,
    t_max: float,
    dt: float = DEFAULT_DT,
    geometry: Optional[GeometryParams] = None,
    substeps: Optional[int] = None,
) -> Trajectory:
    """Integrate the X-state equations with fixed-step RK4 on ``[0, t_max]``.

    Samples are recorded every ``dt``; the final interval is shortened so the
    last sample lands exactly on ``t_max``. Sample times are ``k * dt`` (not
    accumulated). Each interval is covered by ``substeps`` equal RK4 steps;
    by default just enough that ``h * spectral_radius <= MAX_STEP_PHASE``
    (one step for ``dt = 1e-3`` unless ``omega_L`` is small).

    Raises
    ------
    ValueError
        On a non-positive ``t_max`` or ``dt``, or ``dt > t_max``.
    IntegrationDiverged
        If a component leaves ``[-10, 10]`` or the trace drifts by more
        than 1e-9.
    """
    if not (t_max > 0 and dt > 0 and dt <= t_max):
        raise ValueError(f"need 0 < dt <= t_max, got dt={dt!r}, t_max={t_max!r}")
    m = auto_substeps(dt, c) if substeps is None else int(substeps)
    if m < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps!r}")

    n_full = int(math.floor(t_max / dt + 1e-9))
    if n_full * dt > t_max:
        n_full -= 1
    remainder = t_max - n_full * dt
    has_tail = remainder > 1e-12 * t_max

    n = n_full + 1 + (1 if has_tail else 0)
    tau = np.arange(n, dtype=float) * dt
    tau[-1] = t_max
    states = np.empty((n, 8))
    states[0] = s0.to_array()

    # powers[j] = S^(j+1); each block advances _BLOCK steps from its first state
    step = np.linalg.matrix_power(rk4_step_matrix(dt / m, c), m)
    nb = min(_BLOCK, max(n_full, 1))
    powers = np.empty((nb, 8, 8))
    powers[0] = step
    for j in range(1, nb):
        powers[j] = step @ powers[j - 1]

    k = 0
    while k < n_full:
        span = min(nb, n_full - k)
        block = powers[:span] @ states[k]
        _check_block(block, tau[k + 1 : k + 1 + span])
        states[k + 1 : k + 1 + span] = block
        k += span

    if has_tail:
        last = _advance(states[n_full], remainder, dt / m, c)
        _check_block(last[None, :], tau[-1:])
        states[-1] = last

    return Trajectory(tau=tau, states=states, coefficients=c, dt=dt, geometry=geometry, substeps=m)
