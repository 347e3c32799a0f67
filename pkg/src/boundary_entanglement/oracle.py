"""
Full 4x4 reference dynamics.

The generator is assembled directly from the Pauli-matrix form of the master
equation (Kossakowski blocks ``C_ij^(ab)`` and induced coupling
``Omega_ij``) acting on row-major vectorized density matrices, and evolved
with a matrix exponential. Nothing here uses the reduced X-state equations,
so it serves as an independent check of :mod:`.dynamics` and of the X-state
concurrence formula in :mod:`.entanglement`.

Product basis ordering is ``|00>, |01>, |10>, |11>`` with the first factor
belonging to the atom nearer the plane and ``|1>`` the excited level.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .coefficients import Coefficients
from .dynamics import XState
from .errors import InvalidState, OracleDivergence

__all__ = [
    "SIGMA",
    "COUPLED_BASIS",
    "x_state_to_matrix",
    "matrix_to_x_state",
    "non_x_entries",
    "validate_density_matrix",
    "build_liouvillian",
    "trace_functional",
    "propagator",
    "evolve_exact",
    "evolve_on_grid",
    "choi_matrix",
    "wootters_concurrence",
]

# single-qubit operators in the (|0>, |1>) = (ground, excited) ordering
_I2 = np.eye(2, dtype=complex)
SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, 1j], [-1j, 0]], dtype=complex),
    np.array([[-1, 0], [0, 1]], dtype=complex),
)

_R = 1.0 / np.sqrt(2.0)
# columns: |G>, |A>, |S>, |E> expanded in the product basis
COUPLED_BASIS = np.array(
    [
        [1, 0, 0, 0],
        [0, -_R, _R, 0],
        [0, _R, _R, 0],
        [0, 0, 0, 1],
    ],
    dtype=complex,
)

_X_MASK = np.eye(4, dtype=bool) | np.fliplr(np.eye(4, dtype=bool))


def _on_atom(op: np.ndarray, atom: int) -> np.ndarray:
    return np.kron(op, _I2) if atom == 0 else np.kron(_I2, op)


def x_state_to_matrix(s: XState) -> np.ndarray:
    """4x4 product-basis density matrix of an X state."""
    coupled = np.zeros((4, 4), dtype=complex)
    coupled[0, 0], coupled[1, 1], coupled[2, 2], coupled[3, 3] = s.p_gg, s.p_aa, s.p_ss, s.p_ee
    coupled[1, 2] = s.rho_as
    coupled[2, 1] = np.conj(s.rho_as)
    coupled[0, 3] = s.rho_ge
    coupled[3, 0] = np.conj(s.rho_ge)
    return COUPLED_BASIS @ coupled @ COUPLED_BASIS.conj().T


def matrix_to_x_state(rho: np.ndarray) -> XState:
    """Project a product-basis density matrix onto X-state coordinates."""
    c = COUPLED_BASIS.conj().T @ rho @ COUPLED_BASIS
    return XState(
        p_gg=c[0, 0].real,
        p_ee=c[3, 3].real,
        p_aa=c[1, 1].real,
        p_ss=c[2, 2].real,
        c_as_re=c[1, 2].real,
        c_as_im=c[1, 2].imag,
        c_ge_re=c[0, 3].real,
        c_ge_im=c[0, 3].imag,
    )


def non_x_entries(rho: np.ndarray) -> np.ndarray:
    """The eight product-basis entries that vanish for an X state."""
    return np.asarray(rho)[~_X_MASK]


def validate_density_matrix(rho: np.ndarray, tol: float = 1e-12, eig_tol: float = 1e-9) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidState(f"expected a 4x4 matrix, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidState("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise InvalidState(f"trace {np.trace(rho).real:.15g} differs from 1")
    if np.min(np.linalg.eigvalsh(rho)) < -eig_tol:
        raise InvalidState("density matrix has a negative eigenvalue")
    return rho


def _left(a):
    # vec(a @ rho) for row-major vec
    return np.kron(a, np.eye(a.shape[0]))


def _right(b):
    # vec(rho @ b)
    return np.kron(np.eye(b.shape[0]), b.T)


def _kossakowski(rate: float) -> np.ndarray:
    """``C_ij = rate * (delta_ij - i eps_ij3 - delta_3i delta_3j)``."""
    c = rate * np.eye(3, dtype=complex)
    c[2, 2] = 0.0
    c[0, 1] = -1j * rate
    c[1, 0] = 1j * rate
    return c


def build_liouvillian(c: Coefficients) -> np.ndarray:
    """16x16 generator acting on row-major ``rho.reshape(16)``.

    Hamiltonian part: ``(delta/2)(sigma_3^(2) - sigma_3^(1))`` for the shift
    difference (the common shift is dropped, as in the reduced equations)
    and the induced coupling ``-sum_ij Omega_ij sigma_i x sigma_j`` with
    ``Omega = d * diag(1, 1, 0)``. Dissipator: Kossakowski blocks with rates
    ``b1`` (11), ``b2`` (22) and ``b3`` (12 and 21).
    """
    sig = [[_on_atom(s, a) for s in SIGMA] for a in (0, 1)]

    omega = c.d * np.diag([1.0, 1.0, 0.0])
    h = 0.5 * c.delta * (sig[1][2] - sig[0][2])
    for i in range(3):
        for j in range(3):
            if omega[i, j]:
                h = h - omega[i, j] * np.kron(SIGMA[i], SIGMA[j])
    gen = -1j * (_left(h) - _right(h))

    rates = ((c.b1, c.b3), (c.b3, c.b2))
    for a in range(2):
        for b in range(2):
            kos = _kossakowski(rates[a][b])
            for i in range(3):
                for j in range(3):
                    if kos[i, j] == 0:
                        continue
                    si, sj = sig[a][i], sig[b][j]
                    prod = si @ sj
                    gen += 0.5 * kos[i, j] * (2.0 * np.kron(sj, si.T) - _left(prod) - _right(prod))
    return gen


def trace_functional() -> np.ndarray:
    """Row vector ``t`` with ``t @ vec(rho) = tr(rho)``."""
    return np.eye(4, dtype=complex).reshape(16)


def propagator(liou: np.ndarray, tau: float) -> np.ndarray:
    """``exp(liou * tau)`` by scaling and squaring with Pade approximants."""
    return expm(liou * tau)


def _apply(prop: np.ndarray, rho0: np.ndarray, trace_tol: float) -> np.ndarray:
    rho = (prop @ rho0.reshape(16)).reshape(4, 4)
    rho = 0.5 * (rho + rho.conj().T)
    drift = abs(np.trace(rho) - np.trace(rho0))
    if drift > trace_tol:
        raise OracleDivergence(f"trace drift {drift:.3g} exceeds {trace_tol:g}")
    return rho


def evolve_exact(rho0: np.ndarray, liou: np.ndarray, tau: float, trace_tol: float = 1e-8) -> np.ndarray:
    """Evolve a 4x4 density matrix to time ``tau`` (result re-Hermitized)."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    rho0 = validate_density_matrix(rho0)
    if tau == 0:
        return rho0.copy()
    return _apply(propagator(liou, tau), rho0, trace_tol)


def evolve_on_grid(rho0: np.ndarray, liou: np.ndarray, taus, trace_tol: float = 1e-8) -> np.ndarray:
    """Exact evolution at each time in ``taus``; each point gets its own
    exponential, so errors do not accumulate along the grid."""
    rho0 = validate_density_matrix(rho0)
    out = np.empty((len(taus), 4, 4), dtype=complex)
    for k, tau in enumerate(taus):
        out[k] = rho0 if tau == 0 else _apply(propagator(liou, tau), rho0, trace_tol)
    return out


def choi_matrix(prop: np.ndarray) -> np.ndarray:
    """Choi matrix ``sum_kl |k><l| x Phi(|k><l|)`` of a 16x16 superoperator."""
    choi = np.zeros((16, 16), dtype=complex)
    for k in range(4):
        for l in range(4):
            e = np.zeros((4, 4), dtype=complex)
            e[k, l] = 1.0
            choi += np.kron(e, (prop @ e.reshape(16)).reshape(4, 4))
    return choi


_YY = np.kron(SIGMA[1], SIGMA[1])


def wootters_concurrence(rho: np.ndarray) -> float:
    """General two-qubit concurrence from the spin-flip eigenvalues.

    ``max(0, l1 - l2 - l3 - l4)`` with ``l_i`` the decreasing square roots of
    the eigenvalues of ``rho (sy x sy) rho* (sy x sy)``.
    """
    rho = np.asarray(rho, dtype=complex)
    r = rho @ _YY @ rho.conj() @ _YY
    ev = np.sort(np.sqrt(np.clip(np.linalg.eigvals(r).real, 0.0, None)))[::-1]
    return float(max(0.0, ev[0] - ev[1] - ev[2] - ev[3]))
