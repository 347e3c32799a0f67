import mpmath
import numpy as np
import pytest

from boundary_entanglement import GeometryParams, XState
from boundary_entanglement.dynamics import initial_state, integrate, rhs_array
from boundary_entanglement.entanglement import concurrence_array

# acceptance outcomes, criterion number -> (passed, detail)
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def random_geometries(n, lo, hi, seed):
    """``n`` geometries with (omega_y, omega_L) log-uniform in ``(lo, hi)``."""
    rng = np.random.default_rng(seed)
    pts = np.exp(rng.uniform(np.log(lo), np.log(hi), size=(n, 2)))
    return [GeometryParams(float(y), float(L)) for y, L in pts]


def random_x_state(rng):
    """A random physical X state (generic, full rank with probability 1)."""
    p = rng.dirichlet(np.ones(4))
    gg, ee, aa, ss = p
    r_as = np.sqrt(aa * ss) * rng.uniform()
    r_ge = np.sqrt(gg * ee) * rng.uniform()
    a, b = rng.uniform(0, 2 * np.pi, size=2)
    return XState(gg, ee, aa, ss, r_as * np.cos(a), r_as * np.sin(a), r_ge * np.cos(b), r_ge * np.sin(b))


def integrated_k1(c, state, tau, substeps=16):
    traj = integrate(initial_state(state), c, tau, tau / substeps)
    return float(concurrence_array(traj.states[-1])[0])


def richardson_slope(c, state, h=1e-3, levels=3):
    """Extrapolate K1(h)/h to h -> 0 from h, h/2, h/4, ..."""
    table = [integrated_k1(c, state, h / 2**k) / (h / 2**k) for k in range(levels)]
    for order in range(1, levels):
        table = [(2**order * table[k + 1] - table[k]) / (2**order - 1) for k in range(len(table) - 1)]
    return table[0]


def remainder_slope(series, c, state, taus):
    res = [abs(series(c, t) - integrated_k1(c, state, t)) for t in taus]
    return np.polyfit(np.log(taus), np.log(res), 1)[0]


def integrated_k1_mp(c, state, tau, substeps=32, dps=40):
    """K1 after RK4 integration carried out in ``dps``-digit arithmetic, so
    remainders far below double round-off can be resolved."""
    with mpmath.workdps(dps):
        a = mpmath.matrix(rhs_array(np.eye(8), c).tolist())
        y = mpmath.matrix(initial_state(state).to_array().tolist())
        h = mpmath.mpf(tau) / substeps
        for _ in range(substeps):
            k1 = a * y
            k2 = a * (y + h / 2 * k1)
            k3 = a * (y + h / 2 * k2)
            k4 = a * (y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        gg, ee, aa, ss, _, xi, _, _ = y
        return mpmath.sqrt((aa - ss) ** 2 + 4 * xi**2) - 2 * mpmath.sqrt(gg * ee)


def remainder_slope_mp(series, c, state, taus):
    with mpmath.workdps(40):
        res = [abs(series(c, mpmath.mpf(t)) - integrated_k1_mp(c, state, t)) for t in taus]
        return np.polyfit(np.log(taus), [float(mpmath.log(r)) for r in res], 1)[0]


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


@pytest.fixture
def criterion():
    """Record and print one acceptance outcome; the test still asserts."""

    def record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
        print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
