import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from boundary_entanglement.coefficients import Coefficients, GeometryParams, compute_coefficients
from boundary_entanglement.dynamics import (
    FIELDS,
    InitialState,
    XState,
    initial_state,
    integrate,
    rhs,
    rhs_array,
    rk4_step,
)
from boundary_entanglement.errors import IntegrationDiverged, InvalidState
from boundary_entanglement.oracle import build_liouvillian, matrix_to_x_state, x_state_to_matrix

from conftest import random_x_state

coef_strategy = st.builds(
    Coefficients,
    st.floats(0, 0.5),
    st.floats(0, 0.5),
    st.floats(-0.5, 0.5),
    st.floats(-5, 5),
    st.floats(-5, 5),
)


def ket(bits):
    v = np.zeros(4, dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def test_named_states():
    assert initial_state("antisymmetric").to_array().tolist() == [0, 0, 1, 0, 0, 0, 0, 0]
    assert initial_state("ground").to_array().tolist() == [1, 0, 0, 0, 0, 0, 0, 0]
    assert initial_state(InitialState.EXCITED).p_ee == 1.0
    assert initial_state("Symmetric").p_ss == 1.0
    assert initial_state("product10").to_array().tolist() == [0, 0, 0.5, 0.5, 0.5, 0, 0, 0]


def test_product10_from_basis_change():
    # |10> = atom 1 excited; expand |10><10| in |G>,|A>,|S>,|E>
    v = ket("10")
    a = (ket("10") - ket("01")) / math.sqrt(2)
    s = (ket("10") + ket("01")) / math.sqrt(2)
    rho = np.outer(v, v.conj())
    assert np.vdot(a, rho @ a).real == pytest.approx(0.5)
    assert np.vdot(s, rho @ s).real == pytest.approx(0.5)
    assert np.vdot(a, rho @ s) == pytest.approx(0.5)
    assert matrix_to_x_state(rho).to_array() == pytest.approx(initial_state("product10").to_array(), abs=1e-15)


def test_custom_state_validation():
    good = initial_state("custom", {"p_gg": 0.5, "p_ee": 0.5, "c_ge_re": 0.5})
    assert good.rho_ge == 0.5
    with pytest.raises(InvalidState):
        initial_state("custom", {"p_gg": 0.5, "p_ee": 0.5, "c_ge_re": 0.6})
    with pytest.raises(InvalidState):
        initial_state("custom", {"p_gg": 0.9})
    with pytest.raises(InvalidState):
        initial_state("custom", {"p_gg": 1.2, "p_aa": -0.2})
    with pytest.raises(InvalidState):
        initial_state("custom", {"p_xx": 1.0})
    with pytest.raises(InvalidState):
        initial_state("custom")


def test_ground_is_stationary():
    c = compute_coefficients(GeometryParams(0.3, 2.0))
    assert rhs(initial_state("ground"), c).to_array().tolist() == [0.0] * 8


def test_antisymmetric_decouples_at_zero_separation():
    # far from the plate with omega_L -> 0: b1 = b2 = b3
    c = compute_coefficients(GeometryParams(1e8, 1e-6, False, False))
    d = rhs(initial_state("antisymmetric"), c)
    assert abs(d.p_aa) < 1e-10


def test_excited_derivatives_by_hand():
    c = Coefficients(0.11, 0.23, 0.07, 0.4, -0.3)
    b1, b2, b3 = c.b1, c.b2, c.b3
    d = rhs(initial_state("excited"), c)
    assert d.p_ee == pytest.approx(-4 * (b1 + b2))
    assert d.p_aa == pytest.approx(2 * (b1 + b2 - 2 * b3))
    assert d.p_ss == pytest.approx(2 * (b1 + b2 + 2 * b3))
    assert d.c_as_re == pytest.approx(2 * (b2 - b1))
    assert d.c_as_im == 0.0
    assert d.p_gg == 0.0


def test_rhs_matches_liouvillian_on_random_states(rng):
    for _ in range(50):
        c = Coefficients(*rng.uniform(0, 0.5, 2), rng.uniform(-0.2, 0.2), *rng.uniform(-3, 3, 2))
        s = random_x_state(rng)
        L = build_liouvillian(c)
        drho = (L @ x_state_to_matrix(s).reshape(16)).reshape(4, 4)
        # the coupled-basis projection is linear, so it maps derivatives too
        expected = matrix_to_x_state(drho).to_array()
        assert rhs(s, c).to_array() == pytest.approx(expected, abs=1e-13)


@settings(max_examples=200)
@given(coef_strategy, st.lists(st.floats(-1, 1), min_size=8, max_size=8))
def test_population_derivatives_sum_to_zero(c, y):
    d = rhs_array(np.array(y), c)
    assert abs(d[:4].sum()) <= 1e-13 * (1 + np.abs(y).sum() * 10)


def test_rhs_array_broadcasts_over_trailing_axes(rng):
    c = Coefficients(0.1, 0.2, 0.05, 0.3, -0.1)
    ys = rng.normal(size=(8, 5))
    stacked = rhs_array(ys, c)
    for k in range(5):
        assert stacked[:, k] == pytest.approx(rhs_array(ys[:, k], c), abs=1e-15)


def test_ground_trajectory_constant():
    c = compute_coefficients(GeometryParams(0.1, 10.0))
    traj = integrate(initial_state("ground"), c, 10.0)
    assert np.all(traj.states == initial_state("ground").to_array())


def test_excited_population_exponential():
    c = compute_coefficients(GeometryParams(1.0, 1.0))
    traj = integrate(initial_state("excited"), c, 20.0)
    expected = np.exp(-4 * (c.b1 + c.b2) * traj.tau)
    assert np.max(np.abs(traj.column("p_ee") - expected)) < 1e-8


def test_product10_matches_exact_propagation_every_sample():
    c = compute_coefficients(GeometryParams(0.1, 10.0))
    s0 = initial_state("product10")
    traj = integrate(s0, c, 30.0)
    step = expm(build_liouvillian(c) * traj.dt)
    rho = x_state_to_matrix(s0).reshape(16)
    from boundary_entanglement.entanglement import concurrence_array

    conc = concurrence_array(traj.states)[2]
    worst = 0.0
    for k in range(1, len(traj)):
        rho = step @ rho
        exact = matrix_to_x_state(rho.reshape(4, 4)).to_array()
        worst = max(worst, abs(concurrence_array(exact)[2] - conc[k]))
        worst = max(worst, np.max(np.abs(exact - traj.states[k])))
    assert worst < 1e-8


def test_trajectory_structure():
    c = compute_coefficients(GeometryParams(1.0, 1.0))
    s0 = initial_state("antisymmetric")
    traj = integrate(s0, c, 1.0, 0.3)
    assert traj.tau.tolist() == pytest.approx([0.0, 0.3, 0.6, 0.9, 1.0])
    assert traj.tau[-1] == 1.0
    assert np.all(np.diff(traj.tau) > 0)
    assert traj[0] == (0.0, s0)
    assert len(list(traj)) == len(traj) == 5
    with pytest.raises(ValueError):
        traj.states[0, 0] = 2.0


def test_integrate_lands_exactly_on_t_max():
    c = compute_coefficients(GeometryParams(1.0, 1.0))
    traj = integrate(initial_state("product10"), c, 0.7, 0.1)
    assert traj.tau[-1] == 0.7
    assert len(traj) == 8


def test_block_propagation_equals_stepwise_rk4():
    c = compute_coefficients(GeometryParams(0.4, 3.0))
    y = initial_state("product10").to_array()
    traj = integrate(initial_state("product10"), c, 2.0, 0.001)
    for k in range(1, len(traj)):
        y = rk4_step(y, 0.001, c)
    assert traj.states[-1] == pytest.approx(y, abs=1e-12)


@pytest.mark.parametrize("t_max, dt", [(0.0, 0.1), (1.0, 0.0), (1.0, 2.0), (-1.0, 0.1)])
def test_integrate_rejects_bad_times(t_max, dt):
    with pytest.raises(ValueError):
        integrate(initial_state("ground"), Coefficients(0.1, 0.1, 0, 0, 0), t_max, dt)


def test_divergence_detected():
    # negative rates make the populations grow without bound
    c = Coefficients(-3.0, -3.0, 0.0, 0.0, 0.0)
    with pytest.raises(IntegrationDiverged):
        integrate(initial_state("excited"), c, 10.0, 0.01)


def test_trace_drift_detected():
    s = XState(p_gg=0.5)
    with pytest.raises(IntegrationDiverged):
        integrate(s, Coefficients(0.1, 0.1, 0, 0, 0), 1.0, 0.1)


def test_rk4_fourth_order_convergence():
    c = compute_coefficients(GeometryParams(0.1, 10.0))
    s0 = initial_state("product10")
    L = build_liouvillian(c)

    def max_err(dt):
        traj = integrate(s0, c, 30.0, dt, substeps=1)
        idx = np.arange(0, len(traj), int(round(1.0 / dt)))
        step = expm(L * 1.0)
        rho = x_state_to_matrix(s0).reshape(16)
        err = 0.0
        for k in idx[1:]:
            rho = step @ rho
            err = max(err, np.max(np.abs(matrix_to_x_state(rho.reshape(4, 4)).to_array() - traj.states[k])))
        return err

    e1, e2, e3 = max_err(0.2), max_err(0.1), max_err(0.05)
    assert 12 < e1 / e2 < 20
    assert 12 < e2 / e3 < 20


def test_shift_terms_do_not_touch_excited_and_ge(rng):
    s0 = random_x_state(rng)
    base = Coefficients(0.1, 0.2, 0.05, 0.0, 0.0)
    shifted = Coefficients(0.1, 0.2, 0.05, 0.7, -0.4)
    a = integrate(s0, base, 5.0, 0.01, substeps=4)
    b = integrate(s0, shifted, 5.0, 0.01, substeps=4)
    for name in ("p_ee", "c_ge_re", "c_ge_im"):
        assert np.array_equal(a.column(name), b.column(name))


def test_state_invariants_along_random_trajectories(rng):
    for _ in range(10):
        s0 = random_x_state(rng)
        g = GeometryParams(*np.exp(rng.uniform(np.log(0.01), np.log(20), 2)))
        traj = integrate(s0, compute_coefficients(g), 20.0, 0.01)
        for k in range(0, len(traj), 50):
            assert traj[k][1].violations() == []
            rho = x_state_to_matrix(traj[k][1])
            assert np.max(np.abs(rho - rho.conj().T)) < 1e-12


def test_fields_order():
    assert FIELDS == tuple(XState.__dataclass_fields__)


def test_substeps_resolve_fast_coupling():
    # omega_L = 0.0134 gives 4d ~ 57; one step per 1e-3 would drift by ~5e-5
    c = compute_coefficients(GeometryParams(0.0215, 0.0134).with_toggles(True, False))
    s0 = initial_state("product10")
    traj = integrate(s0, c, 20.0)
    assert traj.substeps > 1
    coarse = integrate(s0, c, 20.0, substeps=1)
    exact = expm(rhs_array(np.eye(8), c) * 20.0) @ s0.to_array()
    assert np.max(np.abs(traj.states[-1] - exact)) < 1e-9
    assert np.max(np.abs(coarse.states[-1] - exact)) > 1e-6


def test_default_step_is_single_for_moderate_geometry():
    c = compute_coefficients(GeometryParams(1.0, 1.0))
    assert integrate(initial_state("product10"), c, 1.0).substeps == 1


def test_advance_from_matches_next_sample():
    c = compute_coefficients(GeometryParams(0.05, 0.02))
    traj = integrate(initial_state("product10"), c, 1.0)
    np.testing.assert_allclose(traj.advance_from(100, traj.dt), traj.states[101], atol=1e-13)
