"""Propagation checks against closed-form rigid-body solutions.

Covers Newton/Euler limits with constant wrenches, conservation under
zero wrench, the planar DOF mask, parameter validation and the batched
array path.
"""

import numpy as np
import pytest

from apiary import math3d as m3
from apiary.actuation import Wrench
from apiary.dynamics import (
    FULL_6DOF,
    GRANITE_3DOF,
    BodyParams,
    RigidState,
    SimulationDivergedError,
    kinetic_energy,
    momentum,
    step,
    step_arrays,
)


def test_constant_body_force_matches_newton():
    params = BodyParams()
    dt = 1e-3
    n = 1000
    f = np.array([0.2, -0.1, 0.05])
    state = RigidState()
    for _ in range(n):
        state = step(state, Wrench(f, np.zeros(3)), params, dt=dt)
    t = n * dt
    # semi-implicit velocity is exact for constant acceleration
    np.testing.assert_allclose(state.lin_vel, f / params.mass * t, rtol=1e-13)
    np.testing.assert_allclose(
        state.position, 0.5 * f / params.mass * t * t, rtol=2e-3
    )
    np.testing.assert_array_equal(state.attitude, m3.quat_identity())


def test_constant_axis_torque_matches_euler():
    params = BodyParams(inertia_diag=m3.vec3(0.15, 0.15, 0.16))
    dt = 1e-3
    n = 1000
    tau = np.array([0.0, 0.0, 0.02])
    state = RigidState()
    for _ in range(n):
        state = step(state, Wrench(np.zeros(3), tau), params, dt=dt)
    t = n * dt
    np.testing.assert_allclose(state.ang_vel, tau / params.inertia_diag * t, rtol=1e-12)
    angle = m3.quat_to_rotvec(state.attitude)
    np.testing.assert_allclose(
        angle[2], 0.5 * tau[2] / params.inertia_diag[2] * t * t, rtol=2e-3
    )
    assert abs(angle[0]) < 1e-15 and abs(angle[1]) < 1e-15


def test_zero_wrench_conserves_momentum():
    rng = np.random.default_rng(21)
    params = BodyParams(inertia_diag=m3.vec3(0.15, 0.11, 0.19))
    state = RigidState(
        lin_vel=rng.uniform(-0.3, 0.3, 3), ang_vel=rng.uniform(-1.0, 1.0, 3)
    )
    p0, l0 = momentum(state, params)
    zero = Wrench()
    for _ in range(10_000):
        state = step(state, zero, params, dt=0.016)
    p1, l1 = momentum(state, params)
    # force-free linear velocity never changes at all
    np.testing.assert_array_equal(p1, p0)
    np.testing.assert_allclose(l1, l0, rtol=1e-9, atol=1e-12)


def test_principal_axis_spin_is_steady():
    # spin about a principal axis: rate and energy hold to round-off
    params = BodyParams(inertia_diag=m3.vec3(0.15, 0.11, 0.19))
    state = RigidState(ang_vel=np.array([0.0, 0.0, 0.8]))
    e0 = kinetic_energy(state, params)
    for _ in range(10_000):
        state = step(state, Wrench(), params, dt=0.016)
    np.testing.assert_allclose(state.ang_vel, [0.0, 0.0, 0.8], atol=1e-12)
    assert abs(kinetic_energy(state, params) - e0) <= 1e-12 * e0


def test_tumbling_attitude_follows_momentum():
    # body rate vector must wander (asymmetric inertia, off-axis spin)
    # while the world momentum direction stays put
    params = BodyParams(inertia_diag=m3.vec3(0.15, 0.11, 0.19))
    state = RigidState(ang_vel=np.array([0.7, 0.5, 0.3]))
    _, l0 = momentum(state, params)
    w_first = state.ang_vel.copy()
    for _ in range(2000):
        state = step(state, Wrench(), params, dt=0.016)
    _, l1 = momentum(state, params)
    np.testing.assert_allclose(l1, l0, rtol=1e-10)
    assert np.linalg.norm(state.ang_vel - w_first) > 1e-3


def test_com_offset_converts_force_to_torque():
    # +x force applied ahead of the COM (offset +y) torques about -z
    params = BodyParams(com_offset=m3.vec3(0.0, 0.1, 0.0))
    state = step(RigidState(), Wrench(m3.vec3(1.0, 0, 0), np.zeros(3)), params, dt=0.01)
    expected_tau = -np.cross(params.com_offset, [1.0, 0.0, 0.0])
    expected_w = expected_tau * 0.01 / params.inertia_diag
    np.testing.assert_allclose(state.ang_vel, expected_w, rtol=1e-12)


def test_granite_mask_pins_out_of_plane_axes():
    params = BodyParams()
    state = RigidState()
    rng = np.random.default_rng(22)
    for _ in range(500):
        w = Wrench(rng.uniform(-0.4, 0.4, 3), rng.uniform(-0.1, 0.1, 3))
        state = step(state, w, params, GRANITE_3DOF, dt=0.016)
        assert state.position[2] == 0.0
        assert state.lin_vel[2] == 0.0
        assert state.ang_vel[0] == 0.0 and state.ang_vel[1] == 0.0
        assert state.attitude[1] == 0.0 and state.attitude[2] == 0.0
    # in-plane axes actually moved
    assert np.linalg.norm(state.position[:2]) > 0.0
    assert state.attitude[3] != 0.0


def test_step_arrays_batched_bit_identical():
    rng = np.random.default_rng(23)
    n = 17
    pos = rng.standard_normal((n, 3))
    att = rng.standard_normal((n, 4))
    att /= np.linalg.norm(att, axis=1, keepdims=True)
    lv = rng.standard_normal((n, 3)) * 0.2
    av = rng.standard_normal((n, 3)) * 0.5
    force = rng.uniform(-0.4, 0.4, (n, 3))
    torque = rng.uniform(-0.1, 0.1, (n, 3))
    mass = rng.uniform(7.0, 12.0, n)
    inertia = rng.uniform(0.1, 0.2, (n, 3))
    com = np.zeros((n, 3))
    tm = FULL_6DOF.translation_floats()
    rm = FULL_6DOF.rotation_floats()

    bp, ba, bv, bw = step_arrays(pos, att, lv, av, force, torque, mass, inertia, com, tm, rm, 0.016)
    for i in range(n):
        sp, sa, sv, sw = step_arrays(
            pos[i], att[i], lv[i], av[i], force[i], torque[i],
            np.float64(mass[i]), inertia[i], com[i], tm, rm, 0.016,
        )
        np.testing.assert_array_equal(bp[i], sp)
        np.testing.assert_array_equal(ba[i], sa)
        np.testing.assert_array_equal(bv[i], sv)
        np.testing.assert_array_equal(bw[i], sw)


def test_step_validation():
    params = BodyParams()
    with pytest.raises(ValueError):
        step(RigidState(), Wrench(), params, dt=0.0)
    with pytest.raises(ValueError):
        step(RigidState(), Wrench(), params, dt=0.6)
    with pytest.raises(ValueError):
        step(RigidState(), Wrench(m3.vec3(np.inf, 0, 0), np.zeros(3)), params)


def test_diverged_state_raises():
    params = BodyParams(mass=1e-308)
    state = RigidState()
    with pytest.raises(SimulationDivergedError):
        for _ in range(2000):
            state = step(state, Wrench(m3.vec3(0.4, 0, 0), np.zeros(3)), params)


def test_body_params_validation():
    with pytest.raises(ValueError):
        BodyParams(mass=0.0)
    with pytest.raises(ValueError):
        BodyParams(inertia_diag=m3.vec3(0.1, -0.1, 0.1))
    with pytest.raises(ValueError):
        BodyParams(inertia_diag=m3.vec3(1.0, 0.1, 0.1))  # triangle inequality
    scaled = BodyParams().scaled(1.25)
    assert scaled.mass == 9.5 * 1.25
    np.testing.assert_array_equal(scaled.inertia_diag, BodyParams().inertia_diag * 1.25)
