"""Episode environment: observation/reward contracts, termination
bookkeeping, batched-vs-scalar equivalence and reset randomization.
"""

import numpy as np
import pytest

from apiary import math3d as m3
from apiary.dynamics import GRANITE_3DOF, RigidState
from apiary.env import (
    ANG_VEL,
    LIN_VEL,
    ORI_ERR,
    POS_ERR,
    BatchEnv,
    Env,
    EnvConfig,
    EpisodeGoal,
    RewardWeights,
    batch_rollout,
    env_step,
    observe,
    reset,
    reward,
    reward_arrays,
    success_flags,
)


def quick_config(**kw):
    """Small episodes and close goals so terminations happen fast."""
    defaults = dict(
        goal_pos_range=m3.vec3(0.03, 0.03, 0.03),
        goal_ang_range=np.full(3, 0.02),
        episode_len=60,
        hold_steps=5,
    )
    defaults.update(kw)
    return EnvConfig(**defaults)


def test_observation_zero_at_goal():
    goal = EpisodeGoal(m3.vec3(0.2, -0.1, 0.3), m3.quat_from_rotvec(m3.vec3(0.1, 0.2, -0.1)))
    state = RigidState(position=goal.position.copy(), attitude=goal.attitude.copy())
    obs = observe(state, goal)
    np.testing.assert_array_equal(obs, np.zeros(12))


def test_observation_components():
    rng = np.random.default_rng(31)
    for _ in range(20):
        state = RigidState(
            position=rng.uniform(-1, 1, 3),
            attitude=m3.quat_from_rotvec(rng.uniform(-1, 1, 3)),
            lin_vel=rng.uniform(-0.5, 0.5, 3),
            ang_vel=rng.uniform(-0.5, 0.5, 3),
        )
        goal = EpisodeGoal(rng.uniform(-1, 1, 3), m3.quat_from_rotvec(rng.uniform(-1, 1, 3)))
        obs = observe(state, goal)
        np.testing.assert_array_equal(obs[POS_ERR], goal.position - state.position)
        np.testing.assert_array_equal(obs[ORI_ERR], m3.quat_error(goal.attitude, state.attitude))
        np.testing.assert_array_equal(obs[LIN_VEL], state.lin_vel)
        np.testing.assert_array_equal(obs[ANG_VEL], state.ang_vel)


def test_observation_body_frame_option():
    state = RigidState(
        position=m3.vec3(0.0, 0.0, 0.0),
        attitude=m3.quat_from_axis_angle(m3.vec3(0, 0, 1), np.pi / 2),
        lin_vel=m3.vec3(0.1, 0.0, 0.0),
    )
    goal = EpisodeGoal(m3.vec3(1.0, 0.0, 0.0), state.attitude.copy())
    obs = observe(state, goal, body_frame=True)
    # world +x maps to body -y after a +90 deg yaw
    np.testing.assert_allclose(obs[POS_ERR], [0.0, -1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(obs[LIN_VEL], [0.0, -0.1, 0.0], atol=1e-12)


def test_reward_zero_when_nothing_moves():
    cfg = EnvConfig()
    w = RewardWeights()
    obs = np.zeros(12)
    obs[POS_ERR] = [0.3, 0.0, 0.0]
    assert reward(obs, obs.copy(), w, cfg) == 0.0


def test_reward_error_reduction_scales_with_weights():
    cfg = EnvConfig()
    w = RewardWeights()
    prev = np.zeros(12)
    prev[POS_ERR] = [0.4, 0.0, 0.0]
    cur = np.zeros(12)
    cur[POS_ERR] = [0.3, 0.0, 0.0]
    assert reward(prev, cur, w, cfg) == pytest.approx(w.w_pos * 0.1, rel=1e-12)
    # symmetric: moving away costs the same amount
    assert reward(cur, prev, w, cfg) == pytest.approx(-w.w_pos * 0.1, rel=1e-12)


def test_reward_velocity_penalty_every_step():
    cfg = EnvConfig()
    w = RewardWeights()
    obs = np.zeros(12)
    obs[POS_ERR] = [0.2, 0.0, 0.0]
    obs[LIN_VEL] = [0.3, 0.0, 0.0]
    obs[ANG_VEL] = [0.0, 0.2, 0.0]
    expected = -w.w_linvel * 0.3 - w.w_angvel * 0.2
    assert reward(obs.copy(), obs.copy(), w, cfg) == pytest.approx(expected, rel=1e-12)


def test_reward_bonus_only_when_latched():
    cfg = EnvConfig()
    w = RewardWeights()
    at_goal = np.zeros(12)
    # merely being inside tolerance pays nothing extra
    assert reward(at_goal, at_goal.copy(), w, cfg) == 0.0
    assert reward(at_goal, at_goal.copy(), w, cfg, success_latched=True) == w.bonus_success


def test_reward_oob_penalty():
    cfg = EnvConfig()
    w = RewardWeights()
    prev = np.zeros(12)
    prev[POS_ERR] = [1.9, 0.0, 0.0]
    cur = np.zeros(12)
    cur[POS_ERR] = [2.1, 0.0, 0.0]
    r, succ, oob = reward_arrays(prev, cur, w, cfg)
    assert bool(oob) and not bool(succ)
    assert float(r) == pytest.approx(-w.w_pos * 0.2 - w.penalty_oob, rel=1e-12)


def test_success_flags_require_all_four_conditions():
    cfg = EnvConfig()
    obs = np.zeros(12)
    assert bool(success_flags(obs, cfg))
    for sl, bad in ((POS_ERR, 0.06), (ORI_ERR, 0.1), (LIN_VEL, 0.06), (ANG_VEL, 0.06)):
        o = np.zeros(12)
        o[sl] = [bad, 0.0, 0.0]
        assert not bool(success_flags(o, cfg))
    # boundary is inclusive
    o = np.zeros(12)
    o[POS_ERR] = [cfg.success_pos_tol, 0.0, 0.0]
    assert bool(success_flags(o, cfg))


def test_env_step_success_pays_bonus_on_latch_tick_only():
    cfg = quick_config()
    w = RewardWeights()
    rng = np.random.default_rng(0)
    state, goal, params = reset(cfg, rng)
    # start at the goal so the hold counter just has to fill
    state = RigidState(position=goal.position.copy(), attitude=goal.attitude.copy())
    obs = observe(state, goal)
    hold, steps = 0, 0
    rewards = []
    for k in range(cfg.hold_steps + 2):
        state, obs, r, done, info = env_step(
            state, goal, params, np.zeros(6), cfg, w,
            prev_obs=obs, hold_count=hold, step_count=steps,
        )
        rewards.append(r)
        hold, steps = info["hold_count"], info["step_count"]
        if done:
            break
    assert info["success"] and info["done_reason"] == "success"
    assert steps == cfg.hold_steps
    # zero action at the goal: nothing but the final latch bonus
    assert rewards[:-1] == [0.0] * (cfg.hold_steps - 1)
    assert rewards[-1] == w.bonus_success


def test_env_step_timeout_and_counters():
    cfg = quick_config(goal_pos_range=m3.vec3(0.4, 0.4, 0.4), episode_len=10)
    w = RewardWeights()
    env = Env(cfg, w, seed=5)
    env.reset()
    done = False
    n = 0
    while not done:
        _, _, done, info = env.step(np.zeros(6))
        n += 1
    assert n == 10 and info["timeout"] and info["done_reason"] == "timeout"


def test_env_step_oob_terminates():
    # hold_steps longer than the escape time so success cannot latch first
    cfg = quick_config(
        oob_radius=0.05,
        goal_pos_range=m3.vec3(0.01, 0.01, 0.01),
        episode_len=400,
        hold_steps=300,
    )
    w = RewardWeights()
    env = Env(cfg, w, seed=3)
    env.reset()
    # full +x thrust runs away from any nearby goal
    action = np.array([1.0, 0, 0, 0, 0, 0])
    done = False
    while not done:
        _, r, done, info = env.step(action)
    assert info["done_reason"] == "oob"


def test_reset_respects_ranges_and_mask():
    cfg = EnvConfig(mask=GRANITE_3DOF)
    rng = np.random.default_rng(33)
    for _ in range(50):
        state, goal, params = reset(cfg, rng)
        np.testing.assert_array_equal(state.position, np.zeros(3))
        np.testing.assert_array_equal(state.attitude, m3.quat_identity())
        assert np.all(np.abs(goal.position[:2]) <= cfg.goal_pos_range[:2])
        assert goal.position[2] == 0.0
        rv = m3.quat_to_rotvec(goal.attitude)
        assert rv[0] == 0.0 and rv[1] == 0.0
        assert 0.75 * 9.5 <= params.mass <= 1.25 * 9.5
        # inertia scales with the drawn mass (uniform density assumption)
        np.testing.assert_allclose(
            params.inertia_diag / cfg.body.inertia_diag,
            np.full(3, params.mass / cfg.body.mass),
            rtol=1e-12,
        )


def test_reset_deterministic_per_seed():
    cfg = EnvConfig()
    s1, g1, p1 = reset(cfg, 42)
    s2, g2, p2 = reset(cfg, 42)
    np.testing.assert_array_equal(g1.position, g2.position)
    np.testing.assert_array_equal(g1.attitude, g2.attitude)
    assert p1.mass == p2.mass


def test_batch_env_matches_scalar_env_bitwise():
    cfg = quick_config(episode_len=40)
    w = RewardWeights()
    n = 6
    seed = 9
    benv = BatchEnv(n, cfg, w, seed=seed)
    envs = [Env(cfg, w, seed=np.random.default_rng([seed, i])) for i in range(n)]
    for e in envs:
        e.reset()
    for i in range(n):
        np.testing.assert_array_equal(benv.obs[i], envs[i].obs)

    rng = np.random.default_rng(77)
    for _ in range(90):
        actions = rng.uniform(-0.3, 0.3, (n, 6))
        obs_b, r_b, done_b, _ = benv.step(actions)
        for i in range(n):
            obs_s, r_s, done_s, _ = envs[i].step(actions[i])
            if done_s:
                obs_s = envs[i].reset()
            np.testing.assert_array_equal(obs_b[i], obs_s)
            assert r_b[i] == r_s
            assert bool(done_b[i]) == done_s


def test_batch_env_freezes_without_auto_reset():
    cfg = quick_config(episode_len=8)
    w = RewardWeights()
    benv = BatchEnv(3, cfg, w, seed=1, auto_reset=False)
    all_finished = []
    for _ in range(12):
        _, _, _, fin = benv.step(np.zeros((3, 6)))
        all_finished.extend(fin)
    assert benv.all_frozen()
    assert sorted(rec["env"] for rec in all_finished) == [0, 1, 2]
    frozen_obs = benv.obs.copy()
    benv.step(np.full((3, 6), 0.5))
    np.testing.assert_array_equal(benv.obs, frozen_obs)


def test_batch_env_episode_return_matches_reward_sum():
    cfg = quick_config(episode_len=15)
    w = RewardWeights()
    benv = BatchEnv(2, cfg, w, seed=4, auto_reset=False)
    totals = np.zeros(2)
    recs = []
    for _ in range(15):
        _, r, _, fin = benv.step(np.zeros((2, 6)))
        totals += r
        recs.extend(fin)
    assert len(recs) == 2
    for rec in recs:
        assert rec["episode_return"] == pytest.approx(totals[rec["env"]], abs=1e-12)


def test_batch_env_validates_actions():
    cfg = quick_config()
    benv = BatchEnv(2, cfg, RewardWeights(), seed=0)
    with pytest.raises(ValueError):
        benv.step(np.zeros((3, 6)))
    bad = np.zeros((2, 6))
    bad[1, 2] = np.nan
    with pytest.raises(ValueError, match="env 1"):
        benv.step(bad)


def test_batch_rollout_buffer_layout():
    cfg = quick_config(episode_len=12)
    w = RewardWeights()

    class ZeroPolicy:
        def sample(self, obs, rngs):
            return np.zeros((obs.shape[0], 6)), np.zeros(obs.shape[0])

        def value(self, obs):
            return np.zeros(obs.shape[0])

    buf = batch_rollout(ZeroPolicy(), 4, 30, cfg, w, seed=2)
    assert buf.obs.shape == (4, 30, 12)
    assert buf.actions.shape == (4, 30, 6)
    assert buf.rewards.shape == (4, 30)
    assert buf.bootstrap_values.shape == (4,)
    # episode_len 12 means each env terminated at least twice in 30 steps
    assert np.sum(buf.dones) >= 8
    assert len(buf.episode_returns) == int(np.sum(buf.dones))
    flat = buf.flat(buf.obs)
    np.testing.assert_array_equal(flat[31], buf.obs[1, 1])
