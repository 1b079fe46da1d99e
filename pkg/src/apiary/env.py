"""Episodic move-to-pose task with domain randomization.

An episode starts at the origin at rest. Reset samples a goal pose
(uniform per-axis position offset and per-axis rotation-vector angle) and
a body mass factor. The observation is the 12-vector

    [pos_err(3), ori_err(3), lin_vel(3), ang_vel(3)]

with pos_err = goal - current in the world frame, ori_err the world-frame
rotation vector from current to goal attitude, lin_vel world, ang_vel
body. Reward pays for reducing pose error (potential difference form),
charges for speed every step, pays a one-time bonus when the success
condition latches (in tolerance for hold_steps consecutive steps) and a
penalty on leaving the play volume:

    r = w_pos*(|e_p'| - |e_p|) + w_ori*(|e_o'| - |e_o|)
        - w_linvel*|v| - w_angvel*|w| + bonus*[success latched] - penalty*[oob]

Both bracket terms coincide with episode termination, so each pays at
most once. Termination: the success condition held for hold_steps
consecutive steps, out-of-bounds, or episode_len reached.

`env_step` is the scalar reference surface; `BatchEnv` advances many
independent environments with the same broadcastable math, so a batched
rollout is bit-identical to stepping each environment alone. Each
environment owns an RNG stream derived from (master seed, env index).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import math3d as m3
from .actuation import ActuationLimits, Wrench, apply_limits, denormalize_action
from .dynamics import (
    FULL_6DOF,
    BodyParams,
    DofMask,
    RigidState,
    SimulationDivergedError,
    step,
    step_arrays,
)

OBS_DIM = 12
ACT_DIM = 6
POS_ERR = slice(0, 3)
ORI_ERR = slice(3, 6)
LIN_VEL = slice(6, 9)
ANG_VEL = slice(9, 12)


@dataclass
class EpisodeGoal:
    position: np.ndarray
    attitude: np.ndarray

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=np.float64)
        self.attitude = np.asarray(self.attitude, dtype=np.float64)

    def copy(self) -> "EpisodeGoal":
        return EpisodeGoal(self.position.copy(), self.attitude.copy())


@dataclass(frozen=True)
class RewardWeights:
    w_pos: float = 10.0
    w_ori: float = 5.0
    w_linvel: float = 0.05
    w_angvel: float = 0.05
    bonus_success: float = 20.0
    penalty_oob: float = 10.0

    def __post_init__(self) -> None:
        if min(self.w_pos, self.w_ori, self.w_linvel, self.w_angvel) < 0.0:
            raise ValueError("reward weights must be >= 0")


@dataclass(frozen=True)
class EnvConfig:
    goal_pos_range: np.ndarray = field(default_factory=lambda: m3.vec3(0.5, 0.5, 0.5))
    goal_ang_range: np.ndarray = field(
        default_factory=lambda: np.full(3, np.deg2rad(30.0))
    )
    mass_range: tuple[float, float] = (0.75, 1.25)
    episode_len: int = 1875
    success_pos_tol: float = 0.05
    success_ori_tol: float = np.deg2rad(5.0)
    success_vel_tol: float = 0.05
    success_angvel_tol: float = 0.05
    hold_steps: int = 25
    oob_radius: float = 2.0
    dt: float = 0.016
    mask: DofMask = FULL_6DOF
    body: BodyParams = field(default_factory=BodyParams)
    limits: ActuationLimits = field(default_factory=ActuationLimits)
    body_frame_obs: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "goal_pos_range", np.asarray(self.goal_pos_range, dtype=np.float64)
        )
        object.__setattr__(
            self, "goal_ang_range", np.asarray(self.goal_ang_range, dtype=np.float64)
        )
        if self.episode_len <= 0:
            raise ValueError("episode_len must be positive")
        if min(
            self.success_pos_tol,
            self.success_ori_tol,
            self.success_vel_tol,
            self.success_angvel_tol,
        ) <= 0.0:
            raise ValueError("success tolerances must be positive")
        lo, hi = self.mass_range
        if not (0.0 < lo <= hi):
            raise ValueError("mass_range must satisfy 0 < lo <= hi")
        if self.hold_steps <= 0 or self.oob_radius <= 0.0 or self.dt <= 0.0:
            raise ValueError("hold_steps, oob_radius and dt must be positive")


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def reset(config: EnvConfig, seed) -> tuple[RigidState, EpisodeGoal, BodyParams]:
    """Sample a fresh episode. `seed` is an int or a Generator.

    The start pose is always origin/identity/rest; goal components on
    masked DOFs are zeroed so constrained scenarios stay reachable.
    """
    rng = _as_rng(seed)
    tmask = config.mask.translation_floats()
    rmask = config.mask.rotation_floats()
    goal_pos = rng.uniform(-config.goal_pos_range, config.goal_pos_range) * tmask
    goal_rotvec = rng.uniform(-config.goal_ang_range, config.goal_ang_range) * rmask
    mass_factor = rng.uniform(config.mass_range[0], config.mass_range[1])
    goal = EpisodeGoal(goal_pos, m3.quat_from_rotvec(goal_rotvec))
    return RigidState(), goal, config.body.scaled(mass_factor)


def observe_arrays(
    position: np.ndarray,
    attitude: np.ndarray,
    lin_vel: np.ndarray,
    ang_vel: np.ndarray,
    goal_pos: np.ndarray,
    goal_att: np.ndarray,
    body_frame: bool = False,
) -> np.ndarray:
    pos_err = goal_pos - position
    ori_err = m3.quat_error(goal_att, attitude)
    vel = lin_vel
    if body_frame:
        pos_err = m3.quat_rotate_inv(attitude, pos_err)
        ori_err = m3.quat_rotate_inv(attitude, ori_err)
        vel = m3.quat_rotate_inv(attitude, vel)
    return np.concatenate([pos_err, ori_err, vel, ang_vel], axis=-1)


def observe(state: RigidState, goal: EpisodeGoal, body_frame: bool = False) -> np.ndarray:
    """12-vector observation; all-zero exactly when state sits at the goal."""
    return observe_arrays(
        state.position,
        state.attitude,
        state.lin_vel,
        state.ang_vel,
        goal.position,
        goal.attitude,
        body_frame,
    )


def success_flags(obs: np.ndarray, config: EnvConfig) -> np.ndarray:
    """Instantaneous success condition (pose and twist inside tolerances)."""
    return (
        (m3.vec_norm(obs[..., POS_ERR]) <= config.success_pos_tol)
        & (m3.vec_norm(obs[..., ORI_ERR]) <= config.success_ori_tol)
        & (m3.vec_norm(obs[..., LIN_VEL]) <= config.success_vel_tol)
        & (m3.vec_norm(obs[..., ANG_VEL]) <= config.success_angvel_tol)
    )


def reward_arrays(
    prev_obs: np.ndarray,
    obs: np.ndarray,
    weights: RewardWeights,
    config: EnvConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Base reward (shaping, velocity costs, oob penalty) plus condition flags.

    The success bonus is NOT included here: it pays out only once the
    success condition has latched (held for hold_steps consecutive ticks),
    which is episode bookkeeping the caller owns. Out-of-bounds is a
    single-tick event because it terminates the episode.
    """
    pe_prev = m3.vec_norm(prev_obs[..., POS_ERR])
    pe = m3.vec_norm(obs[..., POS_ERR])
    oe_prev = m3.vec_norm(prev_obs[..., ORI_ERR])
    oe = m3.vec_norm(obs[..., ORI_ERR])
    lv = m3.vec_norm(obs[..., LIN_VEL])
    av = m3.vec_norm(obs[..., ANG_VEL])
    succ = success_flags(obs, config)
    oob = pe > config.oob_radius
    r = (
        weights.w_pos * (pe_prev - pe)
        + weights.w_ori * (oe_prev - oe)
        - weights.w_linvel * lv
        - weights.w_angvel * av
        - weights.penalty_oob * oob
    )
    return r, succ, oob


def reward(
    prev_obs: np.ndarray,
    obs: np.ndarray,
    weights: RewardWeights,
    config: EnvConfig,
    success_latched: bool = False,
) -> float:
    """Scalar reward for one transition.

    Pass success_latched=True on the tick the success condition completes
    its hold (the episode's terminal success tick); that is when
    bonus_success applies. Ticks merely inside tolerance earn no bonus.
    """
    r, _, _ = reward_arrays(
        np.asarray(prev_obs, dtype=np.float64),
        np.asarray(obs, dtype=np.float64),
        weights,
        config,
    )
    if success_latched:
        r = r + weights.bonus_success
    return float(r)


def env_step(
    state: RigidState,
    goal: EpisodeGoal,
    params: BodyParams,
    action: np.ndarray,
    config: EnvConfig,
    weights: RewardWeights,
    prev_obs: np.ndarray | None = None,
    hold_count: int = 0,
    step_count: int = 0,
) -> tuple[RigidState, np.ndarray, float, bool, dict]:
    """One control tick: denormalize -> clamp -> propagate -> observe -> reward.

    hold_count/step_count carry the episode's termination bookkeeping; the
    returned info dict holds their updated values plus which termination
    fired.
    """
    if prev_obs is None:
        prev_obs = observe(state, goal, config.body_frame_obs)
    cmd = denormalize_action(action, config.limits)
    applied = apply_limits(None, cmd, config.limits, config.dt)
    new_state = step(state, applied, params, config.mask, config.dt)
    obs = observe(new_state, goal, config.body_frame_obs)
    r, succ, oob = reward_arrays(prev_obs, obs, weights, config)
    hold = hold_count + 1 if bool(succ) else 0
    steps = step_count + 1
    done_success = hold >= config.hold_steps
    if done_success:
        r = r + weights.bonus_success
    done_oob = bool(oob)
    done_timeout = steps >= config.episode_len
    done = done_success or done_oob or done_timeout
    if done_success:
        reason = "success"
    elif done_oob:
        reason = "oob"
    elif done_timeout:
        reason = "timeout"
    else:
        reason = ""
    info = {
        "hold_count": hold,
        "step_count": steps,
        "success": done_success,
        "oob": done_oob,
        "timeout": done_timeout and not done_success and not done_oob,
        "done_reason": reason,
        "wrench": applied,
    }
    return new_state, obs, float(r), done, info


class Env:
    """Single-environment convenience wrapper over the pure functions."""

    def __init__(self, config: EnvConfig, weights: RewardWeights, seed=0):
        self.config = config
        self.weights = weights
        self.rng = _as_rng(seed)
        self.state: RigidState | None = None
        self.goal: EpisodeGoal | None = None
        self.params: BodyParams | None = None
        self.obs: np.ndarray | None = None
        self.hold_count = 0
        self.step_count = 0

    def reset(self) -> np.ndarray:
        self.state, self.goal, self.params = reset(self.config, self.rng)
        self.obs = observe(self.state, self.goal, self.config.body_frame_obs)
        self.hold_count = 0
        self.step_count = 0
        return self.obs

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, bool, dict]:
        self.state, obs, r, done, info = env_step(
            self.state,
            self.goal,
            self.params,
            action,
            self.config,
            self.weights,
            prev_obs=self.obs,
            hold_count=self.hold_count,
            step_count=self.step_count,
        )
        self.obs = obs
        self.hold_count = info["hold_count"]
        self.step_count = info["step_count"]
        return obs, r, done, info


class BatchEnv:
    """n independent environments advanced in lockstep with array math.

    Per-env RNG streams are seeded from (master seed, env index), so the
    trajectory of env i does not depend on n_envs or on how a caller
    shards work. With auto_reset a finished environment immediately starts
    a new episode; without it the environment freezes at its terminal
    state (used for evaluation).
    """

    def __init__(
        self,
        n_envs: int,
        config: EnvConfig,
        weights: RewardWeights,
        seed: int = 0,
        auto_reset: bool = True,
        episode_seeds: list | None = None,
    ):
        if n_envs < 1:
            raise ValueError("n_envs must be >= 1")
        self.n = n_envs
        self.config = config
        self.weights = weights
        self.auto_reset = auto_reset
        if episode_seeds is not None:
            if len(episode_seeds) != n_envs:
                raise ValueError("need one episode seed per env")
            self.rngs = [np.random.default_rng(s) for s in episode_seeds]
        else:
            self.rngs = [np.random.default_rng([seed, i]) for i in range(n_envs)]

        self.pos = np.zeros((n_envs, 3))
        self.att = np.tile(m3.quat_identity(), (n_envs, 1))
        self.linvel = np.zeros((n_envs, 3))
        self.angvel = np.zeros((n_envs, 3))
        self.goal_pos = np.zeros((n_envs, 3))
        self.goal_att = np.tile(m3.quat_identity(), (n_envs, 1))
        self.mass = np.full(n_envs, config.body.mass)
        self.inertia = np.tile(config.body.inertia_diag, (n_envs, 1))
        self.com = np.tile(config.body.com_offset, (n_envs, 1))
        self.hold = np.zeros(n_envs, dtype=np.int64)
        self.steps = np.zeros(n_envs, dtype=np.int64)
        self.frozen = np.zeros(n_envs, dtype=bool)
        self.obs = np.zeros((n_envs, OBS_DIM))
        self.episode_return = np.zeros(n_envs)
        self._tmask = config.mask.translation_floats()
        self._rmask = config.mask.rotation_floats()
        for i in range(n_envs):
            self.reset_env(i)

    def reset_env(self, i: int) -> None:
        state, goal, params = reset(self.config, self.rngs[i])
        self.pos[i] = state.position
        self.att[i] = state.attitude
        self.linvel[i] = state.lin_vel
        self.angvel[i] = state.ang_vel
        self.goal_pos[i] = goal.position
        self.goal_att[i] = goal.attitude
        self.mass[i] = params.mass
        self.inertia[i] = params.inertia_diag
        self.hold[i] = 0
        self.steps[i] = 0
        self.frozen[i] = False
        self.episode_return[i] = 0.0
        self.obs[i] = observe_arrays(
            self.pos[i],
            self.att[i],
            self.linvel[i],
            self.angvel[i],
            self.goal_pos[i],
            self.goal_att[i],
            self.config.body_frame_obs,
        )

    def step(self, actions: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[dict]]:
        """Advance every live env one tick.

        Returns (obs, rewards, dones, finished) where finished lists one
        record per episode that terminated on this tick.
        """
        actions = np.asarray(actions, dtype=np.float64)
        if actions.shape != (self.n, ACT_DIM):
            raise ValueError(f"actions must have shape ({self.n}, {ACT_DIM})")
        if not np.all(np.isfinite(actions)):
            bad = int(np.argwhere(~np.all(np.isfinite(actions), axis=1))[0, 0])
            raise ValueError(f"non-finite action for env {bad}")
        cfg = self.config
        a = np.clip(actions, -1.0, 1.0)
        force = a[:, :3] * cfg.limits.f_max
        torque = a[:, 3:] * cfg.limits.tau_max

        pos2, att2, lv2, av2 = step_arrays(
            self.pos,
            self.att,
            self.linvel,
            self.angvel,
            force,
            torque,
            self.mass,
            self.inertia,
            self.com,
            self._tmask,
            self._rmask,
            cfg.dt,
        )
        live = ~self.frozen
        self.pos = np.where(live[:, None], pos2, self.pos)
        self.att = np.where(live[:, None], att2, self.att)
        self.linvel = np.where(live[:, None], lv2, self.linvel)
        self.angvel = np.where(live[:, None], av2, self.angvel)
        if not (
            np.all(np.isfinite(self.pos))
            and np.all(np.isfinite(self.att))
            and np.all(np.isfinite(self.linvel))
            and np.all(np.isfinite(self.angvel))
        ):
            finite = (
                np.all(np.isfinite(self.pos), axis=1)
                & np.all(np.isfinite(self.att), axis=1)
                & np.all(np.isfinite(self.linvel), axis=1)
                & np.all(np.isfinite(self.angvel), axis=1)
            )
            bad = int(np.argwhere(~finite)[0, 0])
            raise SimulationDivergedError(f"env {bad}: state went non-finite")

        prev_obs = self.obs
        obs = observe_arrays(
            self.pos, self.att, self.linvel, self.angvel, self.goal_pos, self.goal_att,
            cfg.body_frame_obs,
        )
        r, succ, oob = reward_arrays(prev_obs, obs, self.weights, cfg)
        r = np.where(live, r, 0.0)
        self.obs = np.where(live[:, None], obs, self.obs)

        self.hold = np.where(live & succ, self.hold + 1, 0)
        self.steps = np.where(live, self.steps + 1, self.steps)
        done_success = live & (self.hold >= cfg.hold_steps)
        r = r + self.weights.bonus_success * done_success
        done_oob = live & oob
        done_timeout = live & (self.steps >= cfg.episode_len)
        done = done_success | done_oob | done_timeout
        self.episode_return = np.where(live, self.episode_return + r, self.episode_return)

        finished = []
        for i in np.flatnonzero(done):
            i = int(i)
            if done_success[i]:
                reason = "success"
            elif done_oob[i]:
                reason = "oob"
            else:
                reason = "timeout"
            finished.append(
                {
                    "env": i,
                    "reason": reason,
                    "success": bool(done_success[i]),
                    "steps": int(self.steps[i]),
                    "episode_return": float(self.episode_return[i]),
                    "final_obs": self.obs[i].copy(),
                }
            )
            if self.auto_reset:
                self.reset_env(i)
            else:
                self.frozen[i] = True
        return self.obs.copy(), r, done, finished

    def all_frozen(self) -> bool:
        return bool(np.all(self.frozen))


@dataclass
class RolloutBuffer:
    """On-policy rollout storage, env-major: arrays are (n_envs, horizon, ...)."""

    obs: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    dones: np.ndarray
    bootstrap_values: np.ndarray
    episode_returns: list[float]
    episode_successes: list[bool]

    @property
    def n_envs(self) -> int:
        return self.obs.shape[0]

    @property
    def horizon(self) -> int:
        return self.obs.shape[1]

    def flat(self, arr: np.ndarray) -> np.ndarray:
        """(n_envs, horizon, ...) -> (n_envs*horizon, ...) keeping env-major order."""
        return arr.reshape(arr.shape[0] * arr.shape[1], *arr.shape[2:])


def batch_rollout(
    policy,
    n_envs: int,
    horizon: int,
    config: EnvConfig,
    weights: RewardWeights,
    seed: int = 0,
    batch_env: BatchEnv | None = None,
) -> RolloutBuffer:
    """Collect horizon steps from n_envs auto-resetting environments.

    `policy` provides sample(obs_batch, rngs) -> (actions, log_probs) and
    value(obs_batch) -> values; exploration noise for env i comes from the
    env's own RNG stream. Pass batch_env to continue an existing stream
    across successive rollouts (training does this); otherwise a fresh
    BatchEnv is created from seed.
    """
    if n_envs < 1 or horizon < 1:
        raise ValueError("n_envs and horizon must be >= 1")
    benv = batch_env if batch_env is not None else BatchEnv(n_envs, config, weights, seed)
    obs_buf = np.zeros((n_envs, horizon, OBS_DIM))
    act_buf = np.zeros((n_envs, horizon, ACT_DIM))
    logp_buf = np.zeros((n_envs, horizon))
    rew_buf = np.zeros((n_envs, horizon))
    val_buf = np.zeros((n_envs, horizon))
    done_buf = np.zeros((n_envs, horizon))
    ep_returns: list[float] = []
    ep_success: list[bool] = []

    obs = benv.obs.copy()
    for t in range(horizon):
        actions, log_probs = policy.sample(obs, benv.rngs)
        values = policy.value(obs)
        obs_buf[:, t] = obs
        act_buf[:, t] = actions
        logp_buf[:, t] = log_probs
        val_buf[:, t] = values
        obs, r, done, finished = benv.step(actions)
        rew_buf[:, t] = r
        done_buf[:, t] = done.astype(np.float64)
        for rec in finished:
            ep_returns.append(rec["episode_return"])
            ep_success.append(rec["success"])
    bootstrap = policy.value(obs)
    return RolloutBuffer(
        obs=obs_buf,
        actions=act_buf,
        log_probs=logp_buf,
        rewards=rew_buf,
        values=val_buf,
        dones=done_buf,
        bootstrap_values=bootstrap,
        episode_returns=ep_returns,
        episode_successes=ep_success,
    )
