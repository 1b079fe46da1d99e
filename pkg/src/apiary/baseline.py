"""Classical PD pose regulator used as the comparison controller.

Force obeys a world-frame PD law on position error, then rotates into the
body frame where the thrusters act. Torque is PD on the body-frame
rotation-vector attitude error with body-rate damping. Gains default to a
critically damped translation loop for the nominal body (kd = 2*sqrt(kp*m)),
which captures a 5 cm/s drift to under 5 mm/s within 10 s and settles a
0.5 m translation without overshoot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import math3d as m3
from .actuation import ActuationLimits, Wrench, apply_limits
from .dynamics import RigidState
from .env import EpisodeGoal


@dataclass(frozen=True)
class PdGains:
    kp_pos: float = 1.0
    kd_pos: float = 6.164414002969432  # 2*sqrt(kp_pos * nominal mass 9.5)
    kp_att: float = 0.2
    kd_att: float = 0.35

    def __post_init__(self) -> None:
        if min(self.kp_pos, self.kd_pos, self.kp_att, self.kd_att) < 0.0:
            raise ValueError("gains must be >= 0")
        if (self.kp_pos > 0.0 and self.kd_pos == 0.0) or (
            self.kp_att > 0.0 and self.kd_att == 0.0
        ):
            raise ValueError("proportional action needs a damping term")


def pd_wrench(
    state: RigidState,
    goal: EpisodeGoal,
    gains: PdGains | None = None,
    limits: ActuationLimits | None = None,
    dt: float = 0.016,
) -> Wrench:
    """PD pose-regulation wrench in the body frame, optionally clamped."""
    g = gains if gains is not None else PdGains()
    pos_err = goal.position - state.position
    f_world = g.kp_pos * pos_err - g.kd_pos * state.lin_vel
    f_body = m3.quat_rotate_inv(state.attitude, f_world)
    ori_err_world = m3.quat_error(goal.attitude, state.attitude)
    ori_err_body = m3.quat_rotate_inv(state.attitude, ori_err_world)
    tau = g.kp_att * ori_err_body - g.kd_att * state.ang_vel
    cmd = Wrench(f_body, tau)
    if limits is not None:
        cmd = apply_limits(None, cmd, limits, dt)
    return cmd


def hold_pose_controller(
    captured_state: RigidState,
    gains: PdGains | None = None,
    limits: ActuationLimits | None = None,
    dt: float = 0.016,
):
    """Controller closure that regulates to the pose captured at call time.

    The returned callable maps a current RigidState to a Wrench; velocity
    targets are implicitly zero, so it brings the body to rest at the
    captured pose regardless of the motion it had when captured.
    """
    hold_goal = EpisodeGoal(
        np.array(captured_state.position, dtype=np.float64, copy=True),
        np.array(captured_state.attitude, dtype=np.float64, copy=True),
    )

    def controller(state: RigidState) -> Wrench:
        return pd_wrench(state, hold_goal, gains, limits, dt)

    return controller
