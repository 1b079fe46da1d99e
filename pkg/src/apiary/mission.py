"""Maneuver sequencing, safety supervision, trajectory logging and metrics.

A maneuver is a goal pose derived from the pose at maneuver entry
(translate/rotate), an absolute pose (goto_pose), or the dock pose
captured at sequence start (dock, dock_approach = dock plus a standoff
along the dock frame's +X). Each maneuver runs a fixed-rate closed loop
for its full timeout: measure -> safety monitor -> controller -> clamp ->
log -> propagate. Running to timeout (instead of stopping at first
tolerance entry) lets controllers settle fully, so final errors reflect
steady state.

Safety supervision guards the RL policy only. The monitor arms once the
vehicle first enters the safety envelope around the goal (large commanded
motions start outside it and must not trip); once armed,
trip_consecutive consecutive violating ticks switch control to a
hold-pose fallback on exactly the tick the counter fills, and the log's
mode column shows the switch on that same tick. The fallback captures
the measured pose at the trip and is absorbing for the rest of the
maneuver; a sequence resumes after a fallback only if the very next
entry carries the resume flag, otherwise all remaining entries are
skipped.

Fault injection models a localization anomaly: from a given tick to the
end of its maneuver, the measured position is offset by a constant
vector. Controllers and the monitor see measured state; physics
propagates the true state; the log records the measured state, so logged
errors always recompute exactly from logged state and goal.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np

from . import math3d as m3
from .actuation import ActuationLimits, Wrench, apply_limits
from .baseline import PdGains, hold_pose_controller, pd_wrench
from .dynamics import FULL_6DOF, BodyParams, DofMask, RigidState, step
from .env import EpisodeGoal, observe
from .learn.nets import PolicyNet, policy_mean

LOG_COLUMNS = [
    "t",
    "px", "py", "pz",
    "qw", "qx", "qy", "qz",
    "vx", "vy", "vz",
    "wx", "wy", "wz",
    "Fx", "Fy", "Fz",
    "Tx", "Ty", "Tz",
    "Fcx", "Fcy", "Fcz",
    "Tcx", "Tcy", "Tcz",
    "epx", "epy", "epz",
    "erx", "ery", "erz",
    "mode", "maneuver",
]

_AXIS_NAMES = {"x": 0, "y": 1, "z": 2}
MANEUVER_KINDS = ("translate", "rotate", "goto_pose", "dock_approach", "dock")


class ControlMode(enum.Enum):
    RL_POLICY = "rl_policy"
    BASELINE = "baseline"
    HOLD_FALLBACK = "hold_fallback"


@dataclass(frozen=True)
class SafetyThresholds:
    max_pos_err: float = 0.25
    max_ori_err: float = np.deg2rad(30.0)
    max_lin_vel: float = 0.5
    max_ang_vel: float = 1.0
    trip_consecutive: int = 3

    def __post_init__(self) -> None:
        if min(self.max_pos_err, self.max_ori_err, self.max_lin_vel, self.max_ang_vel) <= 0.0:
            raise ValueError("safety thresholds must be positive")
        if self.trip_consecutive < 1:
            raise ValueError("trip_consecutive must be >= 1")


@dataclass(frozen=True)
class Maneuver:
    kind: str
    axis: int | None = None
    magnitude: float = 0.0  # meters for translate, radians for rotate
    timeout: float = 30.0
    pose: tuple | None = None  # goto_pose target: (px,py,pz,qw,qx,qy,qz)
    resume: bool = False
    note: str = ""

    def __post_init__(self) -> None:
        if self.kind not in MANEUVER_KINDS:
            raise ValueError(f"unknown maneuver kind {self.kind!r}")
        if self.timeout <= 0.0:
            raise ValueError("timeout must be positive")
        if self.kind in ("translate", "rotate"):
            if self.axis not in (0, 1, 2):
                raise ValueError(f"{self.kind} needs axis 0, 1 or 2")
        if self.kind == "goto_pose":
            if self.pose is None or len(self.pose) != 7:
                raise ValueError("goto_pose needs 7 numbers: px py pz qw qx qy qz")


@dataclass(frozen=True)
class FaultSpec:
    """Constant measured-position offset from start_tick to maneuver end."""

    maneuver_index: int
    start_tick: int
    pos_offset: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "pos_offset", np.asarray(self.pos_offset, dtype=np.float64)
        )
        if self.maneuver_index < 0 or self.start_tick < 0:
            raise ValueError("maneuver_index and start_tick must be >= 0")
        if self.pos_offset.shape != (3,) or not np.all(np.isfinite(self.pos_offset)):
            raise ValueError("pos_offset must be a finite 3-vector")


@dataclass(frozen=True)
class MissionConfig:
    body: BodyParams = field(default_factory=BodyParams)
    limits: ActuationLimits = field(default_factory=ActuationLimits)
    safety: SafetyThresholds = field(default_factory=SafetyThresholds)
    gains: PdGains = field(default_factory=PdGains)
    dt: float = 0.016
    mask: DofMask = FULL_6DOF
    pos_tol: float = 0.05
    ori_tol: float = np.deg2rad(5.0)
    vel_tol: float = 0.05
    angvel_tol: float = 0.05
    hold_steps: int = 25
    dock_pos_tol: float = 0.02
    dock_ori_tol: float = np.deg2rad(2.0)
    dock_standoff: float = 0.3

    def __post_init__(self) -> None:
        if self.dt <= 0.0 or self.hold_steps < 1:
            raise ValueError("dt must be positive and hold_steps >= 1")
        if min(
            self.pos_tol, self.ori_tol, self.vel_tol, self.angvel_tol,
            self.dock_pos_tol, self.dock_ori_tol, self.dock_standoff,
        ) <= 0.0:
            raise ValueError("tolerances and standoff must be positive")


class TrajectoryLog:
    """Fixed-schema control-tick log; one row per tick, strictly increasing t."""

    def __init__(self, meta: dict | None = None):
        self._rows: list[list[float]] = []
        self._modes: list[str] = []
        self._maneuvers: list[int] = []
        self.meta = dict(meta) if meta else {}

    def __len__(self) -> int:
        return len(self._rows)

    def append(
        self,
        t: float,
        state: RigidState,
        commanded: Wrench,
        applied: Wrench,
        pos_err: np.ndarray,
        ori_err: np.ndarray,
        mode: ControlMode,
        maneuver: int,
    ) -> None:
        if self._rows and t <= self._rows[-1][0]:
            raise ValueError(f"log time must strictly increase: {t} after {self._rows[-1][0]}")
        row = [float(t)]
        row.extend(float(v) for v in state.position)
        row.extend(float(v) for v in state.attitude)
        row.extend(float(v) for v in state.lin_vel)
        row.extend(float(v) for v in state.ang_vel)
        row.extend(float(v) for v in commanded.force)
        row.extend(float(v) for v in commanded.torque)
        row.extend(float(v) for v in applied.force)
        row.extend(float(v) for v in applied.torque)
        row.extend(float(v) for v in pos_err)
        row.extend(float(v) for v in ori_err)
        self._rows.append(row)
        self._modes.append(mode.value)
        self._maneuvers.append(int(maneuver))

    def numeric(self) -> np.ndarray:
        """(n_rows, 32) array of the numeric columns in schema order."""
        if not self._rows:
            return np.zeros((0, 32))
        return np.array(self._rows, dtype=np.float64)

    def column(self, name: str) -> np.ndarray:
        if name == "mode":
            return np.array(self._modes)
        if name == "maneuver":
            return np.array(self._maneuvers, dtype=np.int64)
        idx = LOG_COLUMNS.index(name)
        return self.numeric()[:, idx]

    def columns(self, names: list[str]) -> np.ndarray:
        num = self.numeric()
        return num[:, [LOG_COLUMNS.index(n) for n in names]]

    def rows_for_maneuver(self, index: int) -> np.ndarray:
        sel = np.array(self._maneuvers, dtype=np.int64) == index
        return self.numeric()[sel]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(LOG_COLUMNS)
            for row, mode, man in zip(self._rows, self._modes, self._maneuvers):
                w.writerow([repr(v) for v in row] + [mode, man])

    @classmethod
    def read_csv(cls, path) -> "TrajectoryLog":
        log = cls()
        with open(path, newline="") as f:
            r = csv.reader(f)
            header = next(r)
            if header != LOG_COLUMNS:
                raise ValueError("unexpected trajectory log header")
            for line in r:
                log._rows.append([float(v) for v in line[:32]])
                log._modes.append(line[32])
                log._maneuvers.append(int(line[33]))
        return log


@dataclass
class ManeuverOutcome:
    index: int
    kind: str
    outcome: str  # success | fallback_triggered | timeout | skipped
    ticks: int
    settle_time: float  # s from maneuver start to start of the final in-tolerance streak
    final_pos_err: float
    final_ori_err: float
    end_mode: str
    note: str = ""


@dataclass
class MissionResult:
    outcomes: list[ManeuverOutcome]
    log: TrajectoryLog
    final_state: RigidState


def safety_check(
    state: RigidState,
    goal: EpisodeGoal,
    thresholds: SafetyThresholds,
    trip_counter: int,
) -> tuple[ControlMode | None, int]:
    """Threshold monitor step: (decision, updated counter).

    The counter rises by one on a tick where any of position error,
    orientation error, speed or angular speed exceeds its limit, and
    resets to zero on a clean tick. Decision is HOLD_FALLBACK once the
    counter reaches trip_consecutive, else None (keep the current mode).
    """
    pos_err = float(m3.vec_norm(goal.position - state.position))
    ori_err = float(m3.vec_norm(m3.quat_error(goal.attitude, state.attitude)))
    speed = float(m3.vec_norm(state.lin_vel))
    rate = float(m3.vec_norm(state.ang_vel))
    violated = (
        pos_err > thresholds.max_pos_err
        or ori_err > thresholds.max_ori_err
        or speed > thresholds.max_lin_vel
        or rate > thresholds.max_ang_vel
    )
    counter = trip_counter + 1 if violated else 0
    decision = ControlMode.HOLD_FALLBACK if counter >= thresholds.trip_consecutive else None
    return decision, counter


def _inside_envelope(
    state: RigidState, goal: EpisodeGoal, thresholds: SafetyThresholds
) -> bool:
    _, counter = safety_check(state, goal, thresholds, 0)
    return counter == 0


def goal_for_maneuver(
    maneuver: Maneuver, entry: EpisodeGoal, dock_pose: EpisodeGoal, mc: MissionConfig
) -> EpisodeGoal:
    """Resolve a maneuver to an absolute goal pose.

    translate/rotate are relative to the entry pose; dock kinds target the
    dock pose (approach offset by dock_standoff along the dock frame +X);
    goto_pose is absolute.
    """
    if maneuver.kind == "translate":
        offset = np.zeros(3)
        offset[maneuver.axis] = maneuver.magnitude
        return EpisodeGoal(entry.position + offset, entry.attitude.copy())
    if maneuver.kind == "rotate":
        axis = np.zeros(3)
        axis[maneuver.axis] = 1.0
        dq = m3.quat_from_axis_angle(axis, maneuver.magnitude)
        return EpisodeGoal(entry.position.copy(), m3.quat_mul(entry.attitude, dq))
    if maneuver.kind == "goto_pose":
        pose = np.asarray(maneuver.pose, dtype=np.float64)
        return EpisodeGoal(pose[:3], m3.quat_normalize(pose[3:]))
    if maneuver.kind == "dock_approach":
        standoff = m3.quat_rotate(dock_pose.attitude, m3.vec3(mc.dock_standoff, 0.0, 0.0))
        return EpisodeGoal(dock_pose.position + standoff, dock_pose.attitude.copy())
    # dock
    return dock_pose.copy()


def _measured(state: RigidState, offset: np.ndarray | None) -> RigidState:
    if offset is None:
        return state
    return RigidState(
        state.position + offset,
        state.attitude.copy(),
        state.lin_vel.copy(),
        state.ang_vel.copy(),
    )


def _rl_command(net: PolicyNet, measured: RigidState, goal: EpisodeGoal, limits: ActuationLimits) -> Wrench:
    """Pre-clamp wrench the policy asks for (mean action scaled to limits)."""
    action = policy_mean(net, observe(measured, goal))
    return Wrench(action[:3] * limits.f_max, action[3:] * limits.tau_max)


def run_maneuver(
    state: RigidState,
    maneuver: Maneuver,
    mode: ControlMode,
    mc: MissionConfig,
    net: PolicyNet | None = None,
    log: TrajectoryLog | None = None,
    maneuver_index: int = 0,
    fault: FaultSpec | None = None,
    dock_pose: EpisodeGoal | None = None,
    t0_tick: int = 0,
) -> tuple[RigidState, ManeuverOutcome]:
    """Run one maneuver for its full timeout at the control rate.

    Outcome is success when the maneuver's tolerance condition is true for
    the final hold_steps ticks, fallback_triggered if the safety monitor
    tripped, else timeout. Returns the true final state; the log records
    measured state.
    """
    if mode not in (ControlMode.RL_POLICY, ControlMode.BASELINE):
        raise ValueError("run_maneuver starts in RL_POLICY or BASELINE mode")
    if mode is ControlMode.RL_POLICY and net is None:
        raise ValueError("RL_POLICY mode needs a loaded policy")
    if not state.is_finite():
        raise ValueError("non-finite entry state")
    if log is None:
        log = TrajectoryLog()

    offset0 = fault.pos_offset if fault is not None and fault.start_tick <= 0 else None
    entry_meas = _measured(state, offset0)
    entry = EpisodeGoal(entry_meas.position.copy(), entry_meas.attitude.copy())
    if dock_pose is None:
        dock_pose = entry
    goal = goal_for_maneuver(maneuver, entry, dock_pose, mc)

    if maneuver.kind in ("dock", "dock_approach"):
        pos_tol, ori_tol = mc.dock_pos_tol, mc.dock_ori_tol
    else:
        pos_tol, ori_tol = mc.pos_tol, mc.ori_tol

    n_ticks = int(round(maneuver.timeout / mc.dt))
    cur_mode = mode
    trip_count = 0
    armed = False
    hold_ctrl = None
    streak = 0
    streak_start = -1
    prev_applied: Wrench | None = None

    for k in range(n_ticks):
        offset = (
            fault.pos_offset if fault is not None and k >= fault.start_tick else None
        )
        meas = _measured(state, offset)
        pos_err = goal.position - meas.position
        ori_err = m3.quat_error(goal.attitude, meas.attitude)

        if cur_mode is ControlMode.RL_POLICY:
            if not armed and _inside_envelope(meas, goal, mc.safety):
                armed = True
            if armed:
                decision, trip_count = safety_check(meas, goal, mc.safety, trip_count)
                if decision is ControlMode.HOLD_FALLBACK:
                    cur_mode = ControlMode.HOLD_FALLBACK
                    hold_ctrl = hold_pose_controller(meas, mc.gains, None, mc.dt)

        if cur_mode is ControlMode.HOLD_FALLBACK:
            commanded = hold_ctrl(meas)
        elif cur_mode is ControlMode.RL_POLICY:
            commanded = _rl_command(net, meas, goal, mc.limits)
        else:
            commanded = pd_wrench(meas, goal, mc.gains, None, mc.dt)
        applied = apply_limits(prev_applied, commanded, mc.limits, mc.dt)

        log.append(
            (t0_tick + k) * mc.dt, meas, commanded, applied, pos_err, ori_err,
            cur_mode, maneuver_index,
        )

        ok = (
            cur_mode is not ControlMode.HOLD_FALLBACK
            and float(m3.vec_norm(pos_err)) <= pos_tol
            and float(m3.vec_norm(ori_err)) <= ori_tol
            and float(m3.vec_norm(meas.lin_vel)) <= mc.vel_tol
            and float(m3.vec_norm(meas.ang_vel)) <= mc.angvel_tol
        )
        if ok:
            if streak == 0:
                streak_start = k
            streak += 1
        else:
            streak = 0

        state = step(state, applied, mc.body, mc.mask, mc.dt)
        prev_applied = applied

    if cur_mode is ControlMode.HOLD_FALLBACK:
        outcome = "fallback_triggered"
    elif streak >= mc.hold_steps:
        outcome = "success"
    else:
        outcome = "timeout"
    final_offset = fault.pos_offset if fault is not None and n_ticks > fault.start_tick else None
    final_meas = _measured(state, final_offset)
    out = ManeuverOutcome(
        index=maneuver_index,
        kind=maneuver.kind,
        outcome=outcome,
        ticks=n_ticks,
        settle_time=streak_start * mc.dt if outcome == "success" else float("nan"),
        final_pos_err=float(m3.vec_norm(goal.position - final_meas.position)),
        final_ori_err=float(m3.vec_norm(m3.quat_error(goal.attitude, final_meas.attitude))),
        end_mode=cur_mode.value,
        note=maneuver.note,
    )
    return state, out


def run_sequence(
    sequence: list[Maneuver],
    mode: ControlMode,
    mc: MissionConfig,
    net: PolicyNet | None = None,
    faults: list[FaultSpec] | None = None,
    start_state: RigidState | None = None,
) -> MissionResult:
    """Execute maneuvers in order with pause-on-fallback semantics.

    The dock pose is the sequence entry pose. After a fallback_triggered
    outcome the sequence runs the next entry only if it carries the resume
    flag; otherwise that entry and everything after it is skipped.
    """
    if not sequence:
        raise ValueError("sequence must not be empty")
    state = start_state.copy() if start_state is not None else RigidState()
    dock_pose = EpisodeGoal(state.position.copy(), state.attitude.copy())
    log = TrajectoryLog()
    fault_by_index = {f.maneuver_index: f for f in (faults or [])}
    outcomes: list[ManeuverOutcome] = []
    tick = 0
    paused = False
    aborted = False
    for i, man in enumerate(sequence):
        if aborted or (paused and not man.resume):
            aborted = True
            outcomes.append(
                ManeuverOutcome(
                    index=i, kind=man.kind, outcome="skipped", ticks=0,
                    settle_time=float("nan"), final_pos_err=float("nan"),
                    final_ori_err=float("nan"), end_mode="", note=man.note,
                )
            )
            continue
        paused = False
        state, out = run_maneuver(
            state, man, mode, mc,
            net=net, log=log, maneuver_index=i,
            fault=fault_by_index.get(i), dock_pose=dock_pose, t0_tick=tick,
        )
        tick += out.ticks
        outcomes.append(out)
        if out.outcome == "fallback_triggered":
            paused = True
    return MissionResult(outcomes, log, state)


@dataclass
class ManeuverMetrics:
    final_pos_err_axes: np.ndarray
    final_pos_err: float
    final_ori_err: float
    settle_time: float
    max_cross_axis_excursion: float
    path_length: float
    force_impulse: float
    torque_impulse: float

    SCALARS = (
        "final_pos_err",
        "final_ori_err",
        "settle_time",
        "max_cross_axis_excursion",
        "path_length",
        "force_impulse",
        "torque_impulse",
    )


@dataclass
class MetricReport:
    rl: ManeuverMetrics
    baseline: ManeuverMetrics
    diff: dict[str, float]


def metrics_from_log(
    log: TrajectoryLog,
    pos_tol: float = 0.05,
    ori_tol: float = np.deg2rad(5.0),
    dt: float = 0.016,
) -> ManeuverMetrics:
    """Scalar maneuver metrics from one log.

    Settle time is measured from the log's first row to the start of the
    suffix where position and orientation errors stay within tolerance.
    Cross-axis excursion is the largest position component perpendicular
    to the commanded displacement (or total displacement from entry when
    the maneuver commands none). Each row's post-clamp wrench is taken to
    act for one dt when integrating control effort.
    """
    if len(log) == 0:
        raise ValueError("empty log")
    num = log.numeric()
    t = num[:, 0]
    pos = num[:, 1:4]
    pos_err = num[:, 26:29]
    ori_err = num[:, 29:32]
    fc = num[:, 20:23]
    tc = num[:, 23:26]

    pe = m3.vec_norm(pos_err)
    oe = m3.vec_norm(ori_err)
    inside = (pe <= pos_tol) & (oe <= ori_tol)
    settle = float("nan")
    if inside[-1]:
        # walk back to the start of the final in-tolerance suffix
        idx = len(inside) - 1
        while idx > 0 and inside[idx - 1]:
            idx -= 1
        settle = float(t[idx] - t[0])

    entry = log.meta.get("entry_pos")
    goal = log.meta.get("goal_pos")
    entry = pos[0] if entry is None else np.asarray(entry, dtype=np.float64)
    if goal is None:
        # without meta, take the commanded displacement to end at the last position
        goal = pos[-1]
    else:
        goal = np.asarray(goal, dtype=np.float64)
    disp = goal - entry
    dn = float(m3.vec_norm(disp))
    rel = pos - entry
    if dn > 1e-9:
        u = disp / dn
        along = rel @ u
        perp = rel - along[:, None] * u
        cross = float(np.max(m3.vec_norm(perp)))
    else:
        cross = float(np.max(m3.vec_norm(rel)))

    deltas = np.diff(pos, axis=0)
    path = float(np.sum(m3.vec_norm(deltas))) if len(pos) > 1 else 0.0
    return ManeuverMetrics(
        final_pos_err_axes=pos_err[-1].copy(),
        final_pos_err=float(pe[-1]),
        final_ori_err=float(oe[-1]),
        settle_time=settle,
        max_cross_axis_excursion=cross,
        path_length=path,
        force_impulse=float(np.sum(m3.vec_norm(fc)) * dt),
        torque_impulse=float(np.sum(m3.vec_norm(tc)) * dt),
    )


def compare_metrics(
    log_rl: TrajectoryLog,
    log_baseline: TrajectoryLog,
    pos_tol: float = 0.05,
    ori_tol: float = np.deg2rad(5.0),
    dt: float = 0.016,
) -> MetricReport:
    """Side-by-side metrics for two logs of the same maneuver."""
    for key in ("kind", "axis", "magnitude"):
        a, b = log_rl.meta.get(key), log_baseline.meta.get(key)
        if a is not None and b is not None and a != b:
            raise ValueError(f"logs describe different maneuvers ({key}: {a!r} vs {b!r})")
    rl = metrics_from_log(log_rl, pos_tol, ori_tol, dt)
    base = metrics_from_log(log_baseline, pos_tol, ori_tol, dt)
    diff = {
        name: getattr(rl, name) - getattr(base, name) for name in ManeuverMetrics.SCALARS
    }
    return MetricReport(rl, base, diff)


def run_compare(
    maneuver: Maneuver,
    mc: MissionConfig,
    net: PolicyNet,
    start_state: RigidState | None = None,
) -> tuple[TrajectoryLog, TrajectoryLog, MetricReport]:
    """Run one maneuver twice from the same entry state: policy vs PD."""
    entry = start_state.copy() if start_state is not None else RigidState()
    goal = goal_for_maneuver(
        maneuver,
        EpisodeGoal(entry.position.copy(), entry.attitude.copy()),
        EpisodeGoal(entry.position.copy(), entry.attitude.copy()),
        mc,
    )
    meta = {
        "kind": maneuver.kind,
        "axis": -1 if maneuver.axis is None else maneuver.axis,
        "magnitude": maneuver.magnitude,
        "entry_pos": entry.position.copy(),
        "goal_pos": goal.position.copy(),
    }
    log_rl = TrajectoryLog(meta)
    log_pd = TrajectoryLog(meta)
    run_maneuver(entry.copy(), maneuver, ControlMode.RL_POLICY, mc, net=net, log=log_rl)
    run_maneuver(entry.copy(), maneuver, ControlMode.BASELINE, mc, log=log_pd)
    report = compare_metrics(log_rl, log_pd, mc.pos_tol, mc.ori_tol, mc.dt)
    return log_rl, log_pd, report


def _parse_error(path, line_no: int, msg: str) -> ValueError:
    return ValueError(f"{path}:{line_no}: {msg}")


def parse_maneuver_tokens(tokens: list[str], path="<spec>", line_no: int = 0) -> Maneuver:
    """Parse one maneuver from tokens: kind [args] timeout [resume] [los].

    translate/rotate take an axis letter and a magnitude (meters, or
    degrees for rotate); goto_pose takes px py pz qw qx qy qz; dock kinds
    take no arguments before the timeout.
    """
    if not tokens:
        raise _parse_error(path, line_no, "empty maneuver")
    kind = tokens[0]
    if kind not in MANEUVER_KINDS:
        raise _parse_error(path, line_no, f"unknown maneuver kind {kind!r}")
    flags = []
    rest = list(tokens[1:])
    while rest and rest[-1] in ("resume", "los"):
        flags.append(rest.pop())
    resume = "resume" in flags
    note = "loss_of_signal" if "los" in flags else ""
    try:
        if kind in ("translate", "rotate"):
            if len(rest) != 3:
                raise _parse_error(path, line_no, f"{kind} needs: axis magnitude timeout")
            axis = _AXIS_NAMES.get(rest[0].lower())
            if axis is None:
                raise _parse_error(path, line_no, f"axis must be x, y or z, got {rest[0]!r}")
            mag = float(rest[1])
            if kind == "rotate":
                mag = float(np.deg2rad(mag))
            return Maneuver(kind, axis, mag, float(rest[2]), resume=resume, note=note)
        if kind == "goto_pose":
            if len(rest) != 8:
                raise _parse_error(path, line_no, "goto_pose needs: px py pz qw qx qy qz timeout")
            pose = tuple(float(v) for v in rest[:7])
            return Maneuver(kind, pose=pose, timeout=float(rest[7]), resume=resume, note=note)
        if len(rest) != 1:
            raise _parse_error(path, line_no, f"{kind} needs: timeout")
        return Maneuver(kind, timeout=float(rest[0]), resume=resume, note=note)
    except ValueError as e:
        if str(e).startswith(str(path)):
            raise
        raise _parse_error(path, line_no, f"bad number in maneuver: {e}")


def parse_sequence_file(path) -> list[Maneuver]:
    """Read a maneuver sequence: one maneuver per line, # comments allowed."""
    maneuvers = []
    with open(path) as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            maneuvers.append(parse_maneuver_tokens(line.split(), path, line_no))
    if not maneuvers:
        raise ValueError(f"{path}: no maneuvers found")
    return maneuvers


def parse_maneuver_spec(spec: str) -> Maneuver:
    """Parse a colon-separated maneuver, e.g. translate:x:0.5 or rotate:z:-20:30."""
    return parse_maneuver_tokens(spec.split(":"), "<maneuver spec>", 0)


def parse_faults_file(path) -> list[FaultSpec]:
    """Read fault lines: pos_offset MANEUVER_INDEX START_TICK DX DY DZ."""
    faults = []
    with open(path) as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            if tokens[0] != "pos_offset" or len(tokens) != 6:
                raise _parse_error(
                    path, line_no, "expected: pos_offset MANEUVER_INDEX START_TICK DX DY DZ"
                )
            try:
                faults.append(
                    FaultSpec(
                        int(tokens[1]),
                        int(tokens[2]),
                        np.array([float(v) for v in tokens[3:6]]),
                    )
                )
            except ValueError as e:
                raise _parse_error(path, line_no, f"bad fault values: {e}")
    return faults


def stock_sequence() -> list[Maneuver]:
    """The shipped eight-maneuver demo: undock, two Z rotations, a second
    leg out, then two approach-and-dock attempts back at the entry pose."""
    ang = float(np.deg2rad(20.0))
    return [
        Maneuver("translate", 0, 0.5, 30.0),
        Maneuver("rotate", 2, -ang, 20.0),
        Maneuver("rotate", 2, ang, 20.0),
        Maneuver("translate", 0, 0.5, 30.0),
        Maneuver("dock_approach", timeout=30.0),
        Maneuver("dock", timeout=30.0),
        Maneuver("dock_approach", timeout=30.0, resume=True),
        Maneuver("dock", timeout=30.0, note="loss_of_signal"),
    ]
