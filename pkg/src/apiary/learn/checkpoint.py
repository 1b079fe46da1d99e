"""Binary policy checkpoint: self-describing, little-endian, float64.

Layout (all integers u32 LE, floats f64 LE):

    magic   b"APRY"
    version u32                  (currently 1)
    n_actor_sizes u32, sizes...  (layer widths incl. input/output)
    n_critic_sizes u32, sizes...
    obs_dim u32, obs_scales f64 x obs_dim
    log_std_min f64, log_std_max f64
    env_hash 32 bytes            (sha256 of the canonical env-config string)
    parameter arrays f64, flat, in nets.param_list order
    (end of file; trailing bytes are an error)

Loading rebuilds the exact PolicyNet: save -> load -> save is
byte-identical. The env hash lets callers detect a checkpoint replayed
under a different environment configuration without blocking it.
"""

from __future__ import annotations

import hashlib
import io
import struct

import numpy as np

from ..env import EnvConfig
from .nets import LOG_STD_MAX, LOG_STD_MIN, MlpParams, PolicyNet, param_list

MAGIC = b"APRY"
VERSION = 1


class CheckpointError(ValueError):
    """Malformed, truncated or wrong-format checkpoint data."""


def env_config_hash(config: EnvConfig) -> bytes:
    """sha256 over a canonical text form of every env field that shapes the task."""
    parts = [
        "goal_pos_range=" + ",".join(f"{v:.17g}" for v in config.goal_pos_range),
        "goal_ang_range=" + ",".join(f"{v:.17g}" for v in config.goal_ang_range),
        f"mass_range={config.mass_range[0]:.17g},{config.mass_range[1]:.17g}",
        f"episode_len={config.episode_len}",
        f"success_pos_tol={config.success_pos_tol:.17g}",
        f"success_ori_tol={config.success_ori_tol:.17g}",
        f"success_vel_tol={config.success_vel_tol:.17g}",
        f"success_angvel_tol={config.success_angvel_tol:.17g}",
        f"hold_steps={config.hold_steps}",
        f"oob_radius={config.oob_radius:.17g}",
        f"dt={config.dt:.17g}",
        "tmask=" + ",".join(str(int(v)) for v in config.mask.free_translation),
        "rmask=" + ",".join(str(int(v)) for v in config.mask.free_rotation),
        f"mass={config.body.mass:.17g}",
        "inertia=" + ",".join(f"{v:.17g}" for v in config.body.inertia_diag),
        "com=" + ",".join(f"{v:.17g}" for v in config.body.com_offset),
        f"f_max={config.limits.f_max:.17g}",
        f"tau_max={config.limits.tau_max:.17g}",
        f"force_rate={config.limits.force_rate:.17g}",
        f"torque_rate={config.limits.torque_rate:.17g}",
        f"body_frame_obs={int(config.body_frame_obs)}",
    ]
    return hashlib.sha256("\n".join(parts).encode("ascii")).digest()


def _pack_u32_list(values: list[int]) -> bytes:
    return struct.pack(f"<I{len(values)}I", len(values), *values)


def save_policy(path, net: PolicyNet, config: EnvConfig) -> None:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    buf.write(_pack_u32_list(net.actor.sizes))
    buf.write(_pack_u32_list(net.critic.sizes))
    scales = np.asarray(net.obs_scales, dtype="<f8")
    buf.write(struct.pack("<I", scales.shape[0]))
    buf.write(scales.tobytes())
    buf.write(struct.pack("<dd", LOG_STD_MIN, LOG_STD_MAX))
    buf.write(env_config_hash(config))
    for arr in param_list(net):
        buf.write(np.asarray(arr, dtype="<f8").tobytes())
    with open(path, "wb") as f:
        f.write(buf.getvalue())


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError(
                f"truncated checkpoint: needed {n} bytes at offset {self.pos}, "
                f"file has {len(self.data)}"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def f64_array(self, shape) -> np.ndarray:
        n = int(np.prod(shape)) if shape else 1
        raw = self.take(8 * n)
        return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)


def load_policy(path) -> tuple[PolicyNet, dict]:
    """Read a checkpoint; returns (net, meta) with version/sizes/env_hash in meta."""
    with open(path, "rb") as f:
        data = f.read()
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise CheckpointError("bad magic: not a policy checkpoint")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    n = r.u32()
    if not (2 <= n <= 64):
        raise CheckpointError(f"implausible actor layer count {n}")
    actor_sizes = [r.u32() for _ in range(n)]
    n = r.u32()
    if not (2 <= n <= 64):
        raise CheckpointError(f"implausible critic layer count {n}")
    critic_sizes = [r.u32() for _ in range(n)]
    obs_dim = r.u32()
    if obs_dim != actor_sizes[0] or obs_dim != critic_sizes[0]:
        raise CheckpointError("obs_scales length disagrees with network input size")
    obs_scales = r.f64_array((obs_dim,))
    log_std_min = r.f64()
    log_std_max = r.f64()
    if (log_std_min, log_std_max) != (LOG_STD_MIN, LOG_STD_MAX):
        raise CheckpointError("checkpoint built with different log-std clamp bounds")
    env_hash = r.take(32)

    def read_mlp(sizes: list[int]) -> MlpParams:
        ws, bs = [], []
        for k in range(len(sizes) - 1):
            ws.append(r.f64_array((sizes[k], sizes[k + 1])))
            bs.append(r.f64_array((sizes[k + 1],)))
        return MlpParams(ws, bs)

    # arrays appear in param_list order: actor pairs, log_std, critic pairs
    actor = read_mlp(actor_sizes)
    log_std = r.f64_array((actor_sizes[-1],))
    critic = read_mlp(critic_sizes)
    if critic_sizes[-1] != 1:
        raise CheckpointError("critic output size must be 1")
    if r.pos != len(data):
        raise CheckpointError(f"{len(data) - r.pos} trailing bytes after parameters")
    net = PolicyNet(actor, log_std, critic, obs_scales)
    meta = {
        "version": version,
        "actor_sizes": actor_sizes,
        "critic_sizes": critic_sizes,
        "env_hash": env_hash,
    }
    return net, meta
