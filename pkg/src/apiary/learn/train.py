"""Training loop and deterministic policy evaluation.

Training alternates fixed-length batched rollouts with clipped-surrogate
updates until the env-step budget is spent, evaluating the deterministic
policy on a fixed seed bank every eval_every iterations. The best-scoring
parameters are kept alongside the final ones, and a learning-curve row is
recorded at every eval point. If an update or rollout ever goes
non-finite the loop stops, writes the last finite parameters to disk and
re-raises, so a crashed run still leaves a usable checkpoint.

Evaluation runs episodes in fixed-size chunks of EVAL_CHUNK regardless of
worker count; `workers` only spreads whole chunks across processes, so
summaries are byte-identical for any worker count. Episode k is seeded
(seed, k): results do not depend on how many episodes run alongside it.
"""

from __future__ import annotations

import copy
import csv
import multiprocessing
import os
from dataclasses import dataclass, field

import numpy as np

from .. import math3d as m3
from ..env import (
    ANG_VEL,
    LIN_VEL,
    ORI_ERR,
    POS_ERR,
    BatchEnv,
    EnvConfig,
    RewardWeights,
    batch_rollout,
)
from . import nets
from .checkpoint import save_policy
from .nets import PolicyNet, RolloutPolicy
from .ppo import PpoConfig, ppo_update

EVAL_CHUNK = 32

CURVE_FIELDS = [
    "env_steps",
    "mean_return",
    "success_rate",
    "policy_loss",
    "value_loss",
    "entropy",
    "approx_kl",
    "clip_fraction",
]


@dataclass
class EvalResult:
    episodes: list[dict]
    summary: dict
    logs: list[np.ndarray] | None = None


@dataclass
class TrainResult:
    net: PolicyNet
    best_net: PolicyNet
    best_success_rate: float
    curve: list[dict] = field(default_factory=list)
    env_steps: int = 0
    iterations: int = 0


def _eval_chunk(
    net: PolicyNet,
    config: EnvConfig,
    weights: RewardWeights,
    seeds: list,
    collect_logs: bool,
) -> tuple[list[dict], list[np.ndarray] | None]:
    """Run one chunk of episodes to completion with the deterministic policy."""
    n = len(seeds)
    benv = BatchEnv(n, config, weights, auto_reset=False, episode_seeds=seeds)
    records: list[dict | None] = [None] * n
    rows: list[list[np.ndarray]] = [[] for _ in range(n)] if collect_logs else []
    scale = np.concatenate(
        [np.full(3, config.limits.f_max), np.full(3, config.limits.tau_max)]
    )
    for t in range(config.episode_len):
        if benv.all_frozen():
            break
        obs = benv.obs.copy()
        actions = nets.policy_mean(net, obs)
        if collect_logs:
            pre = actions * scale
            post = np.clip(actions, -1.0, 1.0) * scale
            live = ~benv.frozen
            for i in np.flatnonzero(live):
                i = int(i)
                rows[i].append(
                    np.concatenate(
                        [
                            [t * config.dt],
                            benv.pos[i],
                            benv.att[i],
                            benv.linvel[i],
                            benv.angvel[i],
                            pre[i],
                            post[i],
                            obs[i, POS_ERR],
                            obs[i, ORI_ERR],
                        ]
                    )
                )
        _, _, _, finished = benv.step(actions)
        for rec in finished:
            i = rec["env"]
            final = rec["final_obs"]
            success = rec["success"]
            settle = (
                (rec["steps"] - config.hold_steps + 1) * config.dt if success else float("nan")
            )
            records[i] = {
                "success": success,
                "reason": rec["reason"],
                "steps": rec["steps"],
                "episode_return": rec["episode_return"],
                "final_pos_err": float(m3.vec_norm(final[POS_ERR])),
                "final_ori_err": float(m3.vec_norm(final[ORI_ERR])),
                "final_lin_vel": float(m3.vec_norm(final[LIN_VEL])),
                "final_ang_vel": float(m3.vec_norm(final[ANG_VEL])),
                "settle_time": settle,
            }
    logs = [np.array(r) for r in rows] if collect_logs else None
    return [r for r in records if r is not None], logs


def _eval_chunk_star(payload):
    return _eval_chunk(*payload)


def evaluate_policy(
    net: PolicyNet,
    config: EnvConfig,
    weights: RewardWeights,
    episodes: int,
    seed: int,
    workers: int = 1,
    collect_logs: bool = False,
) -> EvalResult:
    """Deterministic evaluation over `episodes` seeded episodes.

    Episode k uses RNG stream (seed, k). Work is split into EVAL_CHUNK-size
    chunks whose composition never depends on `workers`, and chunk results
    are merged back in order, so the output is identical for any worker
    count.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    seeds = [[seed, k] for k in range(episodes)]
    chunks = [seeds[i : i + EVAL_CHUNK] for i in range(0, episodes, EVAL_CHUNK)]
    payloads = [(net, config, weights, chunk, collect_logs) for chunk in chunks]
    if workers > 1 and len(chunks) > 1:
        with multiprocessing.get_context("fork").Pool(min(workers, len(chunks))) as pool:
            results = pool.map(_eval_chunk_star, payloads)
    else:
        results = [_eval_chunk_star(p) for p in payloads]

    records: list[dict] = []
    logs: list[np.ndarray] = []
    for recs, chunk_logs in results:
        records.extend(recs)
        if collect_logs and chunk_logs is not None:
            logs.extend(chunk_logs)
    succ = np.array([r["success"] for r in records], dtype=np.float64)
    settle = np.array([r["settle_time"] for r in records])
    settled = settle[np.isfinite(settle)]
    summary = {
        "episodes": len(records),
        "success_rate": float(succ.mean()),
        "mean_final_pos_err": float(np.mean([r["final_pos_err"] for r in records])),
        "mean_final_ori_err": float(np.mean([r["final_ori_err"] for r in records])),
        "mean_settle_time": float(settled.mean()) if settled.size else float("nan"),
        "mean_return": float(np.mean([r["episode_return"] for r in records])),
        "mean_steps": float(np.mean([r["steps"] for r in records])),
    }
    return EvalResult(records, summary, logs if collect_logs else None)


def write_curve_csv(path, curve: list[dict]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CURVE_FIELDS)
        writer.writeheader()
        for row in curve:
            writer.writerow({k: repr(row[k]) for k in CURVE_FIELDS})


def train(
    config: EnvConfig,
    weights: RewardWeights,
    ppo_cfg: PpoConfig,
    seed: int = 0,
    out_dir=None,
    log_fn=None,
) -> TrainResult:
    """Train a policy from scratch; deterministic for a given seed.

    Writes best.ckpt, final.ckpt and curve.csv into out_dir when given.
    On a non-finite rollout or update, saves the last finite parameters
    (and the curve so far) before re-raising.
    """
    init_rng = np.random.default_rng([seed, 1])
    shuffle_rng = np.random.default_rng([seed, 2])
    net = nets.policy_init(
        init_rng, hidden=ppo_cfg.hidden, log_std_init=ppo_cfg.log_std_init
    )
    adam_state = nets.adam_init(nets.param_list(net))
    benv = BatchEnv(ppo_cfg.n_envs, config, weights, seed=seed)
    policy = RolloutPolicy(net)

    steps_per_iter = ppo_cfg.n_envs * ppo_cfg.horizon
    if ppo_cfg.total_env_steps < steps_per_iter:
        raise ValueError(
            f"insufficient steps: total_env_steps={ppo_cfg.total_env_steps} is below "
            f"one rollout batch of n_envs*horizon={steps_per_iter}"
        )
    # the step budget is a cap: run as many full rollout batches as fit
    iterations = ppo_cfg.total_env_steps // steps_per_iter
    result = TrainResult(net=net, best_net=copy.deepcopy(net), best_success_rate=-1.0)
    returns_since_eval: list[float] = []
    stats_since_eval: list[dict] = []
    last_good = copy.deepcopy(net)

    def _emit_eval(env_steps: int) -> None:
        ev = evaluate_policy(
            net, config, weights, ppo_cfg.eval_episodes, ppo_cfg.eval_seed
        )
        sr = ev.summary["success_rate"]
        mean_ret = (
            float(np.mean(returns_since_eval)) if returns_since_eval else float("nan")
        )
        avg = {
            k: float(np.mean([s[k] for s in stats_since_eval]))
            for k in ("policy_loss", "value_loss", "entropy", "approx_kl", "clip_fraction")
        } if stats_since_eval else dict.fromkeys(
            ("policy_loss", "value_loss", "entropy", "approx_kl", "clip_fraction"),
            float("nan"),
        )
        row = {"env_steps": env_steps, "mean_return": mean_ret, "success_rate": sr, **avg}
        result.curve.append(row)
        returns_since_eval.clear()
        stats_since_eval.clear()
        if sr >= result.best_success_rate:
            result.best_success_rate = sr
            result.best_net = copy.deepcopy(net)
        if log_fn is not None:
            log_fn(
                f"steps={env_steps} return={mean_ret:.2f} success={sr:.3f} "
                f"value_loss={avg['value_loss']:.4f}"
            )

    try:
        for it in range(iterations):
            buf = batch_rollout(
                policy,
                ppo_cfg.n_envs,
                ppo_cfg.horizon,
                config,
                weights,
                batch_env=benv,
            )
            stats = ppo_update(net, buf, ppo_cfg, adam_state, shuffle_rng)
            last_good = copy.deepcopy(net)
            result.env_steps += steps_per_iter
            result.iterations += 1
            returns_since_eval.extend(buf.episode_returns)
            stats_since_eval.append(stats)
            if (it + 1) % ppo_cfg.eval_every == 0 or it == iterations - 1:
                _emit_eval(result.env_steps)
    except (RuntimeError, FloatingPointError):
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            save_policy(os.path.join(out_dir, "final.ckpt"), last_good, config)
            best = result.best_net if result.best_success_rate >= 0.0 else last_good
            save_policy(os.path.join(out_dir, "best.ckpt"), best, config)
            write_curve_csv(os.path.join(out_dir, "curve.csv"), result.curve)
        raise

    if result.best_success_rate < 0.0:
        result.best_net = copy.deepcopy(net)
        result.best_success_rate = 0.0
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        save_policy(os.path.join(out_dir, "final.ckpt"), net, config)
        save_policy(os.path.join(out_dir, "best.ckpt"), result.best_net, config)
        write_curve_csv(os.path.join(out_dir, "curve.csv"), result.curve)
    return result
