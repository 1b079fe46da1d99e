"""Command-line surface: train, eval, compare, replay.

Every command loads the same sectioned config (defaults when --config is
omitted), applies CLI overrides, and writes a resolved-config snapshot
next to its outputs so a run can be reproduced exactly from its artifact
directory. Exit codes: 0 success, 1 usage or configuration error, 2
runtime numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import os
import shlex
import sys

import numpy as np

from . import math3d as m3
from .actuation import Wrench
from .config import load_config, mission_config, set_value, write_snapshot
from .dynamics import RigidState, SimulationDivergedError
from .learn.checkpoint import env_config_hash, load_policy
from .learn.ppo import UpdateDivergedError
from .learn.train import evaluate_policy, train
from .mission import (
    ControlMode,
    ManeuverMetrics,
    TrajectoryLog,
    parse_faults_file,
    parse_maneuver_spec,
    parse_sequence_file,
    run_compare,
    run_sequence,
)

SUMMARY_FIELDS = [
    "episodes",
    "success_rate",
    "mean_final_pos_err",
    "mean_final_ori_err",
    "mean_settle_time",
    "mean_return",
    "mean_steps",
]

EPISODE_FIELDS = [
    "episode",
    "success",
    "reason",
    "steps",
    "episode_return",
    "final_pos_err",
    "final_ori_err",
    "final_lin_vel",
    "final_ang_vel",
    "settle_time",
]

OUTCOME_FIELDS = [
    "item",
    "kind",
    "outcome",
    "ticks",
    "settle_time",
    "final_pos_err",
    "final_ori_err",
    "end_mode",
    "note",
]


class CliError(Exception):
    """Usage or configuration problem (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"{self.prog}: {message}")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _resolve_workers(flag: int | None) -> int:
    if flag is not None:
        workers = flag
    else:
        text = os.environ.get("APIARY_WORKERS", "").strip()
        if text:
            try:
                workers = int(text)
            except ValueError:
                raise CliError(f"APIARY_WORKERS must be an integer, got {text!r}")
        else:
            workers = 1
    if workers < 1:
        raise CliError("worker count must be >= 1")
    return workers


def _snapshot(out_dir, cfg, argv: list[str]) -> None:
    cmd = "apiary " + " ".join(shlex.quote(t) for t in argv)
    write_snapshot(
        os.path.join(out_dir, "config.ini"),
        cfg,
        ["resolved configuration snapshot", f"command: {cmd}"],
    )


def cmd_train(args, argv: list[str]) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = set_value(cfg, "seed", "seed", args.seed)
    os.makedirs(args.out, exist_ok=True)
    _snapshot(args.out, cfg, argv)
    log_fn = print if cfg.verbose else None
    result = train(
        cfg.env, cfg.reward, cfg.ppo, seed=cfg.seed, out_dir=args.out, log_fn=log_fn
    )
    print(
        f"trained {result.env_steps} env steps in {result.iterations} iterations; "
        f"best eval success rate {result.best_success_rate:.3f}"
    )
    print(f"wrote {os.path.join(args.out, 'best.ckpt')}, final.ckpt, curve.csv")
    return 0


def _write_eval_outputs(out_dir, result) -> None:
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(SUMMARY_FIELDS)
        w.writerow([_fmt(result.summary[k]) for k in SUMMARY_FIELDS])
    with open(os.path.join(out_dir, "episodes.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(EPISODE_FIELDS)
        for i, rec in enumerate(result.episodes):
            w.writerow(
                [
                    i,
                    int(rec["success"]),
                    rec["reason"],
                    rec["steps"],
                    _fmt(rec["episode_return"]),
                    _fmt(rec["final_pos_err"]),
                    _fmt(rec["final_ori_err"]),
                    _fmt(rec["final_lin_vel"]),
                    _fmt(rec["final_ang_vel"]),
                    _fmt(rec["settle_time"]),
                ]
            )


def _eval_rows_to_log(rows: np.ndarray, episode: int) -> TrajectoryLog:
    log = TrajectoryLog()
    for r in rows:
        log.append(
            r[0],
            RigidState(r[1:4], r[4:8], r[8:11], r[11:14]),
            Wrench(r[14:17], r[17:20]),
            Wrench(r[20:23], r[23:26]),
            r[26:29],
            r[29:32],
            ControlMode.RL_POLICY,
            episode,
        )
    return log


def cmd_eval(args, argv: list[str]) -> int:
    cfg = load_config(args.config)
    cfg = set_value(cfg, "env", "scenario", args.scenario)
    net, meta = load_policy(args.ckpt)
    if meta["env_hash"] != env_config_hash(cfg.env):
        print(
            "warning: checkpoint was trained under a different environment "
            "configuration; evaluating anyway",
            file=sys.stderr,
        )
    workers = _resolve_workers(args.workers)
    seed = args.seed if args.seed is not None else cfg.seed
    collect = args.logs is not None
    result = evaluate_policy(
        net, cfg.env, cfg.reward, args.episodes, seed, workers, collect_logs=collect
    )
    print(",".join(SUMMARY_FIELDS))
    print(",".join(_fmt(result.summary[k]) for k in SUMMARY_FIELDS))
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        _snapshot(args.out, cfg, argv)
        _write_eval_outputs(args.out, result)
    if collect:
        os.makedirs(args.logs, exist_ok=True)
        for i, rows in enumerate(result.logs):
            _eval_rows_to_log(rows, i).write_csv(
                os.path.join(args.logs, f"episode_{i:04d}.csv")
            )
    return 0


def _write_metrics_csv(path, report) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["metric", "rl", "baseline", "diff"])
        for name in ManeuverMetrics.SCALARS:
            w.writerow(
                [
                    name,
                    _fmt(getattr(report.rl, name)),
                    _fmt(getattr(report.baseline, name)),
                    _fmt(report.diff[name]),
                ]
            )
        for axis, label in enumerate(("x", "y", "z")):
            rl_v = float(report.rl.final_pos_err_axes[axis])
            b_v = float(report.baseline.final_pos_err_axes[axis])
            w.writerow([f"final_pos_err_{label}", _fmt(rl_v), _fmt(b_v), _fmt(rl_v - b_v)])


def _write_error_vs_time(path, log_rl: TrajectoryLog, log_pd: TrajectoryLog) -> None:
    t = log_rl.column("t")
    rl_pe = m3.vec_norm(log_rl.columns(["epx", "epy", "epz"]))
    rl_oe = m3.vec_norm(log_rl.columns(["erx", "ery", "erz"]))
    pd_pe = m3.vec_norm(log_pd.columns(["epx", "epy", "epz"]))
    pd_oe = m3.vec_norm(log_pd.columns(["erx", "ery", "erz"]))
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "rl_pos_err", "rl_ori_err", "baseline_pos_err", "baseline_ori_err"])
        for k in range(len(t)):
            w.writerow(
                [_fmt(float(t[k])), _fmt(float(rl_pe[k])), _fmt(float(rl_oe[k])),
                 _fmt(float(pd_pe[k])), _fmt(float(pd_oe[k]))]
            )


def cmd_compare(args, argv: list[str]) -> int:
    cfg = load_config(args.config)
    net, _meta = load_policy(args.ckpt)
    maneuver = parse_maneuver_spec(args.maneuver)
    mc = mission_config(cfg)
    log_rl, log_pd, report = run_compare(maneuver, mc, net)
    os.makedirs(args.out, exist_ok=True)
    _snapshot(args.out, cfg, argv)
    log_rl.write_csv(os.path.join(args.out, "rl_trajectory.csv"))
    log_pd.write_csv(os.path.join(args.out, "baseline_trajectory.csv"))
    _write_metrics_csv(os.path.join(args.out, "metrics.csv"), report)
    _write_error_vs_time(os.path.join(args.out, "error_vs_time.csv"), log_rl, log_pd)
    if report.baseline.final_pos_err < report.rl.final_pos_err:
        print("note: baseline ends the maneuver with less position error than the policy")
    else:
        print("note: policy ends the maneuver with less position error than baseline")
    print(
        "cross-axis excursion: "
        f"rl={report.rl.max_cross_axis_excursion:.6f} m, "
        f"baseline={report.baseline.max_cross_axis_excursion:.6f} m"
    )
    print(f"wrote metrics and trajectories to {args.out}")
    return 0


def cmd_replay(args, argv: list[str]) -> int:
    cfg = load_config(args.config)
    net, _meta = load_policy(args.ckpt)
    sequence = parse_sequence_file(args.sequence)
    faults = parse_faults_file(args.faults) if args.faults else None
    mc = mission_config(cfg)
    result = run_sequence(sequence, ControlMode.RL_POLICY, mc, net=net, faults=faults)
    os.makedirs(args.out, exist_ok=True)
    _snapshot(args.out, cfg, argv)
    with open(os.path.join(args.out, "outcomes.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(OUTCOME_FIELDS)
        for out in result.outcomes:
            w.writerow(
                [
                    out.index + 1,
                    out.kind,
                    out.outcome,
                    out.ticks,
                    _fmt(out.settle_time),
                    _fmt(out.final_pos_err),
                    _fmt(out.final_ori_err),
                    out.end_mode,
                    out.note,
                ]
            )
    result.log.write_csv(os.path.join(args.out, "trajectory.csv"))
    n_ok = sum(1 for o in result.outcomes if o.outcome == "success")
    for out in result.outcomes:
        suffix = f" ({out.note})" if out.note else ""
        print(f"item {out.index + 1}: {out.kind:14s} {out.outcome}{suffix}")
    print(f"{n_ok}/{len(result.outcomes)} maneuvers succeeded")
    print(f"wrote outcomes and combined trajectory to {args.out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="apiary", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("train", help="train a policy and write checkpoints")
    p.add_argument("--config", default=None, help="config file (defaults when omitted)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override [seed] seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on seeded episodes")
    p.add_argument("--config", default=None)
    p.add_argument("--ckpt", required=True, help="policy checkpoint path")
    p.add_argument("--scenario", required=True, choices=("iss6dof", "granite3dof"))
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--logs", default=None, help="directory for per-episode trajectories")
    p.add_argument("--out", default=None, help="directory for summary/episodes CSVs")
    p.add_argument("--workers", type=int, default=None, help="process cap (or APIARY_WORKERS)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="run one maneuver under policy and PD baseline")
    p.add_argument("--config", default=None)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--maneuver", required=True, help="e.g. translate:x:0.5 or rotate:z:-20")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("replay", help="replay a maneuver sequence with safety fallback")
    p.add_argument("--config", default=None)
    p.add_argument("--sequence", required=True, help="sequence file")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--faults", default=None, help="fault-injection file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise CliError("apiary: a command is required (train, eval, compare, replay)")
        return args.func(args, argv)
    except CliError as e:
        print(str(e), file=sys.stderr)
        return 1
    except (SimulationDivergedError, UpdateDivergedError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError, configparser.Error) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
