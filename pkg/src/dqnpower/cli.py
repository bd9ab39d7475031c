"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 infeasible scenario, 4 checkpoint error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import agent, evaluation, qnet
from .config import PRESETS, ExperimentConfig, apply_overrides, load_config
from .dcpc import run_dcpc
from .errors import CheckpointError, ConfigError, InfeasibleScenarioError
from .radio import PRIMARY_POLICIES, PowerControlEnv, PowerPair, discretize_index, save_scenario

log = logging.getLogger("dqnpower")

EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_CHECKPOINT = 2, 3, 4


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected two comma-separated powers, e.g. 0.05,0.05")
    return a, b


def _resolve(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return apply_overrides(cfg, preset=args.preset, seed=args.seed, out=args.out,
                           sigma_div=args.sigma_div, sensors=args.sensors, policy=args.policy,
                           iterations=args.iterations)


def _prepare_out(cfg: ExperimentConfig) -> Path:
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_model(args, cfg: ExperimentConfig):
    net, normalizer = qnet.load_checkpoint(args.checkpoint)
    if normalizer is None:
        raise CheckpointError("checkpoint carries no input normalizer")
    if args.scenario:
        cfg = replace(cfg, scenario_file=args.scenario)
    else:
        sibling = Path(args.checkpoint).with_name("scenario.json")
        if sibling.is_file() and args.config is None:
            cfg = replace(cfg, scenario_file=str(sibling))
    scenario = cfg.build_scenario()
    if net.input_dim != scenario.sensor_count or net.output_dim != scenario.n_secondary:
        raise CheckpointError(
            f"checkpoint shape {net.layer_dims} does not fit a scenario with "
            f"{scenario.sensor_count} sensors and {scenario.n_secondary} power levels")
    return net, normalizer, scenario


def cmd_train(args) -> int:
    cfg = _resolve(args)
    scenario = cfg.build_scenario()
    tc = cfg.train_config()
    out = _prepare_out(cfg)
    result = agent.train(scenario, tc)
    qnet.save_checkpoint(out / "checkpoint.qnet", result.net, result.normalizer)
    evaluation.write_loss_csv(out / "loss.csv", result.losses)
    save_scenario(scenario, out / "scenario.json")
    (out / "config.json").write_text(json.dumps(cfg.to_dict() | {"train": tc.to_dict()}, indent=2) + "\n")
    print(f"trained {tc.iterations} iterations (policy={tc.policy}, seed={tc.seed})")
    print(f"optimizer steps: {len(result.losses)}  final loss: {result.final_loss()!r}")
    print(f"goal hits during training: {result.goals_reached}")
    print(f"wrote {out / 'checkpoint.qnet'}")
    return 0


def cmd_eval(args) -> int:
    cfg = _resolve(args)
    net, normalizer, scenario = _load_model(args, cfg)
    env = PowerControlEnv(scenario, cfg.policy)
    metrics = evaluation.evaluate(agent.GreedyPolicy(net, normalizer), env, cfg.eval.runs,
                                  cfg.eval.max_frames, cfg.seed)
    out = _prepare_out(cfg)
    evaluation.write_metrics_csv(out / "metrics.csv", metrics, scenario)
    print(f"runs: {metrics.runs}")
    print(f"success_rate: {metrics.success_rate!r}")
    print(f"avg_steps: {metrics.avg_steps!r}")
    return 0


def cmd_dcpc(args) -> int:
    cfg = _resolve(args)
    scenario = cfg.build_scenario()
    result = run_dcpc(scenario, *args.start, max_steps=args.max_steps)
    out = _prepare_out(cfg)
    evaluation.write_dcpc_csv(out / "dcpc.csv", result)
    s1, s2 = result.final_sinrs
    status = f"converged in {result.steps} steps" if result.converged else f"not converged after {args.max_steps} steps"
    print(status)
    print(f"sinr1: {s1!r}")
    print(f"sinr2: {s2!r}")
    return 0


def cmd_goal_pairs(args) -> int:
    cfg = _resolve(args)
    scenario = cfg.build_scenario()
    for pair in sorted(scenario.goal_pairs):
        p1, p2 = scenario.powers(pair)
        print(f"({p1!r}, {p2!r})")
    return 0


def cmd_curve(args) -> int:
    cfg = _resolve(args)
    scenario = cfg.build_scenario()
    tc = cfg.train_config()
    schedule = evaluation.default_schedule(tc.warmup, tc.iterations, args.points)
    points, result = evaluation.training_curve(scenario, tc, schedule, cfg.eval.runs, cfg.seed)
    out = _prepare_out(cfg)
    evaluation.write_curve_csv(out / "curve.csv", points)
    evaluation.write_loss_csv(out / "loss.csv", result.losses)
    for p in points:
        print(f"k={p.iteration} loss={p.loss:.6g} success_rate={p.success_rate:.3f} avg_steps={p.avg_steps}")
    return 0


def cmd_compare(args) -> int:
    cfg = _resolve(args)
    net, normalizer, scenario = _load_model(args, cfg)
    env = PowerControlEnv(scenario, cfg.policy)
    start = PowerPair(discretize_index(scenario.primary_levels, args.start[0]),
                      discretize_index(scenario.secondary_levels, args.start[1]))
    cmp = evaluation.compare_trajectories(agent.GreedyPolicy(net, normalizer), env, start,
                                          args.max_steps, cfg.seed)
    out = _prepare_out(cfg)
    evaluation.write_trajectories_csv(out / "trajectories.csv", cmp, scenario)
    print(f"dqn steps-to-goal: {cmp.dqn_steps}")
    print(f"dcpc steps-to-tolerance: {cmp.dcpc_steps}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment config")
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--seed", type=_u64)
    common.add_argument("--out", metavar="DIR", help="output directory (default: $DQNPOWER_OUT or runs/default)")
    common.add_argument("--sigma-div", type=float, metavar="C",
                        help="sensor noise std = (weakest received power) / C; 3 or 10, inf for noiseless")
    common.add_argument("--sensors", type=_positive_int, metavar="N")
    common.add_argument("--policy", choices=PRIMARY_POLICIES, help="primary user's power control")
    common.add_argument("--iterations", type=_positive_int, metavar="K")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="dqnpower", description="Learned secondary-user power control: training, evaluation and the DCPC baseline.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("train", parents=[common], help="train a Q-network").set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="success rate / transition steps of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--scenario", metavar="PATH", help="scenario JSON (default: next to the checkpoint)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("dcpc", parents=[common], help="run the DCPC baseline")
    p.add_argument("--start", type=_pair, default=(0.05, 0.05), metavar="P1,P2")
    p.add_argument("--max-steps", type=_positive_int, default=200)
    p.set_defaults(func=cmd_dcpc)

    sub.add_parser("goal-pairs", parents=[common], help="list power pairs meeting both SINR targets"
                   ).set_defaults(func=cmd_goal_pairs)

    p = sub.add_parser("curve", parents=[common], help="training curve at log-spaced checkpoints")
    p.add_argument("--points", type=_positive_int, default=12)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("compare", parents=[common], help="DQN vs DCPC SINR trajectories")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--scenario", metavar="PATH")
    p.add_argument("--start", type=_pair, default=(0.05, 0.05), metavar="P1,P2")
    p.add_argument("--max-steps", type=_positive_int, default=200)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleScenarioError as exc:
        print(f"infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT


if __name__ == "__main__":
    sys.exit(main())
