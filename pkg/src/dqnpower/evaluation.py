"""Success-rate / transition-step metrics, training curves and the DCPC comparison."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, NamedTuple

import numpy as np

from . import agent
from .agent import GreedyPolicy, TrainConfig, Trajectory, rollout
from .dcpc import DcpcResult, run_dcpc
from .errors import ConfigError
from .radio import PowerControlEnv, PowerPair, RadioScenario


class EpisodeRecord(NamedTuple):
    run: int
    start: PowerPair
    success: bool
    steps: int | None


@dataclass
class EvalMetrics:
    records: list[EpisodeRecord]

    @property
    def runs(self) -> int:
        return len(self.records)

    @property
    def successes(self) -> int:
        return sum(r.success for r in self.records)

    @property
    def success_rate(self) -> float:
        return self.successes / self.runs if self.runs else 0.0

    @property
    def avg_steps(self) -> float | None:
        """Mean frames-to-goal over successful runs; None without any success."""
        steps = [r.steps for r in self.records if r.success]
        return float(np.mean(steps)) if steps else None


def evaluate(policy: Callable[[np.ndarray], int], env: PowerControlEnv, runs: int = 1000,
             max_frames: int = 20, seed: int = 0,
             trajectories: list | None = None) -> EvalMetrics:
    """Play ``runs`` independent episodes from uniformly random starting pairs.

    Episode i draws from its own stream spawned off ``seed``, so results do
    not depend on the order episodes are played in.
    """
    records = []
    for i, seq in enumerate(np.random.SeedSequence(seed).spawn(runs)):
        rng = np.random.default_rng(seq)
        start = env.random_pair(rng)
        traj = rollout(env, policy, start, max_frames, rng)
        records.append(EpisodeRecord(i, start, traj.success, traj.steps))
        if trajectories is not None:
            trajectories.append(traj)
    return EvalMetrics(records)


def evaluate_network(net, normalizer, scenario: RadioScenario, primary_policy: str = "classic",
                     runs: int = 1000, max_frames: int = 20, seed: int = 0) -> EvalMetrics:
    return evaluate(GreedyPolicy(net, normalizer), PowerControlEnv(scenario, primary_policy),
                    runs, max_frames, seed)


class TrainingCurvePoint(NamedTuple):
    iteration: int
    loss: float
    success_rate: float
    avg_steps: float | None


def default_schedule(warmup: int, iterations: int, points: int = 12) -> list[int]:
    """Log-spaced checkpoint iterations covering [warmup, iterations]."""
    grid = np.geomspace(max(warmup, 1), iterations, points)
    return sorted({int(round(k)) for k in grid} | {iterations})


def training_curve(scenario: RadioScenario, config: TrainConfig, schedule: Iterable[int] | None = None,
                   eval_runs: int = 1000, eval_seed: int = 0, loss_window: int = 100):
    """Train once and evaluate the greedy policy at every scheduled iteration.

    The loss reported at a point is the mean over the last ``loss_window``
    optimizer steps. Returns ``(points, train_result)``.
    """
    schedule = sorted(set(schedule)) if schedule is not None else default_schedule(config.warmup, config.iterations)
    if schedule and (schedule[0] < config.warmup or schedule[-1] > config.iterations):
        raise ConfigError("checkpoint iterations must lie in [warmup, iterations]")
    wanted = set(schedule)
    env = PowerControlEnv(scenario, config.policy)
    points: list[TrainingCurvePoint] = []

    def snapshot(k: int, result: agent.TrainResult) -> None:
        if k not in wanted:
            return
        metrics = evaluate(GreedyPolicy(result.net, result.normalizer), env, eval_runs,
                           config.max_frames, eval_seed)
        tail = [v for _, v in result.losses[-loss_window:]]
        points.append(TrainingCurvePoint(k, float(np.mean(tail)), metrics.success_rate, metrics.avg_steps))

    result = agent.train(scenario, config, on_iteration=snapshot)
    return points, result


@dataclass
class Comparison:
    dqn: Trajectory
    dcpc: DcpcResult

    @property
    def dqn_steps(self) -> int | None:
        return self.dqn.steps

    @property
    def dcpc_steps(self) -> int | None:
        return self.dcpc.steps


def compare_trajectories(policy: Callable[[np.ndarray], int], env: PowerControlEnv, start: PowerPair,
                         max_steps: int = 200, seed: int = 0, tol: float = 1e-3) -> Comparison:
    """Run the learned policy and DCPC from the same starting powers."""
    rng = np.random.default_rng(seed)
    dqn = rollout(env, policy, start, max_steps, rng)
    p1, p2 = env.scenario.powers(start)
    return Comparison(dqn, run_dcpc(env.scenario, p1, p2, max_steps, tol))


# -- CSV output ------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write(path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_loss_csv(path, losses) -> None:
    _write(path, ["iteration", "loss"], losses)


def write_metrics_csv(path, metrics: EvalMetrics, scenario: RadioScenario) -> None:
    rows = [(r.run, *scenario.powers(r.start), r.success, r.steps) for r in metrics.records]
    _write(path, ["run", "start_p1", "start_p2", "success", "steps"], rows)


def write_curve_csv(path, points: list[TrainingCurvePoint]) -> None:
    _write(path, ["k", "loss", "success_rate", "avg_steps"], points)


def trajectory_rows(comparison: Comparison, scenario: RadioScenario):
    for step, frame in enumerate(comparison.dqn.frames):
        yield (step, "dqn", *scenario.powers(frame.pair), frame.sinr1, frame.sinr2)
    for step, p1, p2, s1, s2 in comparison.dcpc.trajectory:
        yield (int(step), "dcpc", p1, p2, s1, s2)


def write_trajectories_csv(path, comparison: Comparison, scenario: RadioScenario) -> None:
    _write(path, ["step", "method", "p1", "p2", "sinr1", "sinr2"], trajectory_rows(comparison, scenario))


def write_dcpc_csv(path, result: DcpcResult) -> None:
    rows = [(int(r[0]), *r[1:]) for r in result.trajectory]
    _write(path, ["step", "p1", "p2", "sinr1", "sinr2"], rows)
