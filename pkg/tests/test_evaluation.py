import csv

import numpy as np
import pytest

from dqnpower import qnet
from dqnpower.agent import GreedyPolicy, TrainConfig
from dqnpower.errors import ConfigError
from dqnpower.evaluation import (
    EpisodeRecord, EvalMetrics, compare_trajectories, default_schedule, evaluate, training_curve,
    write_curve_csv, write_dcpc_csv, write_loss_csv, write_metrics_csv, write_trajectories_csv,
)
from dqnpower.dcpc import run_dcpc
from dqnpower.oracle import OraclePolicy, tabular_oracle
from dqnpower.radio import PowerControlEnv, PowerPair


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


@pytest.fixture(scope="module")
def oracle_policy(noiseless):
    return OraclePolicy(noiseless, tabular_oracle(noiseless, "classic"))


def test_oracle_policy_is_perfect(noiseless, oracle_policy):
    env = PowerControlEnv(noiseless, "classic")
    trajs = []
    m = evaluate(oracle_policy, env, runs=300, seed=3, trajectories=trajs)
    assert m.success_rate == 1.0
    assert m.avg_steps <= 2
    for traj in trajs:
        assert traj.frames[-1].pair in noiseless.goal_pairs
        assert not any(f.goal for f in traj.frames[:-1])


def test_never_succeeding_policy(paper):
    env = PowerControlEnv(paper, "classic")
    m = evaluate(lambda s: 0, env, runs=200, seed=1)
    # always lowest secondary power: only a start already at a goal can count
    starts_at_goal = sum(r.start in paper.goal_pairs for r in m.records)
    assert m.successes == starts_at_goal
    assert all(r.steps == 0 for r in m.records if r.success)


def test_empty_metrics():
    m = EvalMetrics([EpisodeRecord(0, PowerPair(0, 0), False, None)])
    assert m.success_rate == 0.0 and m.avg_steps is None


def test_reproducible_and_order_free(noiseless, oracle_policy):
    env = PowerControlEnv(noiseless, "classic")
    a = evaluate(oracle_policy, env, runs=100, seed=9)
    b = evaluate(oracle_policy, env, runs=100, seed=9)
    assert a.records == b.records
    # the first 50 episodes of a longer evaluation do not depend on how many follow
    c = evaluate(oracle_policy, env, runs=50, seed=9)
    assert [r.start for r in c.records] == [r.start for r in a.records[:50]]


def test_starts_cover_grid(paper):
    env = PowerControlEnv(paper, "classic")
    m = evaluate(lambda s: 0, env, runs=2000, seed=0)
    counts = np.zeros((8, 8))
    for r in m.records:
        counts[r.start] += 1
    assert counts.min() > 0


def test_default_schedule():
    sched = default_schedule(300, 100_000, 12)
    assert sched[0] == 300 and sched[-1] == 100_000
    assert sched == sorted(set(sched))
    ratios = np.diff(np.log(sched))
    assert np.allclose(ratios, ratios.mean(), rtol=0.05)


def test_training_curve(paper):
    cfg = TrainConfig(iterations=360, minibatch_size=32, seed=1)
    points, result = training_curve(paper, cfg, [300, 330, 360], eval_runs=20)
    assert [p.iteration for p in points] == [300, 330, 360]
    assert all(0 <= p.success_rate <= 1 and np.isfinite(p.loss) for p in points)
    assert len(result.losses) == 61


def test_training_curve_rejects_schedule(paper):
    with pytest.raises(ConfigError):
        training_curve(paper, TrainConfig(iterations=400), [100, 400])


def test_compare_shares_start(noiseless, oracle_policy):
    env = PowerControlEnv(noiseless, "classic")
    cmp = compare_trajectories(oracle_policy, env, PowerPair(0, 0), max_steps=200)
    assert cmp.dqn.start == PowerPair(0, 0)
    assert tuple(cmp.dcpc.trajectory[0, 1:3]) == (0.05, 0.05)
    assert cmp.dqn_steps == 2
    assert cmp.dcpc_steps is not None and cmp.dcpc_steps > cmp.dqn_steps


def test_csv_files(tmp_path, paper, noiseless, oracle_policy):
    write_loss_csv(tmp_path / "loss.csv", [(300, 0.5), (301, 0.25)])
    assert read_csv(tmp_path / "loss.csv") == [["iteration", "loss"], ["300", "0.5"], ["301", "0.25"]]

    env = PowerControlEnv(noiseless, "classic")
    m = evaluate(oracle_policy, env, runs=5, seed=0)
    write_metrics_csv(tmp_path / "metrics.csv", m, noiseless)
    rows = read_csv(tmp_path / "metrics.csv")
    assert rows[0] == ["run", "start_p1", "start_p2", "success", "steps"] and len(rows) == 6

    write_curve_csv(tmp_path / "curve.csv", [(300, 1.0, 0.5, None)])
    assert read_csv(tmp_path / "curve.csv") == [["k", "loss", "success_rate", "avg_steps"], ["300", "1.0", "0.5", ""]]

    write_dcpc_csv(tmp_path / "dcpc.csv", run_dcpc(paper, 0.05, 0.05))
    rows = read_csv(tmp_path / "dcpc.csv")
    assert rows[0] == ["step", "p1", "p2", "sinr1", "sinr2"] and rows[1][0] == "0"

    cmp = compare_trajectories(oracle_policy, env, PowerPair(0, 0))
    write_trajectories_csv(tmp_path / "t.csv", cmp, noiseless)
    rows = read_csv(tmp_path / "t.csv")
    assert rows[0] == ["step", "method", "p1", "p2", "sinr1", "sinr2"]
    assert {r[1] for r in rows[1:]} == {"dqn", "dcpc"}


def test_greedy_policy_callable(paper, rng):
    net = qnet.init_network(10, 8, rng)
    norm = qnet.fit_normalizer(rng.normal(size=(50, 10)))
    a = GreedyPolicy(net, norm)(np.zeros(10))
    assert 0 <= a < 8
