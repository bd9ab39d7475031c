from collections import deque

import numpy as np
import pytest

from dqnpower.oracle import OraclePolicy, tabular_oracle
from dqnpower.radio import PowerControlEnv


def bfs_steps(env: PowerControlEnv):
    """Shortest number of frames to a goal pair, by breadth-first search backwards."""
    pairs = env.scenario.all_pairs()
    preds = {p: [] for p in pairs}
    for p in pairs:
        for a in range(env.n_actions):
            preds[env.transition(p, a)].append(p)
    dist = {p: 0 for p in pairs if env.goal[p]}
    queue = deque(dist)
    while queue:
        cur = queue.popleft()
        for prev in preds[cur]:
            if prev not in dist:
                dist[prev] = dist[cur] + 1
                queue.append(prev)
    out = np.full(env.goal.shape, np.inf)
    for p, d in dist.items():
        out[p] = d
    return out


# frozen from the oracle run on the reference scenario (rows: primary level, cols: secondary level)
CLASSIC_STEPS = np.array([
    [2, 2, 1, 2, 2, 1, 1, 1],
    [2, 2, 1, 2, 2, 1, 1, 1],
    [2, 2, 1, 2, 2, 1, 1, 1],
    [2, 2, 0, 2, 2, 1, 1, 1],
    [2, 2, 1, 2, 2, 1, 1, 1],
    [2, 2, 1, 2, 2, 1, 1, 1],
    [2, 2, 1, 2, 2, 1, 1, 1],
    [2, 2, 1, 2, 2, 0, 1, 1],
])


@pytest.mark.parametrize("policy", ["classic", "stepwise"])
@pytest.mark.parametrize("gamma", [0.1, 0.5, 0.9])
def test_matches_bfs(paper, policy, gamma):
    result = tabular_oracle(paper, policy, gamma)
    np.testing.assert_array_equal(result.steps, bfs_steps(PowerControlEnv(paper, policy)))


def test_converges(paper):
    result = tabular_oracle(paper, "classic", 0.5)
    assert result.sweeps < 100
    v = result.q.max(axis=2)
    env = PowerControlEnv(paper, "classic")
    # Bellman residual at the fixed point
    for pair in paper.all_pairs():
        for a in range(8):
            nxt = env.transition(pair, a)
            expected = 10.0 * env.goal[nxt] + 0.5 * v[nxt]
            assert result.q[pair][a] == pytest.approx(expected, abs=1e-9)


def test_classic_steps_frozen(paper):
    result = tabular_oracle(paper, "classic", 0.5)
    np.testing.assert_array_equal(result.steps, CLASSIC_STEPS)
    assert result.steps.max() <= 2


def test_stepwise_reaches_everything(paper):
    result = tabular_oracle(paper, "stepwise", 0.5)
    assert np.isfinite(result.steps).all()
    assert result.steps.max() == 4


@pytest.mark.parametrize("policy", ["classic", "stepwise"])
def test_goal_actions_stay_in_goal(paper, policy):
    result = tabular_oracle(paper, policy, 0.5)
    env = PowerControlEnv(paper, policy)
    for pair in paper.goal_pairs:
        assert env.transition(pair, result.action(pair)) in paper.goal_pairs


def test_oracle_policy_decodes_noiseless_state(noiseless, rng):
    result = tabular_oracle(noiseless, "classic", 0.5)
    policy = OraclePolicy(noiseless, result)
    env = PowerControlEnv(noiseless, "classic")
    for pair in noiseless.all_pairs():
        state = env.reset(rng, pair)
        assert policy(state) == result.action(pair)


def test_rejects_bad_gamma(paper):
    with pytest.raises(ValueError):
        tabular_oracle(paper, "classic", 1.0)
