"""Exact value iteration on the noiseless finite MDP over power pairs.

With noiseless sensors the observation identifies the power pair, so the
problem collapses to L1*L2 states with deterministic transitions. This is
the reference the learned policy is measured against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .radio import GOAL_REWARD, PowerControlEnv, PowerPair, RadioScenario


@dataclass
class OracleResult:
    q: np.ndarray        # (L1, L2, A) optimal action values
    actions: np.ndarray  # (L1, L2) greedy action, lowest index on ties
    steps: np.ndarray    # (L1, L2) frames to goal under the greedy action; inf if never
    sweeps: int

    def action(self, pair: PowerPair) -> int:
        return int(self.actions[pair])


def tabular_oracle(scenario: RadioScenario, primary_policy: str = "classic", gamma: float = 0.5,
                   tol: float = 1e-10, max_sweeps: int = 100_000) -> OracleResult:
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    env = PowerControlEnv(scenario, primary_policy)
    n1, n2 = env.goal.shape
    n_actions = env.n_actions
    # next state for (p1, p2, a) is (next_primary[p1, p2], a)
    nxt1 = np.repeat(env.next_primary[:, :, None], n_actions, axis=2)
    nxt2 = np.broadcast_to(np.arange(n_actions), (n1, n2, n_actions))
    rewards = GOAL_REWARD * env.goal[nxt1, nxt2]

    q = np.zeros((n1, n2, n_actions))
    for sweep in range(1, max_sweeps + 1):
        v = q.max(axis=2)
        q_new = rewards + gamma * v[nxt1, nxt2]
        delta = np.abs(q_new - q).max()
        q = q_new
        if delta < tol:
            break
    actions = np.argmax(q, axis=2)

    steps = np.full((n1, n2), np.inf)
    for pair in scenario.all_pairs():
        cur = pair
        for t in range(n1 * n2 + 1):
            if env.goal[cur]:
                steps[pair] = t
                break
            cur = env.transition(cur, actions[cur])
    return OracleResult(q, actions, steps, sweep)


class OraclePolicy:
    """Acts from observations by matching them to the nearest noiseless RSS vector."""

    def __init__(self, scenario: RadioScenario, result: OracleResult):
        self.pairs = scenario.all_pairs()
        p1 = np.array([scenario.powers(p)[0] for p in self.pairs])
        p2 = np.array([scenario.powers(p)[1] for p in self.pairs])
        self.rss = scenario.noiseless_rss(p1, p2)
        self.result = result

    def __call__(self, state) -> int:
        nearest = int(np.argmin(((self.rss - state) ** 2).sum(axis=1)))
        return self.result.action(self.pairs[nearest])
