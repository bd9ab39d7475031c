"""Deep Q-learning for the secondary user's power choice.

One environment frame per iteration, one Adam step per iteration once the
replay memory holds ``warmup`` transitions. There is no separate target
network: bootstrap targets use the parameters from before the update.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import qnet
from .errors import ConfigError, TrainingDivergedError
from .radio import PRIMARY_POLICIES, PowerControlEnv, PowerPair, RadioScenario

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 100_000
    warmup: int = 300
    minibatch_size: int = 256
    replay_capacity: int = 400
    gamma: float = 0.5
    epsilon_start: float = 0.8
    learning_rate: float = 1e-3
    max_frames: int = 20
    policy: str = "classic"
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not 1 <= self.warmup <= self.replay_capacity:
            raise ConfigError("warmup must lie in [1, replay_capacity]")
        if not 1 <= self.minibatch_size <= self.replay_capacity:
            raise ConfigError("minibatch_size must lie in [1, replay_capacity]")
        if self.minibatch_size > self.warmup:
            raise ConfigError("minibatch_size cannot exceed warmup (sampling is without replacement)")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma must lie in [0, 1)")
        if not 0.0 <= self.epsilon_start <= 1.0:
            raise ConfigError("epsilon_start must lie in [0, 1]")
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be nonnegative")
        if self.max_frames < 1:
            raise ConfigError("max_frames must be >= 1")
        if self.policy not in PRIMARY_POLICIES:
            raise ConfigError(f"policy must be one of {PRIMARY_POLICIES}")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown training options: {sorted(unknown)}")
        return cls(**data)


class Transition(NamedTuple):
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray


class ReplayMemory:
    """Fixed-capacity ring buffer; the oldest transition is overwritten first."""

    def __init__(self, capacity: int, state_dim: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=int)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.inserted = 0

    def __len__(self) -> int:
        return min(self.inserted, self.capacity)

    def push(self, t: Transition) -> None:
        i = self.inserted % self.capacity
        self.states[i] = t.state
        self.actions[i] = t.action
        self.rewards[i] = t.reward
        self.next_states[i] = t.next_state
        self.inserted += 1

    def __getitem__(self, i: int) -> Transition:
        """i-th oldest stored transition."""
        n = len(self)
        if not 0 <= i < n:
            raise IndexError(i)
        j = (self.inserted - n + i) % self.capacity
        return Transition(self.states[j].copy(), int(self.actions[j]),
                          float(self.rewards[j]), self.next_states[j].copy())

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        """Distinct slot indices drawn uniformly from the filled part."""
        return rng.choice(len(self), size=batch_size, replace=False)


def epsilon(k: int, config: TrainConfig) -> float:
    """Linearly decaying exploration probability, ``epsilon_start`` at 0 and 0 at K."""
    return config.epsilon_start * (1.0 - k / config.iterations)


def greedy_action(values) -> int:
    return int(np.argmax(values))  # first maximum wins ties


def select_action(net: qnet.QNetwork, normalizer: qnet.Normalizer, state, eps: float,
                  rng: np.random.Generator) -> int:
    if rng.random() < eps:
        return int(rng.integers(net.output_dim))
    return greedy_action(qnet.forward(net, qnet.apply_normalizer(normalizer, state)))


def compute_targets(net: qnet.QNetwork, rewards, next_states, gamma: float) -> np.ndarray:
    """Bellman targets r + gamma * max_a' Q(s', a'); ``next_states`` already normalized."""
    rewards = np.asarray(rewards, dtype=float)
    if gamma == 0.0:
        return rewards.copy()
    return rewards + gamma * qnet.forward(net, next_states).max(axis=1)


@dataclass
class TrainResult:
    net: qnet.QNetwork
    normalizer: qnet.Normalizer
    losses: list[tuple[int, float]] = field(default_factory=list)
    goals_reached: int = 0

    def final_loss(self, window: int = 1000) -> float:
        tail = [v for _, v in self.losses[-window:]]
        return float(np.mean(tail)) if tail else float("nan")


def train(scenario: RadioScenario, config: TrainConfig, rng: np.random.Generator | None = None,
          on_iteration: Callable[[int, TrainResult], None] | None = None) -> TrainResult:
    """Run the full replay-memory training loop.

    Actions are uniformly random until the input normalizer is fitted on the
    first ``warmup`` transitions. After every iteration ``on_iteration(k, result)``
    is called if given; it must not mutate the network.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    env = PowerControlEnv(scenario, config.policy)
    init_rng, env_rng, act_rng, batch_rng = (np.random.default_rng(s) for s in
                                             np.random.SeedSequence(int(rng.integers(2**63))).spawn(4))
    net = qnet.init_network(scenario.sensor_count, env.n_actions, init_rng)
    opt = qnet.AdamState.for_network(net, learning_rate=config.learning_rate)
    memory = ReplayMemory(config.replay_capacity, scenario.sensor_count)
    result = TrainResult(net, None)
    normalizer = None
    norm_states = None  # normalized replay contents, kept in step with ``memory``
    norm_next = None

    state = env.reset(env_rng)
    for k in range(1, config.iterations + 1):
        was_goal = env.at_goal()
        if normalizer is None:
            action = int(act_rng.integers(env.n_actions))
        else:
            action = select_action(net, normalizer, state, epsilon(k, config), act_rng)
        next_state, r, done = env.step(action, env_rng)
        result.goals_reached += int(done)
        slot = memory.inserted % memory.capacity
        memory.push(Transition(state, action, r, next_state))

        if k >= config.warmup:
            if normalizer is None:
                n = len(memory)
                normalizer = qnet.fit_normalizer(np.vstack([memory.states[:n], memory.next_states[:n]]))
                result.normalizer = normalizer
                norm_states = qnet.apply_normalizer(normalizer, memory.states)
                norm_next = qnet.apply_normalizer(normalizer, memory.next_states)
            else:
                norm_states[slot] = qnet.apply_normalizer(normalizer, state)
                norm_next[slot] = qnet.apply_normalizer(normalizer, next_state)
            idx = memory.sample_indices(config.minibatch_size, batch_rng)
            value = _optimize(net, opt, norm_states[idx], memory.actions[idx],
                              memory.rewards[idx], norm_next[idx], config.gamma)
            if not np.isfinite(value) or not net.is_finite():
                raise TrainingDivergedError(
                    f"non-finite loss or parameters at iteration {k} (loss={value}, "
                    f"lr={config.learning_rate}, gamma={config.gamma})")
            result.losses.append((k, value))

        if was_goal:
            state = env.reset(env_rng)
        else:
            state = next_state
        if on_iteration is not None:
            on_iteration(k, result)

    if normalizer is None:
        # fewer iterations than warmup: no update ever happened
        n = len(memory)
        samples = np.vstack([memory.states[:n], memory.next_states[:n]])
        result.normalizer = qnet.fit_normalizer(samples)
    log.info("trained %d iterations, %d goal hits", config.iterations, result.goals_reached)
    return result


def _optimize(net, opt, states, actions, rewards, next_states, gamma) -> float:
    # one forward pass over current and next states with the pre-update weights
    n = len(states)
    acts = qnet._forward_cache(net, np.vstack([states, next_states]))
    targets = rewards + gamma * acts[-1][n:].max(axis=1)
    value, grads = qnet.gradients(net, states, actions, targets, cache=[a[:n] for a in acts])
    qnet.adam_step(net, opt, grads)
    return value


# -- deployment ----------------------------------------------------------------

class GreedyPolicy:
    """Deployed agent: argmax of the network on the normalized observation."""

    def __init__(self, net: qnet.QNetwork, normalizer: qnet.Normalizer):
        self.net = net
        self.normalizer = normalizer

    def __call__(self, state) -> int:
        return greedy_action(qnet.forward(self.net, qnet.apply_normalizer(self.normalizer, state)))


class Frame(NamedTuple):
    pair: PowerPair
    sinr1: float
    sinr2: float
    goal: bool


@dataclass
class Trajectory:
    frames: list[Frame]
    success: bool
    steps: int | None  # frames elapsed until the first goal frame

    @property
    def start(self) -> PowerPair:
        return self.frames[0].pair


def rollout(env: PowerControlEnv, policy: Callable[[np.ndarray], int], start: PowerPair,
            max_frames: int, rng: np.random.Generator) -> Trajectory:
    """Play ``policy`` from ``start`` until the goal or ``max_frames`` frames.

    An initial goal pair counts as success in 0 steps.
    """
    state = env.reset(rng, start)
    frames = [Frame(env.pair, *env.sinrs(), env.at_goal())]
    if env.at_goal():
        return Trajectory(frames, True, 0)
    for t in range(1, max_frames + 1):
        state, _, done = env.step(policy(state), rng)
        frames.append(Frame(env.pair, *env.sinrs(), done))
        if done:
            return Trajectory(frames, True, t)
    return Trajectory(frames, False, None)


def act_greedy(net: qnet.QNetwork, normalizer: qnet.Normalizer, scenario: RadioScenario,
               start: PowerPair, max_frames: int, rng: np.random.Generator,
               primary_policy: str = "classic") -> Trajectory:
    env = PowerControlEnv(scenario, primary_policy)
    return rollout(env, GreedyPolicy(net, normalizer), start, max_frames, rng)
