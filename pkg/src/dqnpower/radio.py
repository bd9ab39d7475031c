"""Radio physics for a two-link cognitive radio setting.

A primary link (Tx1 -> Rx1) and a secondary link (Tx2 -> Rx2) share one band.
Sensor nodes report the received signal strength (RSS) of the superposed
transmissions, which is the only thing the secondary user gets to see.

Powers are in Watts throughout. Receivers and transmitters are numbered 1
(primary) and 2 (secondary); arrays indexed by them are 0-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, InfeasibleScenarioError, InvalidMeasurementError

PAPER_LEVELS = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4)
DEFAULT_WAVELENGTH = 0.125
DISTANCE_RANGE = (100.0, 300.0)
GOAL_REWARD = 10.0
SCHEMA_VERSION = 1

PRIMARY_POLICIES = ("classic", "stepwise")

# relative slack when comparing a computed power target with a table level
_LEVEL_RTOL = 1e-12


class PowerPair(NamedTuple):
    p1_index: int
    p2_index: int


def _frozen(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ConfigError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SensorGeometry:
    wavelength: float
    distances_primary: np.ndarray
    distances_secondary: np.ndarray

    def __post_init__(self):
        d1 = _frozen(self.distances_primary, 1)
        d2 = _frozen(self.distances_secondary, 1)
        object.__setattr__(self, "distances_primary", d1)
        object.__setattr__(self, "distances_secondary", d2)
        if self.wavelength <= 0:
            raise ConfigError("wavelength must be positive")
        if d1.shape != d2.shape:
            raise ConfigError("primary and secondary distance lists differ in length")
        if np.any(d1 <= 0) or np.any(d2 <= 0):
            raise ConfigError("sensor distances must be positive")

    @property
    def sensor_count(self) -> int:
        return len(self.distances_primary)

    @classmethod
    def random(cls, sensor_count: int, rng: np.random.Generator,
               wavelength: float = DEFAULT_WAVELENGTH,
               distance_range: tuple[float, float] = DISTANCE_RANGE) -> "SensorGeometry":
        lo, hi = distance_range
        d1 = rng.uniform(lo, hi, size=sensor_count)
        d2 = rng.uniform(lo, hi, size=sensor_count)
        return cls(wavelength, d1, d2)


def friis_gain(geometry: SensorGeometry, sensor: int, transmitter: str) -> float:
    """Free-space power gain (lambda / (4 pi d))**2 from a transmitter to a sensor.

    ``transmitter`` is ``"primary"`` or ``"secondary"``.
    """
    if transmitter == "primary":
        d = geometry.distances_primary[sensor]
    elif transmitter == "secondary":
        d = geometry.distances_secondary[sensor]
    else:
        raise ValueError(f"unknown transmitter {transmitter!r}")
    return float((geometry.wavelength / (4.0 * np.pi * d)) ** 2)


def friis_gains(wavelength: float, distances) -> np.ndarray:
    return (wavelength / (4.0 * np.pi * np.asarray(distances, dtype=float))) ** 2


@dataclass(frozen=True, eq=False)
class RadioScenario:
    """All physical constants of one spectrum-sharing instance.

    ``channel_gain_sq[i, j]`` is |h_ij|^2 from transmitter i+1 to receiver j+1.
    Construction fails with :class:`InfeasibleScenarioError` when no pair of
    power levels satisfies both SINR thresholds.
    """

    primary_levels: np.ndarray
    secondary_levels: np.ndarray
    channel_gain_sq: np.ndarray
    noise_power: np.ndarray
    sinr_threshold: np.ndarray
    sensor_gain_primary: np.ndarray
    sensor_gain_secondary: np.ndarray
    sensor_noise_std: np.ndarray
    geometry: SensorGeometry | None = None
    seed: int | None = None
    sigma_divisor: float | None = None
    goal_pairs: frozenset = field(init=False, repr=False)

    def __post_init__(self):
        for name, ndim in (("primary_levels", 1), ("secondary_levels", 1),
                           ("channel_gain_sq", 2), ("noise_power", 1),
                           ("sinr_threshold", 1), ("sensor_gain_primary", 1),
                           ("sensor_gain_secondary", 1), ("sensor_noise_std", 1)):
            object.__setattr__(self, name, _frozen(getattr(self, name), ndim))
        self._validate()
        object.__setattr__(self, "goal_pairs", frozenset(enumerate_goal_pairs(self)))

    def _validate(self):
        for name in ("primary_levels", "secondary_levels"):
            levels = getattr(self, name)
            if len(levels) == 0 or np.any(levels <= 0) or np.any(np.diff(levels) <= 0):
                raise ConfigError(f"{name} must be non-empty, positive and strictly increasing")
        if self.channel_gain_sq.shape != (2, 2):
            raise ConfigError("channel_gain_sq must be 2x2")
        if self.noise_power.shape != (2,) or self.sinr_threshold.shape != (2,):
            raise ConfigError("noise_power and sinr_threshold need one entry per receiver")
        n = len(self.sensor_gain_primary)
        if n < 1:
            raise ConfigError("at least one sensor is required")
        if self.sensor_gain_secondary.shape != (n,) or self.sensor_noise_std.shape != (n,):
            raise ConfigError("per-sensor arrays must all have sensor_count entries")
        for name in ("channel_gain_sq", "sinr_threshold", "sensor_gain_primary",
                     "sensor_gain_secondary", "sensor_noise_std"):
            arr = getattr(self, name)
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise ConfigError(f"{name} must be finite and nonnegative")
        if np.any(self.noise_power <= 0):
            raise ConfigError("receiver noise powers must be positive")

    @property
    def sensor_count(self) -> int:
        return len(self.sensor_gain_primary)

    @property
    def n_primary(self) -> int:
        return len(self.primary_levels)

    @property
    def n_secondary(self) -> int:
        return len(self.secondary_levels)

    def powers(self, pair: PowerPair) -> tuple[float, float]:
        return float(self.primary_levels[pair[0]]), float(self.secondary_levels[pair[1]])

    def all_pairs(self) -> list[PowerPair]:
        return [PowerPair(i, j) for i in range(self.n_primary) for j in range(self.n_secondary)]

    def noiseless_rss(self, p1, p2) -> np.ndarray:
        return np.multiply.outer(p1, self.sensor_gain_primary) + np.multiply.outer(p2, self.sensor_gain_secondary)

    def replace(self, **changes) -> "RadioScenario":
        fields = {name: getattr(self, name) for name in (
            "primary_levels", "secondary_levels", "channel_gain_sq", "noise_power",
            "sinr_threshold", "sensor_gain_primary", "sensor_gain_secondary",
            "sensor_noise_std", "geometry", "seed", "sigma_divisor")}
        fields.update(changes)
        return RadioScenario(**fields)


def noise_std_from_divisor(primary_levels, secondary_levels, g1, g2, divisor: float) -> np.ndarray:
    """Per-sensor noise std tied to the weakest received power: (p1_min g1 + p2_min g2) / divisor."""
    if divisor <= 0:
        raise ConfigError("sigma divisor must be positive")
    base = primary_levels[0] * np.asarray(g1) + secondary_levels[0] * np.asarray(g2)
    return base / divisor


def build_scenario(seed: int, *, sensor_count: int = 10, sigma_divisor: float = 10.0,
                   primary_levels=PAPER_LEVELS, secondary_levels=PAPER_LEVELS,
                   channel_gain_sq=((1.0, 1.0), (1.0, 1.0)), noise_power=(0.01, 0.01),
                   sinr_threshold=(1.2, 0.7), wavelength: float = DEFAULT_WAVELENGTH,
                   noise_std=None) -> RadioScenario:
    """Scenario with sensors scattered by ``seed``; defaults reproduce the reference setup.

    ``sigma_divisor=inf`` gives noiseless sensors. An explicit ``noise_std``
    overrides the divisor.
    """
    if sensor_count < 1:
        raise ConfigError("sensor_count must be >= 1")
    geometry_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    geometry = SensorGeometry.random(sensor_count, geometry_rng, wavelength=wavelength)
    g1 = friis_gains(wavelength, geometry.distances_primary)
    g2 = friis_gains(wavelength, geometry.distances_secondary)
    levels1 = np.asarray(primary_levels, dtype=float)
    levels2 = np.asarray(secondary_levels, dtype=float)
    if noise_std is None:
        std = noise_std_from_divisor(levels1, levels2, g1, g2, sigma_divisor)
        divisor = float(sigma_divisor)
    else:
        std = np.broadcast_to(np.asarray(noise_std, dtype=float), (sensor_count,))
        divisor = None
    return RadioScenario(levels1, levels2, channel_gain_sq, noise_power, sinr_threshold,
                         g1, g2, std, geometry=geometry, seed=seed, sigma_divisor=divisor)


def compute_sinr(scenario: RadioScenario, p1, p2, receiver: int):
    """SINR at receiver 1 or 2 for transmit powers ``p1``, ``p2`` (broadcasts)."""
    h = scenario.channel_gain_sq
    if receiver == 1:
        return h[0, 0] * p1 / (h[1, 0] * p2 + scenario.noise_power[0])
    if receiver == 2:
        return h[1, 1] * p2 / (h[0, 1] * p1 + scenario.noise_power[1])
    raise ValueError(f"receiver must be 1 or 2, got {receiver}")


def observe_state(scenario: RadioScenario, p1: float, p2: float, rng: np.random.Generator) -> np.ndarray:
    """Noisy RSS at every sensor. Not clamped, so entries can be negative."""
    noise = rng.standard_normal(scenario.sensor_count) * scenario.sensor_noise_std
    return p1 * scenario.sensor_gain_primary + p2 * scenario.sensor_gain_secondary + noise


def discretize_index(levels, x: float) -> int:
    levels = np.asarray(levels)
    i = int(np.searchsorted(levels, x * (1.0 - _LEVEL_RTOL), side="left"))
    return min(i, len(levels) - 1)


def discretize(levels, x: float) -> float:
    """Smallest level that is >= x, or the top level when x exceeds it."""
    return float(np.asarray(levels)[discretize_index(levels, x)])


def _power_target(scenario: RadioScenario, p1: float, sinr1: float) -> float:
    if sinr1 <= 0:
        raise InvalidMeasurementError(f"primary SINR must be positive, got {sinr1}")
    return scenario.sinr_threshold[0] * p1 / sinr1


def primary_update_classic(scenario: RadioScenario, p1: float, sinr1: float) -> float:
    return discretize(scenario.primary_levels, _power_target(scenario, p1, sinr1))


def primary_update_stepwise(scenario: RadioScenario, p1_index: int, sinr1: float) -> int:
    """Move the primary at most one level toward the power its SINR target asks for."""
    levels = scenario.primary_levels
    tau = _power_target(scenario, levels[p1_index], sinr1)
    lo, hi = tau * (1.0 + _LEVEL_RTOL), tau * (1.0 - _LEVEL_RTOL)
    j = p1_index
    if j + 1 < len(levels) and levels[j] <= lo and hi <= levels[j + 1]:
        return j + 1
    if j - 1 >= 0 and hi <= levels[j - 1]:
        return j - 1
    return j


def primary_next_index(scenario: RadioScenario, policy: str, pair: PowerPair) -> int:
    p1, p2 = scenario.powers(pair)
    sinr1 = compute_sinr(scenario, p1, p2, 1)
    if policy == "classic":
        return discretize_index(scenario.primary_levels, _power_target(scenario, p1, sinr1))
    if policy == "stepwise":
        return primary_update_stepwise(scenario, pair[0], sinr1)
    raise ConfigError(f"unknown primary policy {policy!r}; expected one of {PRIMARY_POLICIES}")


def is_goal(scenario: RadioScenario, p1: float, p2: float) -> bool:
    return bool(compute_sinr(scenario, p1, p2, 1) >= scenario.sinr_threshold[0]
                and compute_sinr(scenario, p1, p2, 2) >= scenario.sinr_threshold[1])


def reward(scenario: RadioScenario, p1_next: float, p2_next: float) -> float:
    return GOAL_REWARD if is_goal(scenario, p1_next, p2_next) else 0.0


def enumerate_goal_pairs(scenario: RadioScenario) -> set[PowerPair]:
    pairs = set()
    for i, p1 in enumerate(scenario.primary_levels):
        for j, p2 in enumerate(scenario.secondary_levels):
            if is_goal(scenario, p1, p2):
                pairs.add(PowerPair(i, j))
    if not pairs:
        raise InfeasibleScenarioError("no pair of power levels meets both SINR thresholds")
    return pairs


class PowerControlEnv:
    """Frame-by-frame interaction between the secondary agent and the primary user.

    The agent's action is the index of its next transmit power. The primary
    reacts to the SINR it measured in the current frame, so its next power is
    fixed before the agent moves. Transition tables are precomputed.
    """

    def __init__(self, scenario: RadioScenario, primary_policy: str = "classic"):
        if primary_policy not in PRIMARY_POLICIES:
            raise ConfigError(f"unknown primary policy {primary_policy!r}")
        self.scenario = scenario
        self.primary_policy = primary_policy
        shape = (scenario.n_primary, scenario.n_secondary)
        self.next_primary = np.zeros(shape, dtype=int)
        self.goal = np.zeros(shape, dtype=bool)
        for pair in scenario.all_pairs():
            self.next_primary[pair] = primary_next_index(scenario, primary_policy, pair)
            self.goal[pair] = pair in scenario.goal_pairs
        self.pair = PowerPair(0, 0)

    @property
    def n_actions(self) -> int:
        return self.scenario.n_secondary

    def random_pair(self, rng: np.random.Generator) -> PowerPair:
        return PowerPair(int(rng.integers(self.scenario.n_primary)),
                         int(rng.integers(self.scenario.n_secondary)))

    def observe(self, rng: np.random.Generator) -> np.ndarray:
        return observe_state(self.scenario, *self.scenario.powers(self.pair), rng)

    def reset(self, rng: np.random.Generator, pair: PowerPair | None = None) -> np.ndarray:
        self.pair = PowerPair(*pair) if pair is not None else self.random_pair(rng)
        return self.observe(rng)

    def at_goal(self) -> bool:
        return bool(self.goal[self.pair])

    def transition(self, pair: PowerPair, action: int) -> PowerPair:
        return PowerPair(int(self.next_primary[pair]), int(action))

    def step(self, action: int, rng: np.random.Generator) -> tuple[np.ndarray, float, bool]:
        """Advance one frame; returns (next state, reward, next-frame goal flag)."""
        self.pair = self.transition(self.pair, action)
        done = self.at_goal()
        return self.observe(rng), (GOAL_REWARD if done else 0.0), done

    def sinrs(self, pair: PowerPair | None = None) -> tuple[float, float]:
        p1, p2 = self.scenario.powers(self.pair if pair is None else pair)
        return (float(compute_sinr(self.scenario, p1, p2, 1)),
                float(compute_sinr(self.scenario, p1, p2, 2)))


# -- serialization -----------------------------------------------------------

def scenario_to_dict(scenario: RadioScenario) -> dict:
    geometry = None
    if scenario.geometry is not None:
        geometry = {
            "wavelength": scenario.geometry.wavelength,
            "distances_primary": scenario.geometry.distances_primary.tolist(),
            "distances_secondary": scenario.geometry.distances_secondary.tolist(),
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": scenario.seed,
        "primary_levels": scenario.primary_levels.tolist(),
        "secondary_levels": scenario.secondary_levels.tolist(),
        "channel_gain_sq": scenario.channel_gain_sq.tolist(),
        "noise_power": scenario.noise_power.tolist(),
        "sinr_threshold": scenario.sinr_threshold.tolist(),
        "sensor_count": scenario.sensor_count,
        "sensor_gain_primary": scenario.sensor_gain_primary.tolist(),
        "sensor_gain_secondary": scenario.sensor_gain_secondary.tolist(),
        "sensor_noise_std": scenario.sensor_noise_std.tolist(),
        "sigma_divisor": scenario.sigma_divisor,
        "geometry": geometry,
    }


def scenario_from_dict(data: dict) -> RadioScenario:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported scenario schema version {version!r}")
    try:
        geometry = None
        if data.get("geometry") is not None:
            g = data["geometry"]
            geometry = SensorGeometry(float(g["wavelength"]), g["distances_primary"],
                                      g["distances_secondary"])
        scenario = RadioScenario(
            data["primary_levels"], data["secondary_levels"], data["channel_gain_sq"],
            data["noise_power"], data["sinr_threshold"], data["sensor_gain_primary"],
            data["sensor_gain_secondary"], data["sensor_noise_std"],
            geometry=geometry, seed=data.get("seed"), sigma_divisor=data.get("sigma_divisor"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed scenario document: {exc}") from exc
    if "sensor_count" in data and data["sensor_count"] != scenario.sensor_count:
        raise ConfigError("sensor_count does not match the per-sensor arrays")
    return scenario


def save_scenario(scenario: RadioScenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n")


def load_scenario(path) -> RadioScenario:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    return scenario_from_dict(data)
