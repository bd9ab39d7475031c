"""Experiment configuration: presets, JSON config documents and flag overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .agent import TrainConfig
from .errors import ConfigError
from .radio import RadioScenario, build_scenario, load_scenario

OUT_ENV_VAR = "DQNPOWER_OUT"
DEFAULT_OUT = "runs/default"

# reference setup: 8 levels 0.05..0.4 W for both users, unit channel gains,
# 0.01 W receiver noise, SINR targets 1.2 / 0.7, ten sensors
PRESETS = {
    "paper-policy1": {"policy": "classic"},
    "paper-policy2": {"policy": "stepwise"},
}

SCENARIO_KEYS = {"sensor_count", "sigma_divisor", "wavelength", "primary_levels",
                 "secondary_levels", "channel_gain_sq", "noise_power", "sinr_threshold",
                 "noise_std"}


@dataclass
class EvalConfig:
    runs: int = 1000
    max_frames: int = 20

    def __post_init__(self):
        if self.runs < 1 or self.max_frames < 1:
            raise ConfigError("eval runs and max_frames must be >= 1")


@dataclass
class ExperimentConfig:
    preset: str = "paper-policy1"
    seed: int = 0
    scenario: dict = field(default_factory=dict)
    scenario_file: str | None = None
    train: dict = field(default_factory=dict)
    eval: EvalConfig = field(default_factory=EvalConfig)
    out: str | None = None

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        unknown = set(self.scenario) - SCENARIO_KEYS
        if unknown:
            raise ConfigError(f"unknown scenario options: {sorted(unknown)}")
        if self.scenario_file is not None and not Path(self.scenario_file).is_file():
            raise ConfigError(f"scenario file {self.scenario_file} does not exist")

    @property
    def policy(self) -> str:
        return self.train.get("policy", PRESETS[self.preset]["policy"])

    def build_scenario(self) -> RadioScenario:
        if self.scenario_file is not None:
            return load_scenario(self.scenario_file)
        try:
            return build_scenario(self.seed, **self.scenario)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid scenario options: {exc}") from exc

    def train_config(self) -> TrainConfig:
        opts = {"policy": self.policy, "seed": self.seed, "max_frames": self.eval.max_frames}
        opts.update(self.train)
        try:
            return TrainConfig.from_dict(opts)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def out_dir(self) -> Path:
        return Path(self.out or os.environ.get(OUT_ENV_VAR) or DEFAULT_OUT)

    def to_dict(self) -> dict:
        return {"preset": self.preset, "seed": self.seed, "scenario": self.scenario,
                "scenario_file": self.scenario_file, "train": self.train,
                "eval": {"runs": self.eval.runs, "max_frames": self.eval.max_frames},
                "out": self.out}


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = set(data) - {"preset", "seed", "scenario", "scenario_file", "train", "eval", "out"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "seed" not in data:
        raise ConfigError("config must pin a seed")
    try:
        ev = EvalConfig(**data.pop("eval", {}))
        scenario_file = data.get("scenario_file")
        if scenario_file is not None:
            data["scenario_file"] = str(Path(path).parent / scenario_file)
        return ExperimentConfig(eval=ev, **data)
    except TypeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc


def apply_overrides(cfg: ExperimentConfig, *, preset=None, seed=None, out=None, sigma_div=None,
                    sensors=None, policy=None, iterations=None) -> ExperimentConfig:
    scenario = dict(cfg.scenario)
    train = dict(cfg.train)
    if sigma_div is not None:
        scenario["sigma_divisor"] = sigma_div
        scenario.pop("noise_std", None)
    if sensors is not None:
        scenario["sensor_count"] = sensors
    if policy is not None:
        train["policy"] = policy
    if iterations is not None:
        train["iterations"] = iterations
    return replace(cfg, preset=preset or cfg.preset, seed=cfg.seed if seed is None else seed,
                   out=out or cfg.out, scenario=scenario, train=train)
