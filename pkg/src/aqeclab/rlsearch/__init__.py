"""Reinforcement-learning search for the optimal code space.

Two optimizers share one interface: the clipped-surrogate policy-gradient
method (default) and a cross-entropy-method fallback.  Budgets are counted
in episodes; the policy-gradient episode is a full K-step rollout, a CEM
episode is one candidate evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..codes import CodePair
from ..serialize import write_csv
from .cem import CEMConfig, CEMOutcome, train_cem
from .env import Action, CodeSearchEnv, EnvConfig, EnvState
from .ppo import PPOConfig, PPOOutcome, RandomPolicy, TorchPolicy, episode_fidelity_trace, train_ppo

__all__ = [
    "Action",
    "CodeSearchEnv",
    "EnvConfig",
    "EnvState",
    "PPOConfig",
    "CEMConfig",
    "OptimizerConfig",
    "TrainResult",
    "TorchPolicy",
    "RandomPolicy",
    "train",
    "episode_fidelity_trace",
    "save_train_result",
]

MIN_BUDGET = 1000


@dataclass(frozen=True)
class OptimizerConfig:
    strategy: str = "ppo"
    ppo: PPOConfig = field(default_factory=PPOConfig)
    cem: CEMConfig = field(default_factory=CEMConfig)

    def __post_init__(self) -> None:
        if self.strategy not in ("ppo", "cem"):
            raise ValueError(f"unknown strategy {self.strategy!r}")

    @classmethod
    def from_dict(cls, raw: dict) -> "OptimizerConfig":
        strategy = raw.get("strategy", "ppo")
        ppo_kwargs = dict(raw.get("ppo", {}))
        if "hidden_sizes" in ppo_kwargs:
            ppo_kwargs["hidden_sizes"] = tuple(ppo_kwargs["hidden_sizes"])
        return cls(strategy=strategy, ppo=PPOConfig(**ppo_kwargs),
                   cem=CEMConfig(**raw.get("cem", {})))

    @classmethod
    def from_json(cls, path) -> "OptimizerConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class TrainResult:
    best_code: CodePair
    best_mean_fidelity: float
    best_action: np.ndarray
    reward_history: np.ndarray  # (episodes, 3): per-episode min, mean, max
    optimizer: str
    episodes: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.best_mean_fidelity <= 1.0:
            raise ValueError("best mean fidelity outside [0, 1]")


def train(env_config: EnvConfig, optimizer_config: OptimizerConfig,
          budget: int, seed: int) -> TrainResult:
    """Run the code search and return the best code encountered."""
    if budget < MIN_BUDGET:
        raise ValueError(f"budget must be >= {MIN_BUDGET} episodes")
    env = CodeSearchEnv(env_config)
    if optimizer_config.strategy == "ppo":
        out: PPOOutcome | CEMOutcome = train_ppo(env, budget, optimizer_config.ppo, seed)
    else:
        out = train_cem(env, budget, optimizer_config.cem, seed)
    action = Action.from_unconstrained(out.best_action)
    code = action.code(env_config.mode_levels)
    return TrainResult(best_code=code, best_mean_fidelity=float(out.best_mean_fidelity),
                       best_action=np.asarray(out.best_action, dtype=float),
                       reward_history=out.reward_history,
                       optimizer=optimizer_config.strategy, episodes=out.episodes)


def save_train_result(result: TrainResult, json_path, csv_path) -> None:
    """TrainResult JSON plus reward-history CSV (episode, r_min, r_mean, r_max)."""
    payload = {
        "optimizer": result.optimizer,
        "episodes": result.episodes,
        "best_mean_fidelity": result.best_mean_fidelity,
        "best_action_unconstrained": [float(v) for v in result.best_action],
        "best_code": {
            "zero_logical": [float(v.real) for v in result.best_code.zero_logical.amplitudes],
            "one_logical": [float(v.real) for v in result.best_code.one_logical.amplitudes],
        },
    }
    Path(json_path).write_text(json.dumps(payload, indent=2) + "\n")
    hist = result.reward_history
    write_csv(csv_path, {
        "episode": np.arange(hist.shape[0], dtype=float),
        "r_min": hist[:, 0],
        "r_mean": hist[:, 1],
        "r_max": hist[:, 2],
    }, units="reward (dimensionless)")
