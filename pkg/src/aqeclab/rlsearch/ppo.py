"""Clipped-surrogate policy-gradient optimizer over the coefficient search.

A diagonal Gaussian policy over the 4 unconstrained coefficients (normalized
per codeword inside the environment) and a value baseline, both small MLPs,
trained with the usual clipped importance-ratio objective.  All sampling
randomness lives in a numpy generator so runs are reproducible; torch only
performs deterministic forward/backward passes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch
from torch import nn

from .env import Action, CodeSearchEnv, EnvConfig


@dataclass(frozen=True)
class PPOConfig:
    learning_rate: float = 3e-4
    clip_ratio: float = 0.2
    hidden_sizes: tuple[int, int] = (64, 64)
    update_epochs: int = 10
    minibatch_size: int = 64
    episodes_per_update: int = 16
    discount: float = 0.9
    entropy_coef: float = 1e-3
    value_coef: float = 0.5
    init_log_std: float = 0.0
    min_log_std: float = -4.0


def _mlp(in_dim: int, hidden: tuple[int, ...], out_dim: int) -> nn.Sequential:
    layers: list[nn.Module] = []
    last = in_dim
    for h in hidden:
        layers += [nn.Linear(last, h), nn.Tanh()]
        last = h
    layers.append(nn.Linear(last, out_dim))
    return nn.Sequential(*layers)


class TorchPolicy(nn.Module):
    """Gaussian policy: state-dependent mean, state-independent log-std."""

    def __init__(self, config: PPOConfig, obs_dim: int = 6, act_dim: int = 4):
        super().__init__()
        self.mean_net = _mlp(obs_dim, config.hidden_sizes, act_dim)
        self.log_std = nn.Parameter(torch.full((act_dim,), float(config.init_log_std)))
        self.min_log_std = float(config.min_log_std)

    def distribution_params(self, obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        with torch.no_grad():
            obs_t = torch.as_tensor(np.array(obs, dtype=float))
            mean = self.mean_net(obs_t).numpy()
            std = torch.exp(self.log_std.clamp(min=self.min_log_std)).numpy()
        return mean, std

    def act(self, obs: np.ndarray, rng: Optional[np.random.Generator] = None,
            deterministic: bool = False) -> Action:
        mean, std = self.distribution_params(obs)
        if deterministic or rng is None:
            raw = mean
        else:
            raw = rng.normal(mean, std)
        return Action.from_unconstrained(raw)

    def log_prob(self, obs: torch.Tensor, raw_actions: torch.Tensor) -> torch.Tensor:
        mean = self.mean_net(obs)
        log_std = self.log_std.clamp(min=self.min_log_std)
        var = torch.exp(2.0 * log_std)
        logp = -0.5 * ((raw_actions - mean) ** 2 / var
                       + 2.0 * log_std + np.log(2.0 * np.pi))
        return logp.sum(dim=-1)

    def entropy(self) -> torch.Tensor:
        log_std = self.log_std.clamp(min=self.min_log_std)
        return (0.5 * (1.0 + np.log(2.0 * np.pi)) + log_std).sum()


@dataclass
class PPOOutcome:
    best_action: np.ndarray
    best_mean_fidelity: float
    reward_history: np.ndarray  # (episodes, 3): min, mean, max step reward
    policy: TorchPolicy
    episodes: int


def train_ppo(env: CodeSearchEnv, budget_episodes: int, config: PPOConfig,
              seed: int) -> PPOOutcome:
    torch.manual_seed(int(seed))
    torch.set_default_dtype(torch.float64)
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x9906)))
    policy = TorchPolicy(config).double()
    value = _mlp(6, config.hidden_sizes, 1).double()
    optimizer = torch.optim.Adam(
        list(policy.parameters()) + list(value.parameters()), lr=config.learning_rate)

    k_steps = env.config.steps_per_episode
    best_fbar = -1.0
    best_raw = np.array([0.0, 1.0, 1.0, 0.0])
    reward_history: list[tuple[float, float, float]] = []
    episodes_done = 0

    while episodes_done < budget_episodes:
        batch_eps = min(config.episodes_per_update, budget_episodes - episodes_done)
        obs_buf, act_buf, ret_buf = [], [], []
        for _ in range(batch_eps):
            obs = env.reset(rng).observations
            rewards = []
            ep_obs, ep_act = [], []
            for _ in range(k_steps):
                mean, std = policy.distribution_params(obs)
                raw = rng.normal(mean, std)
                action = Action.from_unconstrained(raw)
                state, reward, _done = env.step(action)
                ep_obs.append(obs)
                ep_act.append(raw)
                rewards.append(reward)
                fbar = state.mean_fidelity
                if fbar > best_fbar:
                    best_fbar = fbar
                    best_raw = raw.copy()
                obs = state.observations
            returns = np.zeros(k_steps)
            acc = 0.0
            for i in reversed(range(k_steps)):
                acc = rewards[i] + config.discount * acc
                returns[i] = acc
            obs_buf.extend(ep_obs)
            act_buf.extend(ep_act)
            ret_buf.extend(returns.tolist())
            reward_history.append((min(rewards), float(np.mean(rewards)), max(rewards)))
            episodes_done += 1

        obs_t = torch.as_tensor(np.array(obs_buf))
        act_t = torch.as_tensor(np.array(act_buf))
        ret_t = torch.as_tensor(np.array(ret_buf))
        with torch.no_grad():
            logp_old = policy.log_prob(obs_t, act_t)
            adv = ret_t - value(obs_t).squeeze(-1)
        adv_std = float(adv.std())
        if adv_std > 1e-8:
            adv = (adv - adv.mean()) / adv_std

        n = obs_t.shape[0]
        for _ in range(config.update_epochs):
            perm = rng.permutation(n)
            for start in range(0, n, config.minibatch_size):
                idx = torch.as_tensor(perm[start:start + config.minibatch_size])
                logp = policy.log_prob(obs_t[idx], act_t[idx])
                ratio = torch.exp(logp - logp_old[idx])
                clipped = torch.clamp(ratio, 1.0 - config.clip_ratio, 1.0 + config.clip_ratio)
                policy_loss = -torch.min(ratio * adv[idx], clipped * adv[idx]).mean()
                value_loss = ((value(obs_t[idx]).squeeze(-1) - ret_t[idx]) ** 2).mean()
                loss = (policy_loss + config.value_coef * value_loss
                        - config.entropy_coef * policy.entropy())
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()

    return PPOOutcome(best_action=best_raw, best_mean_fidelity=best_fbar,
                      reward_history=np.array(reward_history), policy=policy,
                      episodes=episodes_done)


class RandomPolicy:
    """Frozen uniform policy over the coefficient circles (diagnostics)."""

    def act(self, obs: np.ndarray, rng: Optional[np.random.Generator] = None,
            deterministic: bool = False) -> Action:
        if rng is None or deterministic:
            return Action.from_unconstrained(np.array([1.0, 0.0, 1.0, 0.0]))
        th0, th1 = rng.uniform(0.0, 2.0 * np.pi, size=2)
        return Action(c0=np.array([np.cos(th0), np.sin(th0)]),
                      c1=np.array([np.cos(th1), np.sin(th1)]))


def episode_fidelity_trace(env_config: EnvConfig, policy, seed: int,
                           deterministic: bool = False) -> np.ndarray:
    """Per-step mean-fidelity series of one policy rollout.

    ``deterministic`` rolls out the policy mean (the episode still starts
    from the seed-dependent random initial code).
    """
    env = CodeSearchEnv(env_config)
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x711)))
    state = env.reset(rng)
    series = np.zeros(env_config.steps_per_episode)
    for k in range(env_config.steps_per_episode):
        action = policy.act(state.observations, rng, deterministic=deterministic)
        state, _reward, _done = env.step(action)
        series[k] = state.mean_fidelity
    return series
