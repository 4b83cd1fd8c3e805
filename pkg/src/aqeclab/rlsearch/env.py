"""Environment for the codeword-coefficient search.

An action is the pair of real coefficient vectors (c0 over {|0>, |4>}, c1
over {|2>, |6>}), normalized per codeword on use.  Each step builds the
corresponding code, runs the loss-plus-recovery model to the reference time
and observes the six Pauli-eigenstate fidelities; their mean is the
code-space mean fidelity, and the reward is shaped around the margin over
the uncorrected break-even baseline:

    eps = Fbar - Fbar_be;  reward = 1000 eps  if eps > 0 and eps > eps_prev,
                                    100 eps   if eps > 0 and eps <= eps_prev,
                                    0         if eps <= 0.

The dynamics depend only on the action, so each unique (quantized) action is
evaluated once and memoized; repeated evaluation is bit-identical.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from ..codes import CodePair, code_pair_from_coeffs, has_vacuum_branch
from ..fidelity import break_even_mean_fidelity, six_code_states
from ..models import fixed_time_channel, full_recovery_model

OBS_CLIP_ATOL = 1e-9
ACTION_QUANTUM = 1e-6
_CACHE_MAX = 65536


@dataclass(frozen=True)
class EnvConfig:
    """Search-environment parameters (rates in units of gamma_a)."""

    truncation_photons: int = 6
    steps_per_episode: int = 11
    reference_time: float = 0.6
    g: float = 400.0
    gamma_b: float = 1750.0
    gamma_a: float = 1.0

    def __post_init__(self) -> None:
        if self.steps_per_episode < 1:
            raise ValueError("need at least one step per episode")
        if self.truncation_photons < 6:
            raise ValueError("code-space truncation must cover at least 6 photons")
        if self.reference_time <= 0.0:
            raise ValueError("reference time must be > 0")
        if self.gamma_a < 0.0 or self.gamma_b < 0.0 or self.g < 0.0:
            raise ValueError("rates must be >= 0")

    @property
    def mode_levels(self) -> int:
        return self.truncation_photons + 1

    @property
    def break_even(self) -> float:
        return float(break_even_mean_fidelity(self.gamma_a * self.reference_time))


@dataclass(frozen=True)
class Action:
    """Normalized codeword coefficients: c0 on (|0>, |4>), c1 on (|2>, |6>)."""

    c0: np.ndarray
    c1: np.ndarray

    def __post_init__(self) -> None:
        c0 = np.asarray(self.c0, dtype=float).reshape(-1)
        c1 = np.asarray(self.c1, dtype=float).reshape(-1)
        if c0.size != 2 or c1.size != 2:
            raise ValueError("coefficient vectors must have length 2")
        for name, c in (("c0", c0), ("c1", c1)):
            nrm = float(np.linalg.norm(c))
            if abs(nrm - 1.0) > 1e-9:
                raise ValueError(f"{name} must be unit-normalized, got norm {nrm!r}")
        c0.setflags(write=False)
        c1.setflags(write=False)
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "c1", c1)

    @classmethod
    def from_unconstrained(cls, v: np.ndarray) -> "Action":
        """Project 4 unconstrained reals onto the per-codeword unit circles.

        Scale invariant (v and 2v give the same action); a numerically zero
        half falls back to the first basis vector.
        """
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.size != 4:
            raise ValueError("expected 4 unconstrained coefficients")
        halves = []
        for half in (v[:2], v[2:]):
            nrm = float(np.linalg.norm(half))
            halves.append(half / nrm if nrm > 1e-12 else np.array([1.0, 0.0]))
        return cls(c0=halves[0], c1=halves[1])

    def key(self) -> tuple:
        """Cache key on a 1e-6 coefficient grid."""
        q = np.round(np.concatenate([self.c0, self.c1]) / ACTION_QUANTUM).astype(np.int64)
        return tuple(q.tolist())

    def code(self, truncation: int) -> CodePair:
        return code_pair_from_coeffs(self.c0, self.c1, truncation)


@dataclass(frozen=True)
class EnvState:
    """Six observations Tr(rho_j M[rho_j]), j = +x, -x, +y, -y, +z, -z."""

    observations: np.ndarray

    def __post_init__(self) -> None:
        obs = np.asarray(self.observations, dtype=float).reshape(-1)
        if obs.size != 6:
            raise ValueError("expected 6 observations")
        if obs.min() < -OBS_CLIP_ATOL or obs.max() > 1.0 + OBS_CLIP_ATOL:
            raise ValueError("observations outside [0, 1]")
        obs = np.clip(obs, 0.0, 1.0)
        obs.setflags(write=False)
        object.__setattr__(self, "observations", obs)

    @property
    def mean_fidelity(self) -> float:
        return float(self.observations.mean())


class CodeSearchEnv:
    """Episodic wrapper around the memoized action -> observations map."""

    def __init__(self, config: EnvConfig):
        self.config = config
        self._cache: OrderedDict[tuple, tuple[np.ndarray, bool]] = OrderedDict()
        self._eps_prev: float = 0.0
        self._step_count: int = 0

    def observations(self, action: Action) -> tuple[np.ndarray, bool]:
        """Six fidelities for an action plus its vacuum-degeneracy flag."""
        key = action.key()
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        cfg = self.config
        code = action.code(cfg.mode_levels)
        degenerate = has_vacuum_branch(code)
        model = full_recovery_model(code, g=cfg.g, gamma_a=cfg.gamma_a, gamma_b=cfg.gamma_b)
        channel = fixed_time_channel(model, cfg.reference_time, code=code,
                                     method="propagator")
        obs = np.array([
            float(np.trace(rho.data @ channel(rho).data).real)
            for rho in six_code_states(code)
        ])
        obs = np.clip(obs, 0.0, 1.0)
        if len(self._cache) >= _CACHE_MAX:
            self._cache.popitem(last=False)
        self._cache[key] = (obs, degenerate)
        return obs, degenerate

    def reset(self, rng: np.random.Generator) -> EnvState:
        """Start an episode from a uniformly random point on the coefficient circles."""
        th0, th1 = rng.uniform(0.0, 2.0 * np.pi, size=2)
        action = Action(c0=np.array([np.cos(th0), np.sin(th0)]),
                        c1=np.array([np.cos(th1), np.sin(th1)]))
        obs, degenerate = self.observations(action)
        eps = float(obs.mean()) - self.config.break_even
        self._eps_prev = min(eps, 0.0) if degenerate else eps
        self._step_count = 0
        return EnvState(observations=obs)

    def step(self, action: Action) -> tuple[EnvState, float, bool]:
        if self._step_count >= self.config.steps_per_episode:
            raise RuntimeError("episode finished; call reset()")
        obs, degenerate = self.observations(action)
        eps = float(obs.mean()) - self.config.break_even
        if degenerate:
            # vacuum codeword: no recovery on that branch, treated as eps <= 0
            reward = 0.0
            eps = min(eps, 0.0)
        elif eps > 0.0 and eps > self._eps_prev:
            reward = 1000.0 * eps
        elif eps > 0.0:
            reward = 100.0 * eps
        else:
            reward = 0.0
        self._eps_prev = eps
        self._step_count += 1
        done = self._step_count >= self.config.steps_per_episode
        return EnvState(observations=obs), reward, done
