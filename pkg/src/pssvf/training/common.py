from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from ..envs.rollout import rollout
from ..mlp import MlpSpec
from ..rng import Rng

METRICS_COLUMNS = ("episode", "env_steps", "eval_return_mean", "eval_return_std", "critic_loss", "wall_ms")


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class MetricsRow:
    episode: int
    env_steps: int
    eval_return_mean: float
    eval_return_std: float
    critic_loss: float | None
    wall_ms: float | None

    def as_dict(self) -> dict:
        return asdict(self)


def policy_spec_for(env, hidden, activation: str = "tanh", head: str | None = None) -> MlpSpec:
    head = head or env.default_head
    bounds = {}
    if head == "tanh":
        bounds = {"action_low": env.action_low, "action_high": env.action_high}
    return MlpSpec(input_dim=env.obs_dim, hidden=tuple(hidden), output_dim=env.action_dim,
                   activation=activation, head=head, **bounds)


def evaluate_policy(env, policy, normalizer, seed: int, episodes: int) -> np.ndarray:
    """Returns of ``episodes`` rollouts with a frozen normalizer.

    The same ``seed`` always yields the same initial states, so evaluations
    of different policies are paired.
    """
    if episodes < 1:
        raise ValueError("need at least one evaluation episode")
    rng = Rng(seed)
    return np.array([rollout(env, policy, normalizer, rng, update_normalizer=False).ret
                     for _ in range(episodes)])


class Stopwatch:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self._t0 = time.perf_counter()

    def ms(self) -> float | None:
        if not self.enabled:
            return None
        return round((time.perf_counter() - self._t0) * 1e3, 3)
