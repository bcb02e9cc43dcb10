from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .normalizer import IdentityNormalizer, RunningNormalizer


@dataclass
class EpisodeResult:
    ret: float
    steps: int
    rewards: list = field(default_factory=list)
    observations: list | None = None
    actions: list | None = None


def rollout(env, policy, normalizer: RunningNormalizer | None, rng,
            update_normalizer: bool = False, record: bool = False) -> EpisodeResult:
    """Run one undiscounted episode of ``policy`` in ``env``.

    The policy sees observations normalized with a snapshot of ``normalizer``
    taken at the start of the episode.  With ``update_normalizer`` the raw
    observations are folded into ``normalizer`` once the episode ends.
    """
    if policy.spec.input_dim != env.obs_dim or policy.spec.output_dim != env.action_dim:
        raise ValueError(
            f"policy maps {policy.spec.input_dim}->{policy.spec.output_dim}, "
            f"env needs {env.obs_dim}->{env.action_dim}")
    view = normalizer.frozen() if normalizer is not None else IdentityNormalizer()
    state = env.reset(rng)
    rewards, raw_obs, actions = [], [], []
    for t in range(env.horizon):
        obs = env.observe(state)
        action = policy.act(view.normalize(obs))
        raw_obs.append(obs)
        if record:
            actions.append(action)
        state, r = env.step(state, action, t)
        if not math.isfinite(r):
            raise FloatingPointError("environment produced a non-finite reward")
        rewards.append(r)
    if update_normalizer and normalizer is not None:
        normalizer.update(np.concatenate([np.atleast_2d(o) for o in raw_obs]))
    return EpisodeResult(
        ret=math.fsum(rewards), steps=env.horizon, rewards=rewards,
        observations=raw_obs if record else None, actions=actions if record else None)
