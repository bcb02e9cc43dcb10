"""Augmented random search (antithetic directions, elite selection)."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ..envs.normalizer import RunningNormalizer
from ..envs.rollout import rollout
from ..policies import init_policy
from ..rng import Rng
from .common import MetricsRow, Stopwatch, evaluate_policy, policy_spec_for

EVAL_SEED_OFFSET = 1_000_003


def ars_update(params, deltas, r_plus, r_minus, step_size: float, n_elite: int):
    """One ARS step; returns ``(new_params, applied)``.

    Directions are ranked by ``max(r+, r-)`` and the best ``n_elite`` are
    kept.  The step is scaled by the standard deviation of those ``2 * b``
    returns; when that is zero the update is skipped.
    """
    deltas = np.asarray(deltas, dtype=np.float64)
    r_plus, r_minus = np.asarray(r_plus, dtype=np.float64), np.asarray(r_minus, dtype=np.float64)
    if not 1 <= n_elite <= len(deltas):
        raise ValueError("need 1 <= n_elite <= n_directions")
    order = np.argsort(-np.maximum(r_plus, r_minus), kind="stable")[:n_elite]
    sigma_r = np.concatenate([r_plus[order], r_minus[order]]).std()
    if sigma_r == 0:
        return np.array(params, dtype=np.float64), False
    step = (r_plus[order] - r_minus[order]) @ deltas[order]
    return params + step_size / (n_elite * sigma_r) * step, True


class ARS(BaseEstimator):
    """Derivative-free baseline over the same policy classes as :class:`PSSVF`."""

    def __init__(self, policy_hidden=(), policy_activation="tanh", policy_head=None,
                 policy_init="zeros", n_iterations=100, step_size=0.01, n_directions=8,
                 n_elite=4, noise=0.05, normalize_obs=True, eval_every=10_000,
                 eval_episodes=10, record_wall_time=False, random_state=0):
        self.policy_hidden = policy_hidden
        self.policy_activation = policy_activation
        self.policy_head = policy_head
        self.policy_init = policy_init
        self.n_iterations = n_iterations
        self.step_size = step_size
        self.n_directions = n_directions
        self.n_elite = n_elite
        self.noise = noise
        self.normalize_obs = normalize_obs
        self.eval_every = eval_every
        self.eval_episodes = eval_episodes
        self.record_wall_time = record_wall_time
        self.random_state = random_state

    def fit(self, env, y=None):
        if not 1 <= self.n_elite <= self.n_directions:
            raise ValueError("need n_directions >= n_elite >= 1")
        master = Rng(self.random_state)
        init_rng, dir_rng, env_rng = master.spawn(3)
        self.env_ = env
        self.eval_seed_ = int(self.random_state) + EVAL_SEED_OFFSET
        spec = policy_spec_for(env, self.policy_hidden, self.policy_activation, self.policy_head)
        self.policy_ = init_policy(spec, init_rng, self.policy_init)
        self.normalizer_ = RunningNormalizer(env.obs_dim) if self.normalize_obs else None
        self.metrics_: list[MetricsRow] = []
        self.env_steps_ = 0
        self.n_skipped_ = 0
        clock = Stopwatch(self.record_wall_time)
        next_eval = 0
        for it in range(self.n_iterations + 1):
            if self.env_steps_ >= next_eval or it == self.n_iterations:
                rets = evaluate_policy(env, self.policy_, self.normalizer_, self.eval_seed_, self.eval_episodes)
                self.metrics_.append(MetricsRow(it, self.env_steps_, float(rets.mean()),
                                                float(rets.std()), None, clock.ms()))
                while next_eval <= self.env_steps_:
                    next_eval += self.eval_every
            if it == self.n_iterations:
                break
            self._iteration(dir_rng, env_rng)
        return self

    def _iteration(self, dir_rng, env_rng):
        theta = self.policy_.params
        deltas = dir_rng.normal(1.0, (self.n_directions, theta.size))
        snapshot = self.normalizer_.copy() if self.normalizer_ is not None else None
        r_plus, r_minus, seen = [], [], []
        for d in deltas:
            # both signs of a direction start from the same initial state
            pair_seed = int(env_rng.integers(0, 2**63))
            for sign, bucket in ((1.0, r_plus), (-1.0, r_minus)):
                res = rollout(self.env_, self.policy_.with_params(theta + sign * self.noise * d),
                              snapshot, Rng(pair_seed), record=True)
                bucket.append(res.ret)
                seen.extend(res.observations)
                self.env_steps_ += res.steps
        if self.normalizer_ is not None:
            self.normalizer_.update(np.concatenate([np.atleast_2d(o) for o in seen]))
        new, applied = ars_update(theta, deltas, r_plus, r_minus, self.step_size, self.n_elite)
        if not applied:
            self.n_skipped_ += 1
        self.policy_ = self.policy_.with_params(new)


def train_ars(env, **params):
    model = ARS(**params).fit(env)
    return model.policy_, model.metrics_
