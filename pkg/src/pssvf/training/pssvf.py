"""Actor-critic with a parameter-based start-state value function."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, clone

from ..autodiff import NonFiniteError
from ..critics import FingerprintCritic, _Critic
from ..envs.normalizer import RunningNormalizer
from ..envs.rollout import rollout
from ..optim import AdamState, adam_step
from ..policies import PolicyModel, init_policy, perturb
from ..replay import ReplayBuffer
from ..rng import Rng
from .common import MetricsRow, Stopwatch, TrainingDivergedError, evaluate_policy, policy_spec_for

EVAL_SEED_OFFSET = 1_000_003


class PSSVF(BaseEstimator):
    """Learn a policy by gradient ascent through a learned value function.

    Each episode perturbs the current parameters with Gaussian noise, runs
    the perturbed policy once, stores ``(theta', return)``, then performs
    ``critic_updates`` critic steps on replayed batches followed by
    ``actor_updates`` Adam ascent steps on the critic's prediction for the
    unperturbed policy.

    ``fit(env)`` sets ``policy_``, ``critic_``, ``normalizer_``, ``buffer_``,
    ``metrics_`` (list of :class:`MetricsRow`) and ``best_eval_return_``.
    Evaluation every ``eval_every`` environment steps runs the unperturbed
    policy for ``eval_episodes`` episodes on a fixed set of start states.
    """

    def __init__(self, critic=None, policy_hidden=(64, 64), policy_activation="tanh",
                 policy_head=None, policy_init="uniform", n_episodes=1000, sigma=0.05,
                 actor_lr=2e-6, batch_size=16, buffer_size=10_000, recency_exponent=1.1,
                 critic_updates=5, actor_updates=5, eval_every=10_000, eval_episodes=10,
                 normalize_obs=True, record_wall_time=False, trace_events=False, random_state=0):
        self.critic = critic
        self.policy_hidden = policy_hidden
        self.policy_activation = policy_activation
        self.policy_head = policy_head
        self.policy_init = policy_init
        self.n_episodes = n_episodes
        self.sigma = sigma
        self.actor_lr = actor_lr
        self.batch_size = batch_size
        self.buffer_size = buffer_size
        self.recency_exponent = recency_exponent
        self.critic_updates = critic_updates
        self.actor_updates = actor_updates
        self.eval_every = eval_every
        self.eval_episodes = eval_episodes
        self.normalize_obs = normalize_obs
        self.record_wall_time = record_wall_time
        self.trace_events = trace_events
        self.random_state = random_state

    def _validate(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        for name in ("n_episodes", "batch_size", "buffer_size", "eval_every", "eval_episodes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("critic_updates", "actor_updates"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.actor_lr < 0:
            raise ValueError("actor_lr must be >= 0")

    def _setup(self, env):
        master = Rng(self.random_state)
        self.init_rng_, self.noise_rng_, self.env_rng_, self.replay_rng_ = master.spawn(4)
        self.eval_seed_ = int(self.random_state) + EVAL_SEED_OFFSET
        self.env_ = env
        self.policy_spec_ = policy_spec_for(env, self.policy_hidden, self.policy_activation, self.policy_head)
        self.policy_ = init_policy(self.policy_spec_, self.init_rng_, self.policy_init)
        critic = FingerprintCritic() if self.critic is None else self.critic
        self.critic_: _Critic = clone(critic)
        if self.critic_.random_state is None:
            self.critic_.set_params(random_state=int(master.integers(0, 2**31)))
        self.normalizer_ = RunningNormalizer(env.obs_dim) if self.normalize_obs else None
        self.buffer_ = ReplayBuffer(self.buffer_size, self.recency_exponent)
        self.actor_adam_ = AdamState(self.actor_lr, self.policy_spec_.n_params)
        self.metrics_: list[MetricsRow] = []
        self.events_: list[tuple[int, str]] = []
        self.episode_ = 0
        self.env_steps_ = 0
        self.best_eval_return_ = -np.inf
        self.best_policy_ = self.policy_
        self.train_returns_: list[float] = []
        self._next_eval = 0

    def _event(self, name: str):
        if self.trace_events:
            self.events_.append((self.episode_, name))

    def evaluate(self, policy: PolicyModel | None = None, episodes: int | None = None) -> np.ndarray:
        """Returns of ``policy`` (default: the current one) on the fixed evaluation starts."""
        return evaluate_policy(self.env_, self.policy_ if policy is None else policy,
                               self.normalizer_, self.eval_seed_,
                               self.eval_episodes if episodes is None else episodes)

    def _maybe_eval(self, clock: Stopwatch, force: bool = False):
        if self.env_steps_ < self._next_eval and not force:
            return
        while self._next_eval <= self.env_steps_:
            self._next_eval += self.eval_every
        rets = self.evaluate()
        mean = float(rets.mean())
        if mean > self.best_eval_return_:
            self.best_eval_return_ = mean
            self.best_policy_ = self.policy_
        loss = getattr(self.critic_, "last_loss_", None)
        self.metrics_.append(MetricsRow(self.episode_, self.env_steps_, mean, float(rets.std()),
                                        None if loss is None else float(loss), clock.ms()))

    def fit(self, env, y=None):
        self._validate()
        self._setup(env)
        return self.resume(env)

    def resume(self, env, n_episodes: int | None = None):
        """Continue training the fitted state for ``n_episodes`` more episodes."""
        clock = Stopwatch(self.record_wall_time)
        stop = self.episode_ + (self.n_episodes if n_episodes is None else n_episodes)
        try:
            self._maybe_eval(clock, force=not self.metrics_)
            while self.episode_ < stop:
                self._train_episode()
                self._maybe_eval(clock)
        except (NonFiniteError, FloatingPointError) as exc:
            raise TrainingDivergedError(
                f"training diverged at episode {self.episode_} "
                f"(env steps {self.env_steps_}): {exc}") from exc
        if self.metrics_[-1].env_steps != self.env_steps_:
            self._maybe_eval(clock, force=True)
        return self

    def _train_episode(self):
        self._event("perturb")
        candidate = perturb(self.policy_, self.sigma, self.noise_rng_)
        self._event("rollout")
        result = rollout(self.env_, candidate, self.normalizer_, self.env_rng_, update_normalizer=True)
        self.train_returns_.append(result.ret)
        self.env_steps_ += result.steps
        self._event("store")
        self.buffer_.store(candidate.params, result.ret)
        for _ in range(self.critic_updates):
            self._event("critic")
            batch = self.buffer_.sample(self.batch_size, self.replay_rng_)
            self.critic_.partial_fit([candidate.with_params(r.params) for r in batch],
                                     [r.ret for r in batch])
        for _ in range(self.actor_updates):
            self._event("actor")
            grad = self.critic_.policy_gradient(self.policy_)
            self.policy_ = self.policy_.with_params(
                adam_step(self.actor_adam_, self.policy_.params, -grad))
        self.episode_ += 1


def train_pssvf(env, **params):
    """Functional entry point: returns ``(policy, critic, metrics)``."""
    model = PSSVF(**params).fit(env)
    return model.policy_, model.critic_, model.metrics_
