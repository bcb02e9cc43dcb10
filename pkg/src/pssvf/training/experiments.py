"""Experiments built on a trained critic: transfer, cloning, offline improvement, ablations."""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import clone

from .. import autodiff as ad
from ..autodiff import Tensor
from ..critics import FingerprintCritic, VanillaCritic, _Critic
from ..envs.rollout import rollout
from ..mlp import MlpSpec, forward_mlp
from ..optim import AdamState, adam_step
from ..policies import PolicyModel, init_policy, perturb
from ..rng import Rng
from .pssvf import PSSVF

ABLATION_PARAMS = ("n_probing", "recency_exponent", "critic_kind")


def ascend(critic: _Critic, policy: PolicyModel, steps: int, lr: float, callback=None):
    """Adam ascent on the critic's prediction; the critic itself is left untouched.

    Returns ``(policy, predicted)`` where ``predicted[i]`` is the prediction
    before step ``i`` (and the last entry after the final step).
    ``callback(step, policy)`` is called at the same points.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    adam = AdamState(lr, policy.params.size)
    predicted = []
    for step in range(steps + 1):
        predicted.append(float(critic.predict([policy])[0]))
        if callback is not None:
            callback(step, policy)
        if step == steps:
            break
        grad = critic.policy_gradient(policy)
        policy = policy.with_params(adam_step(adam, policy.params, -grad))
    return policy, np.asarray(predicted)


def zero_shot_transfer(critic: FingerprintCritic, new_spec: MlpSpec, steps: int, lr: float,
                       rng: Rng, init: str = "uniform", callback=None):
    """Optimise a fresh ``new_spec`` policy purely through a frozen fingerprint critic."""
    if not isinstance(critic, FingerprintCritic):
        raise TypeError(
            "zero-shot transfer needs a fingerprint critic; a vanilla critic reads raw "
            "parameter vectors and cannot score a different architecture")
    if new_spec.input_dim != critic.n_states_ or new_spec.output_dim != critic.action_dim_:
        raise ValueError(
            f"new policy maps {new_spec.input_dim}->{new_spec.output_dim}, critic expects "
            f"{critic.n_states_}->{critic.action_dim_}")
    return ascend(critic, init_policy(new_spec, rng, init), steps, lr, callback)


def clone_mse(policy_spec: MlpSpec, params, states, actions):
    out = forward_mlp(params, policy_spec, states)
    diff = out - actions
    return ad.mean_all(ad.square(diff)) if isinstance(diff, Tensor) else float(np.mean(diff * diff))


def clone_from_probing_states(states, actions, new_spec: MlpSpec, steps: int, lr: float,
                              rng: Rng, tol: float = 1e-6, init: str = "uniform"):
    """Fit a fresh policy to (state, action) pairs by mean-squared error.

    Stops early once the MSE drops below ``tol``.  Returns
    ``(policy, mse_trace)`` with the MSE before each step taken.
    """
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    actions = np.atleast_2d(np.asarray(actions, dtype=np.float64))
    if states.shape[0] == 0 or states.size == 0:
        raise ValueError("need at least one (state, action) pair")
    if states.shape[0] != actions.shape[0]:
        raise ValueError(f"{states.shape[0]} states but {actions.shape[0]} actions")
    if states.shape[1] != new_spec.input_dim or actions.shape[1] != new_spec.output_dim:
        raise ValueError("pair dimensions do not match the policy architecture")
    if new_spec.head == "tanh":
        low, high = np.asarray(new_spec.action_low), np.asarray(new_spec.action_high)
        if ((actions <= low) | (actions >= high)).any():
            warnings.warn("some target actions lie on or outside the action bounds; "
                          "the fit will saturate", RuntimeWarning, stacklevel=2)
    policy = init_policy(new_spec, rng, init)
    adam = AdamState(lr, new_spec.n_params)
    trace = []
    for _ in range(steps):
        theta = Tensor(policy.params, requires_grad=True)
        loss = clone_mse(new_spec, theta, states, actions)
        trace.append(float(loss.data))
        if trace[-1] < tol:
            break
        (g,) = ad.backward(loss, [theta])
        policy = policy.with_params(adam_step(adam, policy.params, g))
    else:
        trace.append(clone_mse(new_spec, policy.params, states, actions))
    return policy, np.asarray(trace)


def collect_capped_dataset(env, spec: MlpSpec, n_policies: int, cap: float, sigma: float,
                           rng: Rng, max_attempts: int | None = None):
    """Random policies whose batch accuracy is at most ``cap`` (others are discarded).

    Each candidate is a fresh random initialisation perturbed with noise of
    standard deviation ``sigma``.  Returns ``(policies, rewards, accuracies)``.
    """
    max_attempts = max_attempts or 100 * n_policies
    policies, rewards, accs = [], [], []
    attempts = 0
    while len(policies) < n_policies:
        attempts += 1
        if attempts > max_attempts:
            raise RuntimeError(f"only {len(policies)} of {n_policies} policies met the cap "
                               f"after {max_attempts} attempts")
        policy = perturb(init_policy(spec, rng), sigma, rng)
        state = env.reset(rng)
        probs = policy.act(env.observe(state))
        _, reward = env.step(state, probs)
        acc = env.batch_accuracy(state, probs)
        if acc <= cap:
            policies.append(policy)
            rewards.append(reward)
            accs.append(acc)
    return policies, np.asarray(rewards), np.asarray(accs)


def offline_improvement(policies, returns, critic: _Critic, new_spec: MlpSpec, steps: int,
                        lr: float, rng: Rng, env=None, eval_every: int = 10):
    """Fit ``critic`` on a fixed dataset, then ascend a fresh policy through it.

    Returns ``(policy, critic, trace)``; ``trace`` rows hold the step, the
    critic's prediction and, when ``env`` is given, the policy's test
    reward and accuracy.
    """
    critic = clone(critic).fit(policies, returns)
    trace = []

    def record(step, policy):
        if step % eval_every and step != steps:
            return
        row = {"step": step, "predicted": float(critic.predict([policy])[0])}
        if env is not None:
            row.update({f"test_{k}": v for k, v in env.evaluate(policy).items()})
        trace.append(row)

    policy, _ = ascend(critic, init_policy(new_spec, rng), steps, lr, record)
    return policy, critic, trace


def ablation_model(base: PSSVF, param: str, value, seed: int) -> PSSVF:
    """Copy of ``base`` with one ablation setting changed and a fixed seed."""
    if param not in ABLATION_PARAMS:
        raise ValueError(f"can only ablate {ABLATION_PARAMS}, not {param!r}")
    model = clone(base).set_params(random_state=seed)
    critic = model.critic if model.critic is not None else FingerprintCritic()
    if param == "n_probing":
        if not isinstance(critic, FingerprintCritic):
            raise ValueError("n_probing only applies to the fingerprint critic")
        model.set_params(critic=clone(critic).set_params(n_probing=int(value)))
    elif param == "recency_exponent":
        model.set_params(recency_exponent=float(value))
    else:
        shared = {k: v for k, v in critic.get_params().items()
                  if k in VanillaCritic().get_params()}
        if value == "vanilla":
            model.set_params(critic=VanillaCritic(**shared))
        elif value == "fingerprint":
            model.set_params(critic=critic if isinstance(critic, FingerprintCritic)
                             else FingerprintCritic(**shared))
        else:
            raise ValueError(f"critic kind must be 'fingerprint' or 'vanilla', got {value!r}")
    return model


def final_return(metrics, window: int = 3) -> float:
    """Mean evaluation return over the last ``window`` evaluations."""
    tail = metrics[-window:]
    return float(np.mean([m.eval_return_mean for m in tail]))


def ablate(base: PSSVF, env, param: str, values, seeds):
    """One full training run per (value, seed); returns ``{value: [metrics, ...]}``.

    Every setting uses the same list of seeds so runs are paired.
    """
    results = {}
    for value in values:
        runs = []
        for seed in seeds:
            model = ablation_model(base, param, value, seed).fit(env)
            runs.append(model.metrics_)
        results[value] = runs
    return results


def episode_return(env, policy, normalizer, seed: int) -> float:
    return rollout(env, policy, normalizer, Rng(seed)).ret
