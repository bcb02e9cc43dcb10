"""Parameter-based start-state value functions.

:class:`FingerprintCritic` scores a policy by querying it in ``K`` learned
probing states and feeding the concatenated answers to an evaluator MLP.
Both the evaluator weights and the probing states are trained to regress
observed returns.  :class:`VanillaCritic` feeds the flat parameter vector to
the evaluator instead and therefore only accepts one architecture.

Both follow the scikit-learn estimator protocol: ``X`` is a sequence of
:class:`~pssvf.policies.PolicyModel` and ``y`` the corresponding returns.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from . import autodiff as ad
from .autodiff import NonFiniteError, Tensor
from .envs.normalizer import RunningNormalizer
from .mlp import MlpSpec, forward_mlp
from .optim import AdamState, adam_step
from .policies import PolicyModel, init_policy
from .rng import Rng


def init_probing_states(n_probing: int, n_states: int, rng: Rng,
                        low: float = 0.0, high: float = 1.0) -> np.ndarray:
    """``(K, n_S)`` matrix of i.i.d. U[low, high) entries."""
    if not low < high:
        raise ValueError(f"need low < high, got [{low}, {high})")
    if n_probing < 1 or n_states < 1:
        raise ValueError("n_probing and n_states must be >= 1")
    return rng.uniform(low, high, (int(n_probing), int(n_states)))


def _as_policies(X) -> list[PolicyModel]:
    if isinstance(X, PolicyModel):
        return [X]
    policies = list(X)
    if not policies:
        raise ValueError("need at least one policy")
    for p in policies:
        if not isinstance(p, PolicyModel):
            raise TypeError(f"expected PolicyModel, got {type(p).__name__}")
    return policies


def _group_by_spec(policies: Sequence[PolicyModel]) -> dict[MlpSpec, list[int]]:
    groups: dict[MlpSpec, list[int]] = {}
    for i, p in enumerate(policies):
        groups.setdefault(p.spec, []).append(i)
    return groups


class _Critic(RegressorMixin, BaseEstimator):
    """Shared training machinery; subclasses define the policy features."""

    def _n_inputs(self, spec: MlpSpec) -> int:
        raise NotImplementedError

    def _init_extra(self, spec: MlpSpec, rng: Rng) -> None:
        pass

    def _check_policy_spec(self, spec: MlpSpec) -> None:
        raise NotImplementedError

    def _features(self, spec: MlpSpec, params, extra):
        raise NotImplementedError

    def _extra_leaf(self):
        return None

    def _apply_extra_grad(self, grad) -> None:
        pass

    # ------------------------------------------------------------------
    def _initialize(self, spec: MlpSpec) -> None:
        self.rng_ = Rng(0 if self.random_state is None else int(self.random_state))
        self.n_states_ = spec.input_dim
        self.action_dim_ = spec.output_dim
        self._init_extra(spec, self.rng_)
        self.evaluator_spec_ = MlpSpec(
            input_dim=self._n_inputs(spec), hidden=tuple(self.hidden), output_dim=1,
            activation=self.activation, head="linear")
        self.evaluator_params_ = init_policy(self.evaluator_spec_, self.rng_).params.copy()
        self.evaluator_adam_ = AdamState(self.learning_rate, self.evaluator_params_.size)
        self.return_stats_ = RunningNormalizer(1)
        self.n_updates_ = 0

    def _ensure_initialized(self, policies: Sequence[PolicyModel]) -> None:
        if not hasattr(self, "evaluator_params_"):
            self._initialize(policies[0].spec)
        for p in policies:
            self._check_policy_spec(p.spec)

    def _target_transform(self) -> tuple[float, float]:
        if not self.standardize_returns or self.return_stats_.count < 2:
            return 0.0, 1.0
        return float(self.return_stats_.mean[0]), float(self.return_stats_.std[0])

    def _raw_predictions(self, policies, phi, extra) -> list[tuple[list[int], object]]:
        out = []
        for spec, idx in _group_by_spec(policies).items():
            params = np.stack([policies[i].params for i in idx])
            feats = self._features(spec, params, extra)
            pred = forward_mlp(phi, self.evaluator_spec_, feats)
            out.append((idx, ad.reshape(pred, (len(idx),))))
        return out

    # public API ---------------------------------------------------------
    def initialize(self, policy_spec: MlpSpec) -> "_Critic":
        """Allocate fresh parameters for policies of ``policy_spec`` without training."""
        self._initialize(policy_spec)
        return self

    def predict(self, X) -> np.ndarray:
        """Predicted return of each policy in ``X``."""
        check_is_fitted(self, "evaluator_params_")
        policies = _as_policies(X)
        for p in policies:
            self._check_policy_spec(p.spec)
        shift, scale = self._target_transform()
        out = np.empty(len(policies))
        for idx, pred in self._raw_predictions(policies, self.evaluator_params_, self._extra_value()):
            out[idx] = pred
        if not np.isfinite(out).all():
            raise NonFiniteError("critic produced a non-finite prediction")
        return shift + scale * out

    def loss_and_grad(self, X, y) -> tuple[float, dict[str, np.ndarray]]:
        """Mean squared error on ``(X, y)`` and its gradients.

        Returns ``(loss, grads)``; ``grads["evaluator"]`` is w.r.t. the
        evaluator parameters and, for the fingerprint critic,
        ``grads["probing_states"]`` w.r.t. the probing states.  The loss is
        measured on standardised targets when ``standardize_returns`` is set.
        """
        policies = _as_policies(X)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if y.size != len(policies):
            raise ValueError(f"{len(policies)} policies but {y.size} returns")
        self._ensure_initialized(policies)
        shift, scale = self._target_transform()
        target = (y - shift) / scale
        phi = Tensor(self.evaluator_params_, requires_grad=True)
        extra = self._extra_leaf()
        total = None
        for idx, pred in self._raw_predictions(policies, phi, extra):
            sq = ad.sum_all(ad.square(pred - target[idx]))
            total = sq if total is None else total + sq
        loss = total * (1.0 / len(policies))
        leaves = [phi] if extra is None else [phi, extra]
        grads = ad.backward(loss, leaves)
        out = {"evaluator": grads[0]}
        if extra is not None:
            out["probing_states"] = grads[1]
        return float(loss.data), out

    def _step(self, policies, y) -> float:
        loss, grads = self.loss_and_grad(policies, y)
        self.evaluator_params_ = adam_step(self.evaluator_adam_, self.evaluator_params_, grads["evaluator"])
        self._apply_extra_grad(grads.get("probing_states"))
        self.n_updates_ += 1
        self.last_loss_ = loss
        return loss

    def partial_fit(self, X, y) -> "_Critic":
        """One Adam step on the batch ``(X, y)``."""
        policies = _as_policies(X)
        self._ensure_initialized(policies)
        if self.standardize_returns:
            self.return_stats_.update(np.asarray(y, dtype=np.float64).reshape(-1, 1))
        self._step(policies, y)
        return self

    def fit(self, X, y) -> "_Critic":
        """Train from scratch for ``max_iter`` minibatch steps (sampling with replacement)."""
        policies = _as_policies(X)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if y.size != len(policies):
            raise ValueError(f"{len(policies)} policies but {y.size} returns")
        if hasattr(self, "evaluator_params_"):
            del self.evaluator_params_
        self._ensure_initialized(policies)
        if self.standardize_returns:
            self.return_stats_.update(y.reshape(-1, 1))
        n = len(policies)
        for _ in range(self.max_iter):
            idx = self.rng_.integers(0, n, min(self.batch_size, n))
            self._step([policies[i] for i in idx], y[idx])
        return self

    def policy_gradient(self, policy: PolicyModel) -> np.ndarray:
        """Gradient of the predicted return w.r.t. the policy parameters."""
        check_is_fitted(self, "evaluator_params_")
        self._check_policy_spec(policy.spec)
        theta = Tensor(policy.params, requires_grad=True)
        feats = self._features(policy.spec, theta, self._extra_value())
        pred = ad.sum_all(forward_mlp(self.evaluator_params_, self.evaluator_spec_, feats))
        (g,) = ad.backward(pred, [theta])
        _, scale = self._target_transform()
        return scale * g

    def _extra_value(self):
        return None


class FingerprintCritic(_Critic):
    """Value function over policies represented by their probing actions.

    Parameters
    ----------
    n_probing : int
        Number of learned probing states ``K``.
    hidden, activation :
        Evaluator MLP hidden sizes and activation.
    probing_low, probing_high : float
        Probing states start i.i.d. uniform in ``[low, high)``.
    learning_rate : float
        Adam step size shared by the evaluator and the probing states.
    batch_size, max_iter : int
        Only used by :meth:`fit`; online training calls :meth:`partial_fit`.
    standardize_returns : bool
        Regress running-standardised returns instead of raw ones.
    random_state : int or None
        Seed for probing-state and evaluator initialisation.
    """

    def __init__(self, n_probing=20, hidden=(64, 64), activation="relu", probing_low=0.0,
                 probing_high=1.0, learning_rate=5e-3, batch_size=16, max_iter=200,
                 standardize_returns=False, random_state=None):
        self.n_probing = n_probing
        self.hidden = hidden
        self.activation = activation
        self.probing_low = probing_low
        self.probing_high = probing_high
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_iter = max_iter
        self.standardize_returns = standardize_returns
        self.random_state = random_state

    def _n_inputs(self, spec):
        return self.n_probing * spec.output_dim

    def _init_extra(self, spec, rng):
        self.probing_states_ = init_probing_states(
            self.n_probing, spec.input_dim, rng, self.probing_low, self.probing_high)
        self.probing_adam_ = AdamState(self.learning_rate, self.probing_states_.size)

    def _check_policy_spec(self, spec):
        if spec.input_dim != self.n_states_ or spec.output_dim != self.action_dim_:
            raise ValueError(
                f"policy maps {spec.input_dim}->{spec.output_dim} but the critic was built "
                f"for {self.n_states_}->{self.action_dim_}")

    def _features(self, spec, params, states):
        acts = forward_mlp(params, spec, states)
        lead = tuple(acts.shape[:-2]) or (1,)
        return ad.reshape(acts, lead + (self.n_probing * spec.output_dim,))

    def _extra_leaf(self):
        return Tensor(self.probing_states_, requires_grad=True)

    def _extra_value(self):
        return self.probing_states_

    def _apply_extra_grad(self, grad):
        self.probing_states_ = adam_step(self.probing_adam_, self.probing_states_, grad)

    def probing_actions(self, policy: PolicyModel) -> np.ndarray:
        """Concatenated policy outputs ``[pi(s_1), ..., pi(s_K)]``."""
        check_is_fitted(self, "probing_states_")
        self._check_policy_spec(policy.spec)
        return policy.act(self.probing_states_).reshape(-1)


class VanillaCritic(_Critic):
    """Value function over the flattened policy parameters.

    Tied to the architecture it was first fitted on; other architectures are
    rejected because their parameter vectors have a different meaning.
    """

    def __init__(self, hidden=(64, 64), activation="relu", learning_rate=5e-3, batch_size=16,
                 max_iter=200, standardize_returns=False, random_state=None):
        self.hidden = hidden
        self.activation = activation
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_iter = max_iter
        self.standardize_returns = standardize_returns
        self.random_state = random_state

    def _n_inputs(self, spec):
        return spec.n_params

    def _init_extra(self, spec, rng):
        self.policy_spec_ = spec

    def _check_policy_spec(self, spec):
        if spec != self.policy_spec_:
            raise ValueError(
                "vanilla critic only evaluates the architecture it was trained on "
                f"({self.policy_spec_.n_params} parameters); got {spec.n_params} parameters")

    def _features(self, spec, params, extra):
        return params if params.ndim == 2 else ad.reshape(params, (1, params.shape[0]))


def make_critic(kind: str, **params) -> _Critic:
    if kind == "fingerprint":
        return FingerprintCritic(**params)
    if kind == "vanilla":
        return VanillaCritic(**params)
    raise ValueError(f"unknown critic kind {kind!r}; expected 'fingerprint' or 'vanilla'")


# functional aliases -------------------------------------------------------

def probing_actions(critic: FingerprintCritic, policy: PolicyModel) -> np.ndarray:
    return critic.probing_actions(policy)


def predict(critic: _Critic, policy: PolicyModel) -> float:
    return float(critic.predict([policy])[0])


def critic_loss_and_grad(critic: _Critic, batch) -> tuple[float, dict[str, np.ndarray]]:
    """``batch`` is a non-empty sequence of ``(PolicyModel, return)`` pairs."""
    batch = list(batch)
    if not batch:
        raise ValueError("batch must be non-empty")
    policies, returns = zip(*batch)
    return critic.loss_and_grad(list(policies), list(returns))


def policy_gradient(critic: _Critic, policy: PolicyModel) -> np.ndarray:
    return critic.policy_gradient(policy)
