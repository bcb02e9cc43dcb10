"""Policy parameterisations and parameter-space perturbation."""

from __future__ import annotations

import numpy as np

from .mlp import MlpSpec, apply_layers, forward_mlp, unpack
from .rng import Rng

INIT_SCHEMES = ("uniform", "zeros")


class PolicyModel:
    """An architecture plus a flat parameter vector.

    The parameter array is copied on construction and marked read-only, so a
    policy never changes after it is built; updates produce new policies.
    """

    __slots__ = ("spec", "params", "_layers")

    def __init__(self, spec: MlpSpec, params):
        params = np.array(params, dtype=np.float64).reshape(-1)
        if params.size != spec.n_params:
            raise ValueError(f"{spec} needs {spec.n_params} parameters, got {params.size}")
        params.setflags(write=False)
        self.spec = spec
        self.params = params
        self._layers = None

    def act(self, obs) -> np.ndarray:
        """Action (or class probabilities) for one observation or a batch."""
        obs = np.asarray(obs, dtype=np.float64)
        if self._layers is None:
            self._layers = unpack(self.params, self.spec)
        out = apply_layers(self._layers, self.spec, obs)
        if not np.isfinite(out).all():
            raise FloatingPointError("policy produced a non-finite action")
        return out

    def with_params(self, params) -> "PolicyModel":
        return PolicyModel(self.spec, params)

    def __eq__(self, other) -> bool:
        return (isinstance(other, PolicyModel) and self.spec == other.spec
                and np.array_equal(self.params, other.params))

    def __hash__(self):
        return hash((self.spec, self.params.tobytes()))

    def __repr__(self) -> str:
        return f"PolicyModel({self.spec}, n_params={self.params.size})"


def act(policy: PolicyModel, obs) -> np.ndarray:
    return policy.act(obs)


def init_policy(spec: MlpSpec, rng: Rng, scheme: str = "uniform") -> PolicyModel:
    """Fresh policy.

    ``"uniform"`` draws every weight and bias of a layer from
    U(-1/sqrt(fan_in), 1/sqrt(fan_in)), the default initialisation of torch
    linear layers.  ``"zeros"`` gives all-zero parameters.
    """
    if scheme == "zeros":
        return PolicyModel(spec, np.zeros(spec.n_params))
    if scheme != "uniform":
        raise ValueError(f"unknown init scheme {scheme!r}; expected one of {INIT_SCHEMES}")
    chunks = []
    for _, fan_out, fan_in in spec.manifest():
        bound = 1.0 / np.sqrt(fan_in)
        chunks.append(rng.uniform(-bound, bound, fan_out * fan_in + fan_out))
    return PolicyModel(spec, np.concatenate(chunks))


def perturb(policy: PolicyModel, sigma: float, rng: Rng) -> PolicyModel:
    """Copy of ``policy`` with parameters ``theta + eps``, ``eps ~ N(0, sigma^2 I)``."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    return policy.with_params(policy.params + rng.normal(sigma, policy.params.size))


def flatten(policy: PolicyModel) -> np.ndarray:
    return policy.params.copy()


def unflatten(spec: MlpSpec, vec) -> PolicyModel:
    vec = np.asarray(vec, dtype=np.float64)
    if vec.ndim != 1 or vec.size != spec.n_params:
        raise ValueError(f"expected a vector of {spec.n_params} parameters, got shape {vec.shape}")
    return PolicyModel(spec, vec)


def linear_spec(input_dim: int, output_dim: int, head: str = "tanh", **kw) -> MlpSpec:
    return MlpSpec(input_dim=input_dim, hidden=(), output_dim=output_dim, head=head, **kw)


__all__ = [
    "PolicyModel", "act", "init_policy", "perturb", "flatten", "unflatten",
    "linear_spec", "forward_mlp", "MlpSpec",
]
