"""Fully connected networks stored as one flat parameter vector.

Layout is layer-major; within a layer the ``(out, in)`` weight matrix comes
first (row-major), followed by the ``out`` biases.  A layer computes
``x @ W.T + b``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import NonFiniteError, Tensor

ACTIVATIONS = ("tanh", "relu")
HEADS = ("tanh", "linear", "softmax")


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden: tuple = (64, 64)
    output_dim: int = 1
    activation: str = "tanh"
    head: str = "tanh"
    action_low: tuple | None = None
    action_high: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.input_dim < 1 or self.output_dim < 1 or any(h < 1 for h in self.hidden):
            raise ValueError(f"all layer sizes must be >= 1: {self}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}, got {self.head!r}")
        if self.head == "tanh":
            low = (-1.0,) * self.output_dim if self.action_low is None else self.action_low
            high = (1.0,) * self.output_dim if self.action_high is None else self.action_high
            low = tuple(float(v) for v in np.broadcast_to(low, self.output_dim))
            high = tuple(float(v) for v in np.broadcast_to(high, self.output_dim))
            if not all(lo < hi for lo, hi in zip(low, high)):
                raise ValueError("action_low must be < action_high elementwise")
            if not np.isfinite(low + high).all():
                raise ValueError("action bounds must be finite")
            object.__setattr__(self, "action_low", low)
            object.__setattr__(self, "action_high", high)
        else:
            object.__setattr__(self, "action_low", None)
            object.__setattr__(self, "action_high", None)

    @property
    def layer_sizes(self) -> list[int]:
        return [self.input_dim, *self.hidden, self.output_dim]

    @property
    def n_params(self) -> int:
        sizes = self.layer_sizes
        return sum(o * i + o for i, o in zip(sizes[:-1], sizes[1:]))

    def manifest(self) -> list[tuple[int, int, int]]:
        """``(offset, fan_out, fan_in)`` per layer; bias follows the weights."""
        out, off = [], 0
        sizes = self.layer_sizes
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            out.append((off, fan_out, fan_in))
            off += fan_out * fan_in + fan_out
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        for key in ("action_low", "action_high"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MlpSpec":
        d = dict(d)
        for key in ("action_low", "action_high"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)


def unpack(params, spec: MlpSpec) -> list:
    """Split flat (or stacked ``(..., n_params)``) params into ``(W, b)`` pairs."""
    if params.shape[-1] != spec.n_params:
        raise ValueError(f"expected {spec.n_params} parameters, got {params.shape[-1]}")
    lead = tuple(params.shape[:-1])
    layers = []
    for off, fan_out, fan_in in spec.manifest():
        n_w = fan_out * fan_in
        w = ad.reshape(params[..., off:off + n_w], lead + (fan_out, fan_in))
        b = params[..., off + n_w:off + n_w + fan_out]
        layers.append((w, b))
    return layers


def apply_layers(layers: Sequence, spec: MlpSpec, x):
    """Run unpacked layers on ``x`` of shape ``(in,)`` or ``(n, in)``.

    Works on ndarrays and Tensors alike.  With stacked parameters of lead
    shape ``L`` the result has shape ``L + x.shape[:-1] + (out,)``.
    """
    if x.shape[-1] != spec.input_dim:
        raise ValueError(f"input has {x.shape[-1]} features, network expects {spec.input_dim}")
    if x.ndim > 2:
        raise ValueError("input must be 1-D or 2-D")
    single = x.ndim == 1
    h = ad.reshape(x, (1, spec.input_dim)) if single else x
    lead = tuple(layers[0][0].shape[:-2])
    act = ad.tanh if spec.activation == "tanh" else ad.relu
    last = len(layers) - 1
    for i, (w, b) in enumerate(layers):
        z = h @ ad.swapaxes(w, -1, -2)
        b = ad.reshape(b, lead + (1, b.shape[-1]))
        h = z + b
        if i < last:
            h = act(h)
    if spec.head == "tanh":
        low, high = np.asarray(spec.action_low), np.asarray(spec.action_high)
        h = ad.tanh(h) * (0.5 * (high - low)) + 0.5 * (high + low)
        if not isinstance(h, Tensor):
            # rounding in mid + half * tanh can overshoot a bound by one ulp
            h = np.clip(h, low, high)
    elif spec.head == "softmax":
        h = ad.softmax(h)
    if single:
        h = ad.reshape(h, lead + (spec.output_dim,))
    return h


def forward_mlp(params, spec: MlpSpec, x):
    """Evaluate the network; differentiable when ``params`` or ``x`` is a Tensor."""
    if isinstance(x, Tensor) and not isinstance(params, Tensor):
        params = Tensor(params)
    elif isinstance(params, Tensor) and not isinstance(x, Tensor):
        x = Tensor(x)
    elif not isinstance(params, Tensor):
        params = np.asarray(params, dtype=np.float64)
        x = np.asarray(x, dtype=np.float64)
    out = apply_layers(unpack(params, spec), spec, x)
    if not isinstance(out, Tensor) and not np.isfinite(out).all():
        raise NonFiniteError("network produced a non-finite output")
    return out
