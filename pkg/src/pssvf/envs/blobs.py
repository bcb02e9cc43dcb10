"""Synthetic multi-class classification posed as a one-step episode.

One episode evaluates a classifier policy on a random minibatch of the
training set; the reward is the negative mean cross-entropy.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..rng import Rng

LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class BlobsEnv:
    n_classes: int = 10
    dim: int = 8
    n_train: int = 2000
    n_test: int = 2000
    batch_size: int = 256
    separation: float = 2.0
    noise: float = 1.0
    seed: int = 0

    horizon = 1
    default_head = "softmax"
    action_low = None
    action_high = None

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")
        if min(self.dim, self.n_train, self.n_test, self.batch_size) < 1:
            raise ValueError("dim, n_train, n_test and batch_size must be >= 1")

    @property
    def obs_dim(self) -> int:
        return self.dim

    @property
    def action_dim(self) -> int:
        return self.n_classes

    @cached_property
    def data(self) -> dict:
        rng = Rng(self.seed)
        means = rng.normal(self.separation, (self.n_classes, self.dim))

        def draw(n):
            y = rng.integers(0, self.n_classes, n)
            x = means[y] + rng.normal(self.noise, (n, self.dim))
            return x, y

        x_tr, y_tr = draw(self.n_train)
        x_te, y_te = draw(self.n_test)
        return {"means": means, "x_train": x_tr, "y_train": y_tr, "x_test": x_te, "y_test": y_te}

    def reset(self, rng) -> np.ndarray:
        return rng.integers(0, self.n_train, self.batch_size)

    def observe(self, state) -> np.ndarray:
        return self.data["x_train"][state]

    def step(self, state, action, t: int = 0):
        probs = np.asarray(action, dtype=np.float64)
        labels = self.data["y_train"][state]
        return state, float(_mean_log_likelihood(probs, labels))

    def evaluate(self, policy, normalizer=None, split: str = "test") -> dict:
        """Negative cross-entropy and accuracy of ``policy`` on a full split."""
        x, y = self.data[f"x_{split}"], self.data[f"y_{split}"]
        if normalizer is not None:
            x = normalizer.normalize(x)
        probs = policy.act(x)
        return {"reward": float(_mean_log_likelihood(probs, y)),
                "accuracy": float(np.mean(probs.argmax(axis=1) == y))}

    def batch_accuracy(self, state, action) -> float:
        return float(np.mean(np.asarray(action).argmax(axis=1) == self.data["y_train"][state]))

    def to_dict(self) -> dict:
        return {"id": "blobs", "n_classes": self.n_classes, "dim": self.dim,
                "n_train": self.n_train, "n_test": self.n_test, "batch_size": self.batch_size,
                "separation": self.separation, "noise": self.noise, "seed": self.seed}


def _mean_log_likelihood(probs: np.ndarray, labels: np.ndarray) -> float:
    picked = probs[np.arange(labels.size), labels]
    return float(np.mean(np.log(np.maximum(picked, LOG_FLOOR))))


def blobs_classification_env(n_classes: int = 10, dim: int = 8, n_train: int = 2000,
                             seed: int = 0, **kwargs) -> BlobsEnv:
    return BlobsEnv(n_classes=n_classes, dim=dim, n_train=n_train, seed=seed, **kwargs)
