from __future__ import annotations

import numpy as np

STD_EPS = 1e-8


class RunningNormalizer:
    """Per-dimension running mean/variance (Welford) for observations.

    Until two observations have been seen the variance falls back to 1 and,
    with no observations at all, the mean to 0, so the cold-start transform
    is the identity.
    """

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.count = 0
        self.mean = np.zeros(self.dim)
        self.m2 = np.zeros(self.dim)

    @property
    def var(self) -> np.ndarray:
        if self.count < 2:
            return np.ones(self.dim)
        return self.m2 / (self.count - 1)

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.var + STD_EPS)

    def update(self, obs) -> None:
        obs = np.asarray(obs, dtype=np.float64)
        for row in obs.reshape(-1, self.dim):
            self.count += 1
            delta = row - self.mean
            self.mean = self.mean + delta / self.count
            self.m2 = self.m2 + delta * (row - self.mean)

    def normalize(self, obs) -> np.ndarray:
        return (np.asarray(obs, dtype=np.float64) - self.mean) / self.std

    def frozen(self) -> "FrozenNormalizer":
        return FrozenNormalizer(self.mean.copy(), self.std)

    def copy(self) -> "RunningNormalizer":
        out = RunningNormalizer(self.dim)
        out.count, out.mean, out.m2 = self.count, self.mean.copy(), self.m2.copy()
        return out

    def get_state(self) -> dict:
        return {"count": self.count, "mean": self.mean.tolist(), "m2": self.m2.tolist()}

    @classmethod
    def from_state(cls, state: dict) -> "RunningNormalizer":
        mean = np.asarray(state["mean"], dtype=np.float64)
        out = cls(mean.size)
        out.count = int(state["count"])
        out.mean = mean
        out.m2 = np.asarray(state["m2"], dtype=np.float64)
        if out.m2.shape != mean.shape or out.count < 0:
            raise ValueError("inconsistent normalizer state")
        return out

    def __eq__(self, other) -> bool:
        return (isinstance(other, RunningNormalizer) and self.count == other.count
                and np.array_equal(self.mean, other.mean) and np.array_equal(self.m2, other.m2))


class FrozenNormalizer:
    """Read-only snapshot used inside one rollout."""

    __slots__ = ("mean", "std")

    def __init__(self, mean: np.ndarray, std: np.ndarray):
        self.mean, self.std = mean, std

    def normalize(self, obs) -> np.ndarray:
        return (np.asarray(obs, dtype=np.float64) - self.mean) / self.std


class IdentityNormalizer:
    def normalize(self, obs) -> np.ndarray:
        return np.asarray(obs, dtype=np.float64)


def normalize(normalizer: RunningNormalizer, obs) -> np.ndarray:
    return normalizer.normalize(obs)


def update(normalizer: RunningNormalizer, obs) -> None:
    normalizer.update(obs)
