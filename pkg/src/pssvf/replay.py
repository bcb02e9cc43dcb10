"""Replay of (policy parameters, return) pairs with recency-weighted sampling."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .rng import Rng


@dataclass(frozen=True)
class ReplayRecord:
    params: np.ndarray
    ret: float
    insert_index: int


class ReplayBuffer:
    """FIFO buffer of parameter snapshots and their observed returns.

    ``sample`` draws with replacement; a record of age ``x`` (the newest has
    ``x = 1``) is picked with probability proportional to ``x ** -exponent``.
    ``exponent = 0`` is uniform sampling.
    """

    def __init__(self, capacity: int = 10_000, exponent: float = 1.1):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        if exponent < 0:
            raise ValueError("exponent must be >= 0")
        self.capacity = int(capacity)
        self.exponent = float(exponent)
        self._records: deque[ReplayRecord] = deque(maxlen=self.capacity)
        self._next_index = 0

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(list(self._records))

    def store(self, params, ret: float) -> ReplayRecord:
        ret = float(ret)
        if not math.isfinite(ret):
            raise ValueError("return must be finite")
        snapshot = np.array(params, dtype=np.float64).reshape(-1)
        snapshot.setflags(write=False)
        record = ReplayRecord(snapshot, ret, self._next_index)
        self._next_index += 1
        self._records.append(record)
        return record

    def ages(self) -> np.ndarray:
        newest = self._next_index - 1
        return np.array([newest - r.insert_index + 1 for r in self._records], dtype=np.float64)

    def probabilities(self) -> np.ndarray:
        if not self._records:
            raise ValueError("buffer is empty")
        return recency_probabilities(self.ages(), self.exponent)

    def sample(self, batch_size: int, rng: Rng) -> list[ReplayRecord]:
        if not self._records:
            raise ValueError("cannot sample from an empty buffer")
        records = list(self._records)
        p = None if self.exponent == 0 else self.probabilities()
        idx = rng.choice(len(records), int(batch_size), p=p)
        return [records[i] for i in idx]


def recency_probabilities(ages, exponent: float) -> np.ndarray:
    """Normalised ``age ** -exponent`` weights; ages must be >= 1."""
    ages = np.asarray(ages, dtype=np.float64)
    if (ages < 1).any():
        raise ValueError("ages start at 1")
    w = ages ** (-float(exponent))
    return w / w.sum()


def store(buffer: ReplayBuffer, params, ret: float) -> ReplayRecord:
    return buffer.store(params, ret)


def sample(buffer: ReplayBuffer, batch_size: int, rng: Rng) -> list[ReplayRecord]:
    return buffer.sample(batch_size, rng)
