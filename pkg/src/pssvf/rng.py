"""Seeded random streams.

All randomness goes through :class:`Rng`, which wraps numpy's Philox
counter-based bit generator (Salmon et al., 2011).  Philox output is fixed
by the seed and the counter alone, so streams are identical across runs and
platforms.  Gaussian and uniform variates come from numpy's ``Generator``
on top of that bit stream.
"""

from __future__ import annotations

import numpy as np


class Rng:
    """Single-owner random stream; do not share one instance across threads."""

    def __init__(self, seed: int = 0):
        seed = int(seed)
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self._gen = np.random.Generator(np.random.Philox(seed))

    def normal(self, sigma: float, size) -> np.ndarray:
        if sigma < 0:
            raise ValueError("sigma must be non-negative")
        if sigma == 0:
            return np.zeros(size)
        return sigma * self._gen.standard_normal(size)

    def uniform(self, low, high, size=None) -> np.ndarray:
        return self._gen.uniform(low, high, size)

    def integers(self, low: int, high: int | None = None, size=None):
        return self._gen.integers(low, high, size)

    def choice(self, n: int, size: int, p: np.ndarray | None = None) -> np.ndarray:
        return self._gen.choice(n, size=size, replace=True, p=p)

    def spawn(self, n: int) -> list["Rng"]:
        """Derive ``n`` independent child streams (consumes parent draws)."""
        seeds = self._gen.integers(0, 2**63, size=n)
        return [Rng(int(s)) for s in seeds]

    def get_state(self) -> dict:
        """JSON-serialisable snapshot (arrays become lists of ints)."""
        return {"seed": self.seed, "bit_generator": _plain(self._gen.bit_generator.state)}

    @classmethod
    def from_state(cls, state: dict) -> "Rng":
        rng = cls(state["seed"])
        bg = state["bit_generator"]
        if bg.get("bit_generator") != "Philox":
            raise ValueError(f"unsupported bit generator {bg.get('bit_generator')!r}")
        st = bg["state"]
        rng._gen.bit_generator.state = {
            **bg,
            "state": {"counter": np.array(st["counter"], dtype=np.uint64),
                      "key": np.array(st["key"], dtype=np.uint64)},
            "buffer": np.array(bg["buffer"], dtype=np.uint64),
        }
        return rng


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return [int(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def sample_gaussian(rng: Rng, n: int, sigma: float) -> np.ndarray:
    """``n`` i.i.d. draws from N(0, sigma^2)."""
    return rng.normal(sigma, int(n))
