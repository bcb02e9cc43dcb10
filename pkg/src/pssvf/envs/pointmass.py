from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PointMassEnv:
    """2-D point mass steered to a goal by bounded acceleration.

    State is ``(px, py, vx, vy)``.  One step applies the clipped action with
    semi-implicit Euler: ``v' = v + dt * (a - friction * v)``, ``p' = p + dt * v'``;
    the reward is ``-||p' - goal||``.  Episodes start at rest, uniformly in
    the start box.
    """

    horizon: int = 50
    dt: float = 0.1
    friction: float = 0.0
    goal: tuple = (0.0, 0.0)
    start_low: tuple = (-1.0, -1.0)
    start_high: tuple = (1.0, 1.0)
    max_action: float = 1.0
    reward_offset: float = 0.0

    obs_dim = 4
    action_dim = 2
    default_head = "tanh"

    def __post_init__(self):
        for name in ("goal", "start_low", "start_high"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if self.horizon < 1 or self.dt <= 0 or self.max_action <= 0:
            raise ValueError("horizon, dt and max_action must be positive")
        if not all(lo <= hi for lo, hi in zip(self.start_low, self.start_high)):
            raise ValueError("start_low must be <= start_high")

    @property
    def action_low(self) -> tuple:
        return (-self.max_action,) * 2

    @property
    def action_high(self) -> tuple:
        return (self.max_action,) * 2

    def reset(self, rng) -> np.ndarray:
        pos = rng.uniform(np.asarray(self.start_low), np.asarray(self.start_high))
        return np.concatenate([pos, np.zeros(2)])

    def observe(self, state) -> np.ndarray:
        return state

    def step(self, state, action, t: int = 0):
        a = np.clip(np.asarray(action, dtype=np.float64).reshape(2), -self.max_action, self.max_action)
        pos, vel = state[:2], state[2:]
        vel = vel + self.dt * (a - self.friction * vel)
        pos = pos + self.dt * vel
        nxt = np.concatenate([pos, vel])
        if not np.isfinite(nxt).all():
            raise FloatingPointError("point mass state diverged")
        return nxt, self.reward_offset - float(np.linalg.norm(pos - np.asarray(self.goal)))

    def to_dict(self) -> dict:
        return {"id": "pointmass", "horizon": self.horizon, "dt": self.dt,
                "friction": self.friction, "goal": list(self.goal),
                "start_low": list(self.start_low), "start_high": list(self.start_high),
                "max_action": self.max_action, "reward_offset": self.reward_offset}


def pointmass_env(**kwargs) -> PointMassEnv:
    return PointMassEnv(**kwargs)
