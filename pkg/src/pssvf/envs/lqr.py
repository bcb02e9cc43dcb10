"""Finite-horizon discrete-time LQR task and its Riccati solution."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


def _mat(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=np.float64))


def _as_tuple(m) -> tuple:
    return tuple(tuple(float(v) for v in row) for row in _mat(m))


@dataclass(frozen=True)
class LQREnv:
    """``x' = A x + B u`` with reward ``-(x'Qx + u'Ru)`` per step.

    The last step also pays the terminal cost ``x_T' Q x_T``.  Initial states
    are uniform in ``[init_low, init_high]^n``.
    """

    A: tuple = ((1.0, 0.1), (0.0, 1.0))
    B: tuple = ((0.0,), (0.1,))
    Q: tuple = ((1.0, 0.0), (0.0, 1.0))
    R: tuple = ((1.0,),)
    horizon: int = 25
    init_low: float = -1.0
    init_high: float = 1.0
    reward_offset: float = 0.0

    def __post_init__(self):
        for name in ("A", "B", "Q", "R"):
            object.__setattr__(self, name, _as_tuple(getattr(self, name)))
        A, B, Q, R = self.matrices()
        n, m = B.shape
        if A.shape != (n, n) or Q.shape != (n, n) or R.shape != (m, m):
            raise ValueError(f"inconsistent LQR shapes A{A.shape} B{B.shape} Q{Q.shape} R{R.shape}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not self.init_low < self.init_high:
            raise ValueError("init_low must be < init_high")
        if not np.allclose(Q, Q.T) or np.linalg.eigvalsh(Q).min() < -1e-12:
            raise ValueError("Q must be symmetric positive semi-definite")
        if not np.allclose(R, R.T) or np.linalg.eigvalsh(R).min() <= 0:
            raise ValueError("R must be symmetric positive definite")

    def matrices(self):
        return self._matrices

    @cached_property
    def _matrices(self):
        return _mat(self.A), _mat(self.B), _mat(self.Q), _mat(self.R)

    @property
    def obs_dim(self) -> int:
        return len(self.A)

    @property
    def action_dim(self) -> int:
        return len(self.B[0])

    action_low = None
    action_high = None
    default_head = "linear"

    def reset(self, rng) -> np.ndarray:
        return rng.uniform(self.init_low, self.init_high, self.obs_dim)

    def observe(self, state) -> np.ndarray:
        return state

    def step(self, state, action, t: int):
        A, B, Q, R = self.matrices()
        u = np.asarray(action, dtype=np.float64).reshape(self.action_dim)
        with np.errstate(over="ignore", invalid="ignore"):
            cost = state @ Q @ state + u @ R @ u
            nxt = A @ state + B @ u
            if t == self.horizon - 1:
                cost += nxt @ Q @ nxt
        if not np.isfinite(nxt).all():
            raise FloatingPointError("LQR state diverged")
        return nxt, self.reward_offset - float(cost)

    def to_dict(self) -> dict:
        return {"id": "lqr", "A": [list(r) for r in self.A], "B": [list(r) for r in self.B],
                "Q": [list(r) for r in self.Q], "R": [list(r) for r in self.R],
                "horizon": self.horizon, "init_low": self.init_low,
                "init_high": self.init_high, "reward_offset": self.reward_offset}


def lqr_env(**kwargs) -> LQREnv:
    return LQREnv(**kwargs)


@dataclass
class LQRSolution:
    gains: np.ndarray  # (T, m, n); optimal control is u_t = -gains[t] @ x_t
    cost_to_go: np.ndarray  # (T + 1, n, n)
    expected_return: float

    def action(self, x, t: int) -> np.ndarray:
        return -self.gains[t] @ x


def lqr_optimal(env: LQREnv) -> LQRSolution:
    """Backward Riccati recursion from ``P_T = Q``.

    ``expected_return`` is the closed form ``-(tr(P_0 S) + mu' P_0 mu)`` for
    the uniform initial-state distribution with mean ``mu`` and covariance
    ``S``; :func:`simulate_optimal` gives the Monte Carlo counterpart.
    """
    A, B, Q, R = env.matrices()
    T, n = env.horizon, env.obs_dim
    P = np.empty((T + 1, n, n))
    K = np.empty((T, env.action_dim, n))
    P[T] = Q
    for t in range(T - 1, -1, -1):
        Pn = P[t + 1]
        K[t] = np.linalg.solve(R + B.T @ Pn @ B, B.T @ Pn @ A)
        P[t] = Q + A.T @ Pn @ (A - B @ K[t])
        P[t] = 0.5 * (P[t] + P[t].T)
    mu = np.full(n, 0.5 * (env.init_low + env.init_high))
    cov = np.eye(n) * (env.init_high - env.init_low) ** 2 / 12.0
    expected = -(np.trace(P[0] @ cov) + mu @ P[0] @ mu) + env.reward_offset * T
    return LQRSolution(K, P, float(expected))


def simulate_optimal(env: LQREnv, solution: LQRSolution, x0s) -> np.ndarray:
    """Return of the time-varying optimal controller from each initial state."""
    out = []
    for x0 in np.atleast_2d(x0s):
        x, total = np.asarray(x0, dtype=np.float64), 0.0
        for t in range(env.horizon):
            x, r = env.step(x, solution.action(x, t), t)
            total += r
        out.append(total)
    return np.asarray(out)
