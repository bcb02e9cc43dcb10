import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pssvf.envs import (BlobsEnv, LQREnv, PointMassEnv, RunningNormalizer, lqr_optimal,
                        make_env, normalize, rollout, simulate_optimal, update)
from pssvf.mlp import MlpSpec
from pssvf.policies import PolicyModel, init_policy, linear_spec
from pssvf.rng import Rng

from oracles import lqr_cost_bruteforce


class _FixedStart:
    """Wraps an environment so every episode starts from ``x0``."""

    def __init__(self, env, x0):
        self.env, self.x0 = env, np.asarray(x0, dtype=float)

    def __getattr__(self, name):
        return getattr(self.env, name)

    def reset(self, rng):
        return self.x0.copy()


def _zero_linear(env):
    spec = linear_spec(env.obs_dim, env.action_dim, head="linear")
    return PolicyModel(spec, np.zeros(spec.n_params))


def _gain_policy(env, K):
    spec = linear_spec(env.obs_dim, env.action_dim, head="linear")
    return PolicyModel(spec, np.concatenate([-np.asarray(K).reshape(-1), np.zeros(env.action_dim)]))


# LQR -------------------------------------------------------------------------

def test_scalar_one_step_riccati():
    env = LQREnv(A=[[1]], B=[[1]], Q=[[1]], R=[[1]], horizon=1)
    sol = lqr_optimal(env)
    assert sol.gains[0, 0, 0] == pytest.approx(0.5)
    assert sol.action(np.array([1.0]), 0)[0] == pytest.approx(-0.5)
    # x'Qx + u'Ru + x1'Qx1 = 1 + 0.25 + 0.25
    ret = simulate_optimal(env, sol, [[1.0]])[0]
    assert ret == pytest.approx(-1.5)
    assert sol.cost_to_go[0, 0, 0] == pytest.approx(1.5)


def test_zero_policy_matches_uncontrolled_closed_form():
    env = LQREnv()
    A, _, Q, _ = env.matrices()
    x0 = np.array([0.3, -0.7])
    expected, x = 0.0, x0
    for _ in range(env.horizon):
        expected += x @ Q @ x
        x = A @ x
    expected += x @ Q @ x
    res = rollout(_FixedStart(env, x0), _zero_linear(env), None, Rng(0))
    assert res.ret == pytest.approx(-expected, rel=1e-13)


def test_riccati_return_matches_bruteforce_simulation():
    env = LQREnv()
    A, B, Q, R = env.matrices()
    sol = lqr_optimal(env)
    x0 = np.array([0.5, 0.25])
    brute = lqr_cost_bruteforce(A, B, Q, R, sol.gains, x0)
    assert simulate_optimal(env, sol, [x0])[0] == pytest.approx(-brute, rel=1e-12)
    assert x0 @ sol.cost_to_go[0] @ x0 == pytest.approx(brute, rel=1e-10)


def test_closed_form_expected_return_matches_monte_carlo():
    env = LQREnv()
    sol = lqr_optimal(env)
    rng = Rng(0)
    x0s = np.array([env.reset(rng) for _ in range(20_000)])
    mc = simulate_optimal(env, sol, x0s)
    assert abs(mc.mean() - sol.expected_return) < 4 * mc.std() / np.sqrt(len(mc))


def test_b_zero_control_has_no_effect():
    # R must be positive definite, so a negligible R isolates the state cost
    env = LQREnv(B=[[0], [0]], R=[[1e-300]])
    r1 = rollout(env, _gain_policy(env, [[1.0, 2.0]]), None, Rng(3)).ret
    r2 = rollout(env, _zero_linear(env), None, Rng(3)).ret
    assert r1 == r2


def test_optimal_beats_random_linear_policies():
    env = LQREnv()
    sol = lqr_optimal(env)
    rng = Rng(1)
    x0s = np.array([env.reset(rng) for _ in range(20)])
    opt = simulate_optimal(env, sol, x0s)
    prng = np.random.default_rng(0)
    for _ in range(1000):
        K = prng.normal(scale=2.0, size=(1, 2))
        A, B, Q, R = env.matrices()
        costs = [lqr_cost_bruteforce(A, B, Q, R, [K] * env.horizon, x0) for x0 in x0s]
        assert np.all(opt >= -np.asarray(costs) - 1e-9)


def test_lqr_validation():
    with pytest.raises(ValueError):
        LQREnv(R=[[0.0]])
    with pytest.raises(ValueError):
        LQREnv(Q=[[1, 0], [0, -1]])
    with pytest.raises(ValueError):
        LQREnv(B=[[1.0]])
    with pytest.raises(ValueError):
        LQREnv(horizon=0)


def test_lqr_divergence_is_error():
    env = LQREnv(A=[[1e200, 0], [0, 1e200]], horizon=5)
    with pytest.raises(FloatingPointError):
        rollout(env, _zero_linear(env), None, Rng(0))


# PointMass ---------------------------------------------------------------------

def test_pointmass_at_goal_returns_zero():
    env = PointMassEnv(goal=(0.3, 0.2), start_low=(0.3, 0.2), start_high=(0.3, 0.2))
    assert rollout(env, _zero_linear(env), None, Rng(0)).ret == 0.0


def test_pointmass_static_zero_action_return():
    env = PointMassEnv(horizon=17)
    x0 = np.array([0.6, -0.8, 0.0, 0.0])
    res = rollout(_FixedStart(env, x0), _zero_linear(env), None, Rng(0))
    assert res.ret == pytest.approx(-17 * 1.0, rel=1e-14)


def test_pointmass_full_thrust_matches_reference_simulator():
    env = PointMassEnv(horizon=30, dt=0.1, friction=0.2)
    spec = linear_spec(4, 2, head="linear")
    thrust = PolicyModel(spec, [0, 0, 0, 0, 0, 0, 0, 0, 1.0, 0.0])
    x0 = np.array([-1.0, 0.0, 0.0, 0.0])
    res = rollout(_FixedStart(env, x0), thrust, None, Rng(0))
    p, v, total = -1.0, 0.0, 0.0
    for _ in range(30):
        v = v + 0.1 * (1.0 - 0.2 * v)
        p = p + 0.1 * v
        total -= abs(p)
    assert res.ret == pytest.approx(total, rel=1e-13)


def test_pointmass_action_clipping():
    env = PointMassEnv()
    state = np.zeros(4)
    s5, _ = env.step(state, np.array([5.0, -5.0]), 0)
    s1, _ = env.step(state, np.array([1.0, -1.0]), 0)
    np.testing.assert_array_equal(s5, s1)


# blobs -------------------------------------------------------------------------

def test_uniform_classifier_reward():
    env = BlobsEnv()
    spec = MlpSpec(input_dim=env.dim, hidden=(), output_dim=10, head="softmax")
    res = rollout(env, PolicyModel(spec, np.zeros(spec.n_params)), None, Rng(0))
    assert res.ret == pytest.approx(-math.log(10), abs=1e-12)


def test_perfect_classifier_reward_near_zero():
    env = BlobsEnv(n_classes=3)
    state = env.reset(Rng(0))
    labels = env.data["y_train"][state]
    probs = np.full((labels.size, 3), 1e-12)
    probs[np.arange(labels.size), labels] = 1 - 2e-12
    _, r = env.step(state, probs)
    assert -1e-9 < r <= 0


def test_random_classifier_accuracy_near_chance():
    env = BlobsEnv(n_test=5000)
    spec = MlpSpec(input_dim=env.dim, hidden=(), output_dim=10, head="softmax")
    accs = [env.evaluate(init_policy(spec, Rng(s)))["accuracy"] for s in range(20)]
    # chance level 0.1; a single random linear map is biased, so check the average
    assert abs(np.mean(accs) - 0.1) < 4 * np.sqrt(0.09 / 5000) + 0.05


def test_blobs_requires_two_classes():
    with pytest.raises(ValueError):
        BlobsEnv(n_classes=1)


def test_blobs_dataset_fixed_by_seed():
    a, b = BlobsEnv(seed=4), BlobsEnv(seed=4)
    np.testing.assert_array_equal(a.data["x_train"], b.data["x_train"])
    assert not np.array_equal(a.data["x_train"], BlobsEnv(seed=5).data["x_train"])


# rollout -----------------------------------------------------------------------

def test_horizon_one_single_reward():
    env = PointMassEnv(horizon=1)
    res = rollout(env, _zero_linear(env), None, Rng(0))
    assert res.steps == 1 and len(res.rewards) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 49))
def test_return_additivity_and_determinism(seed, cut):
    env = PointMassEnv()
    policy = init_policy(MlpSpec(input_dim=4, hidden=(8,), output_dim=2), Rng(seed))
    a = rollout(env, policy, None, Rng(seed))
    b = rollout(env, policy, None, Rng(seed))
    assert a.ret == b.ret and a.rewards == b.rewards
    assert math.fsum(a.rewards[:cut]) + math.fsum(a.rewards[cut:]) == pytest.approx(a.ret, abs=1e-12)
    assert a.ret == math.fsum(a.rewards)


def test_rollout_dimension_check():
    with pytest.raises(ValueError):
        rollout(PointMassEnv(), _zero_linear(LQREnv()), None, Rng(0))


def test_rollout_updates_normalizer_with_raw_observations_after_episode():
    env = PointMassEnv(horizon=5)
    norm = RunningNormalizer(4)
    res = rollout(env, _zero_linear(env), norm, Rng(0), update_normalizer=True, record=True)
    raw = np.array(res.observations)
    assert norm.count == 5
    np.testing.assert_allclose(norm.mean, raw.mean(axis=0), atol=1e-12)
    frozen = RunningNormalizer(4)
    rollout(env, _zero_linear(env), frozen, Rng(0), update_normalizer=False)
    assert frozen.count == 0


# normalizer --------------------------------------------------------------------

def test_cold_start_is_identity():
    x = np.array([3.0, -2.0])
    np.testing.assert_allclose(normalize(RunningNormalizer(2), x), x / np.sqrt(1 + 1e-8))


def test_constant_stream_normalizes_to_zero():
    n = RunningNormalizer(1)
    for _ in range(10):
        update(n, [4.2])
    assert normalize(n, [4.2])[0] == pytest.approx(0.0, abs=1e-12)


def test_welford_fixture_one_two_three():
    n = RunningNormalizer(1)
    for v in (1.0, 2.0, 3.0):
        update(n, [v])
    assert n.count == 3
    assert n.mean[0] == 2.0
    assert n.m2[0] == 2.0
    assert n.var[0] == 1.0
    assert normalize(n, [4.0])[0] == pytest.approx(2.0 / np.sqrt(1.0 + 1e-8), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 200))
def test_welford_matches_batch_statistics(seed, n):
    rng = np.random.default_rng(seed)
    data = rng.normal(loc=rng.uniform(-5, 5), scale=rng.uniform(0.1, 10), size=(n, 3))
    norm = RunningNormalizer(3)
    for row in data:
        norm.update(row)
    np.testing.assert_allclose(norm.mean, data.mean(axis=0), atol=1e-12, rtol=0)
    np.testing.assert_allclose(norm.var, data.var(axis=0, ddof=1), rtol=1e-10)
    assert np.all(norm.var >= 0)


def test_normalizer_state_round_trip():
    n = RunningNormalizer(2)
    n.update(np.random.default_rng(0).normal(size=(7, 2)))
    assert RunningNormalizer.from_state(n.get_state()) == n


def test_make_env():
    assert make_env({"id": "lqr", "horizon": 3}).horizon == 3
    with pytest.raises(ValueError):
        make_env({"id": "cartpole"})
