import warnings

import numpy as np
import pytest

from pssvf.critics import FingerprintCritic, VanillaCritic
from pssvf.envs import BlobsEnv, PointMassEnv
from pssvf.mlp import MlpSpec
from pssvf.policies import PolicyModel, init_policy, linear_spec
from pssvf.rng import Rng
from pssvf.training import (PSSVF, ablate, ablation_model, clone_from_probing_states,
                            collect_capped_dataset, final_return, offline_improvement,
                            zero_shot_transfer)
from pssvf.training.common import MetricsRow

SWIMMER_ACTIONS = np.array([[-0.97, -0.86], [-0.18, -0.99], [0.86, 0.68]])


def _critic(spec, k=4, seed=0):
    return FingerprintCritic(n_probing=k, hidden=(8,), activation="tanh", random_state=seed).initialize(spec)


def _fingerprint_state(critic):
    return (critic.evaluator_params_.tobytes(), critic.probing_states_.tobytes())


def test_transfer_zero_steps_returns_init():
    spec = MlpSpec(input_dim=4, hidden=(8,), output_dim=2)
    critic = _critic(spec)
    lin = linear_spec(4, 2)
    policy, predicted = zero_shot_transfer(critic, lin, 0, 1e-3, Rng(5))
    assert policy == init_policy(lin, Rng(5))
    assert len(predicted) == 1


def test_transfer_increases_prediction_and_leaves_critic_untouched():
    spec = MlpSpec(input_dim=4, hidden=(8,), output_dim=2)
    critic = _critic(spec)
    before = _fingerprint_state(critic)
    policy, predicted = zero_shot_transfer(critic, linear_spec(4, 2), 50, 1e-3, Rng(1))
    assert predicted[-1] >= predicted[0]
    assert _fingerprint_state(critic) == before
    assert policy.spec.hidden == ()


def test_transfer_rejects_vanilla_and_mismatch():
    spec = MlpSpec(input_dim=4, hidden=(8,), output_dim=2)
    with pytest.raises(TypeError, match="fingerprint"):
        zero_shot_transfer(VanillaCritic().initialize(spec), linear_spec(4, 2), 1, 1e-3, Rng(0))
    with pytest.raises(ValueError):
        zero_shot_transfer(_critic(spec), linear_spec(3, 2), 1, 1e-3, Rng(0))


def test_clone_single_pair_exactly():
    spec = linear_spec(2, 1, head="linear")
    policy, trace = clone_from_probing_states([[0.3, -0.4]], [[0.7]], spec, 5000, 1e-2, Rng(0),
                                              tol=1e-12)
    assert trace[-1] < 1e-10
    assert policy.act([0.3, -0.4])[0] == pytest.approx(0.7, abs=1e-5)


def test_swimmer_probing_actions_are_valid_targets():
    assert np.all(np.abs(SWIMMER_ACTIONS) < 1)
    spec = MlpSpec(input_dim=3, hidden=(16,), output_dim=2)
    states = np.random.default_rng(0).uniform(0, 1, (3, 3))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        _, trace = clone_from_probing_states(states, SWIMMER_ACTIONS, spec, 20_000, 1e-2, Rng(0))
    assert trace[-1] < 1e-6


def test_clone_unreachable_targets_warns():
    spec = linear_spec(1, 1)
    with pytest.warns(RuntimeWarning, match="bounds"):
        _, trace = clone_from_probing_states([[1.0]], [[1.5]], spec, 200, 1e-1, Rng(0))
    assert trace[-1] > 0.2  # saturates at 1


def test_clone_errors():
    spec = linear_spec(2, 1)
    with pytest.raises(ValueError):
        clone_from_probing_states(np.zeros((0, 2)), np.zeros((0, 1)), spec, 10, 1e-2, Rng(0))
    with pytest.raises(ValueError):
        clone_from_probing_states([[0.0, 0.0]], [[0.1], [0.2]], spec, 10, 1e-2, Rng(0))


def test_clone_does_not_touch_source():
    spec = MlpSpec(input_dim=2, hidden=(4,), output_dim=1)
    src = init_policy(spec, Rng(1))
    h = hash(src)
    critic = _critic(spec)
    before = _fingerprint_state(critic)
    clone_from_probing_states(critic.probing_states_, src.act(critic.probing_states_).reshape(-1, 1),
                              spec, 100, 1e-2, Rng(2))
    assert hash(src) == h and _fingerprint_state(critic) == before


def test_capped_dataset_respects_cap():
    env = BlobsEnv()
    spec = MlpSpec(input_dim=env.dim, hidden=(), output_dim=10, head="softmax")
    policies, rewards, accs = collect_capped_dataset(env, spec, 30, 0.15, 0.1, Rng(0))
    assert len(policies) == 30 and np.all(accs <= 0.15)
    assert rewards.shape == (30,)


def test_capped_dataset_gives_up():
    env = BlobsEnv()
    spec = MlpSpec(input_dim=env.dim, hidden=(), output_dim=10, head="softmax")
    with pytest.raises(RuntimeError):
        collect_capped_dataset(env, spec, 5, -1.0, 0.1, Rng(0), max_attempts=20)


def test_identical_dataset_gives_flat_critic():
    env = BlobsEnv()
    spec = MlpSpec(input_dim=env.dim, hidden=(), output_dim=10, head="softmax")
    p = init_policy(spec, Rng(0))
    critic = FingerprintCritic(n_probing=3, hidden=(8,), probing_low=-0.5, probing_high=0.5,
                               max_iter=3000, learning_rate=1e-2, random_state=0)
    policy, fitted, trace = offline_improvement([p] * 8, np.full(8, -2.0), critic, spec, 100, 1e-3,
                                                Rng(1), env, eval_every=10)
    assert fitted.predict([p])[0] == pytest.approx(-2.0, abs=1e-3)
    # the fit carries no direction: 100 ascent steps move the prediction by under 5%
    predicted = np.array([row["predicted"] for row in trace])
    assert np.abs(predicted + 2.0).max() < 0.05 * 2.0
    assert set(trace[0]) == {"step", "predicted", "test_reward", "test_accuracy"}


def test_ablation_model_settings():
    base = PSSVF(critic=FingerprintCritic(n_probing=20, hidden=(16,)))
    assert ablation_model(base, "n_probing", 1, 3).critic.n_probing == 1
    assert ablation_model(base, "recency_exponent", 0.0, 3).recency_exponent == 0.0
    van = ablation_model(base, "critic_kind", "vanilla", 3).critic
    assert isinstance(van, VanillaCritic) and van.hidden == (16,)
    assert ablation_model(base, "critic_kind", "vanilla", 3).random_state == 3
    with pytest.raises(ValueError):
        ablation_model(base, "sigma", 0.1, 0)


def test_ablate_shares_seeds_and_emits_one_series_per_value():
    base = PSSVF(critic=FingerprintCritic(n_probing=2, hidden=(4,)), policy_hidden=(),
                 n_episodes=3, eval_episodes=1)
    out = ablate(base, PointMassEnv(horizon=5), "n_probing", [1, 5, 20], [0, 1])
    assert list(out) == [1, 5, 20]
    assert all(len(runs) == 2 for runs in out.values())


def test_final_return_window():
    rows = [MetricsRow(i, i, float(i), 0.0, None, None) for i in range(5)]
    assert final_return(rows, 3) == 3.0
