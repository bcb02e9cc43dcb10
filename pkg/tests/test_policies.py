import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pssvf.mlp import MlpSpec
from pssvf.policies import PolicyModel, flatten, init_policy, linear_spec, perturb, unflatten
from pssvf.rng import Rng

seeds = st.integers(0, 2**32 - 1)


def test_zero_params_tanh_head_gives_zero_action():
    spec = MlpSpec(input_dim=3, hidden=(4,), output_dim=2)
    assert np.array_equal(PolicyModel(spec, np.zeros(spec.n_params)).act([1.0, 2.0, 3.0]), [0, 0])


def test_scaled_tanh_head_hand_value():
    spec = linear_spec(1, 1, head="tanh", action_low=(-2.0,), action_high=(2.0,))
    a = PolicyModel(spec, [1.0, 0.0]).act([1.0])
    assert a[0] == pytest.approx(2 * np.tanh(1.0), abs=1e-15)
    assert a[0] == pytest.approx(1.52318831, abs=1e-8)


def test_softmax_head_zero_params_is_uniform():
    spec = MlpSpec(input_dim=5, hidden=(8,), output_dim=10, head="softmax")
    np.testing.assert_allclose(PolicyModel(spec, np.zeros(spec.n_params)).act(np.ones(5)), 0.1)


def test_dimension_mismatch():
    spec = linear_spec(3, 2)
    with pytest.raises(ValueError):
        PolicyModel(spec, np.zeros(spec.n_params)).act(np.zeros(4))
    with pytest.raises(ValueError):
        PolicyModel(spec, np.zeros(spec.n_params + 1))


def test_invalid_bounds_rejected():
    with pytest.raises(ValueError):
        MlpSpec(input_dim=1, output_dim=2, action_low=(0, 0), action_high=(1, 0))


@settings(max_examples=200, deadline=None)
@given(seeds, st.floats(1e-3, 1e3))
def test_tanh_head_never_leaves_bounds(seed, scale):
    rng = np.random.default_rng(seed)
    low = rng.uniform(-3, 0, 2)
    high = low + rng.uniform(1e-3, 3, 2)
    spec = MlpSpec(input_dim=3, hidden=(6,), output_dim=2, head="tanh",
                   action_low=tuple(low), action_high=tuple(high))
    policy = PolicyModel(spec, rng.normal(scale=scale, size=spec.n_params))
    a = policy.act(rng.normal(scale=scale, size=(20, 3)))
    assert np.all(a >= low) and np.all(a <= high)


def test_perturb_sigma_zero_is_identity():
    p = init_policy(linear_spec(3, 2), Rng(0))
    assert perturb(p, 0.0, Rng(1)) == p


def test_perturb_leaves_original_untouched_and_std_matches():
    spec = MlpSpec(input_dim=4, hidden=(16,), output_dim=2)
    p = init_policy(spec, Rng(0))
    before = p.params.copy()
    rng = Rng(1)
    diffs = np.array([perturb(p, 0.05, rng).params - p.params for _ in range(2000)])
    np.testing.assert_array_equal(p.params, before)
    assert diffs.std() == pytest.approx(0.05, rel=0.01)


def test_perturbation_is_unbiased():
    p = init_policy(linear_spec(2, 1), Rng(0))
    rng, sigma, n = Rng(11), 0.05, 10_000
    mean = np.mean([perturb(p, sigma, rng).params - p.params for _ in range(n)], axis=0)
    assert np.all(np.abs(mean) < 3 * sigma / np.sqrt(n))


def test_perturb_seeds_differ():
    p = init_policy(linear_spec(2, 1), Rng(0))
    assert perturb(p, 0.1, Rng(1)) != perturb(p, 0.1, Rng(2))


def test_uniform_init_bound_and_determinism():
    spec = MlpSpec(input_dim=4, hidden=(16,), output_dim=2)
    p = init_policy(spec, Rng(3))
    (o1, f1, _), (o2, f2, i2) = spec.manifest()
    assert np.all(np.abs(p.params[:o2]) <= 0.5)
    assert np.all(np.abs(p.params[o2:]) <= 1 / np.sqrt(16))
    assert p == init_policy(spec, Rng(3))


def test_zero_init_acts_zero():
    spec = MlpSpec(input_dim=4, hidden=(16,), output_dim=2)
    assert np.array_equal(init_policy(spec, Rng(3), "zeros").act(np.ones(4)), [0, 0])


def test_flatten_round_trip_and_length():
    spec = MlpSpec(input_dim=3, hidden=(5, 4), output_dim=2)
    p = init_policy(spec, Rng(8))
    assert unflatten(spec, flatten(p)) == p
    assert linear_spec(2, 2).n_params == 6
    with pytest.raises(ValueError):
        unflatten(spec, np.zeros(spec.n_params - 1))


def test_flatten_layout_golden():
    # 2 -> 2 -> 1 network; parameters numbered in storage order
    spec = MlpSpec(input_dim=2, hidden=(2,), output_dim=1, activation="tanh", head="linear")
    assert spec.manifest() == [(0, 2, 2), (6, 1, 2)]
    params = np.arange(1.0, 10.0)
    # W1 = [[1,2],[3,4]] (row = output unit), b1 = [5,6], W2 = [[7,8]], b2 = [9]
    x = np.array([0.1, -0.2])
    h = np.tanh(np.array([1 * 0.1 + 2 * -0.2 + 5, 3 * 0.1 + 4 * -0.2 + 6]))
    expected = 7 * h[0] + 8 * h[1] + 9
    assert PolicyModel(spec, params).act(x)[0] == pytest.approx(expected, abs=1e-14)


def test_policy_is_immutable():
    p = init_policy(linear_spec(2, 1), Rng(0))
    with pytest.raises(ValueError):
        p.params[0] = 1.0


def test_batched_act_matches_single():
    spec = MlpSpec(input_dim=3, hidden=(5,), output_dim=2)
    p = init_policy(spec, Rng(2))
    xs = np.random.default_rng(0).normal(size=(4, 3))
    np.testing.assert_allclose(p.act(xs), np.stack([p.act(x) for x in xs]), rtol=1e-15)
