import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from mamorl.errors import ConfigError, DimensionError
from mamorl.preferences import (
    PreferenceGenerator,
    bias_toward,
    build_generators,
    generate_all,
    generate_from_observation,
    is_valid_preference,
    sample_global_preference,
    sample_uniform_simplex,
    sample_uniform_simplex_batch,
    with_conflict,
)


def test_single_objective_is_one():
    rng = np.random.default_rng(0)
    assert all(np.array_equal(sample_uniform_simplex(rng, 1), [1.0]) for _ in range(10))


def test_zero_objectives_rejected():
    with pytest.raises(ConfigError):
        sample_uniform_simplex(np.random.default_rng(0), 0)


def test_two_objective_marginal_mean():
    w = sample_uniform_simplex_batch(np.random.default_rng(0), (100_000,), 2)
    assert abs(w[:, 0].mean() - 0.5) < 0.01


def test_three_objective_uniformity():
    # for the uniform 2-simplex, each marginal is Beta(1, 2): mean 1/3, variance 1/18
    w = sample_uniform_simplex_batch(np.random.default_rng(1), (100_000,), 3)
    assert np.allclose(w.mean(axis=0), 1 / 3, atol=0.005)
    assert np.allclose(w.var(axis=0), 1 / 18, atol=0.002)


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_samples_on_simplex(m, seed):
    rng = np.random.default_rng(seed)
    for w in sample_uniform_simplex_batch(rng, (20,), m):
        assert np.all(w >= 0) and abs(w.sum() - 1) <= 1e-12
    assert is_valid_preference(sample_uniform_simplex(rng, m))


def test_global_preference_shape():
    w = sample_global_preference(np.random.default_rng(0), 3, 2)
    assert w.shape == (3, 2) and all(is_valid_preference(r) for r in w)


def test_validity_check():
    assert is_valid_preference([0.25, 0.75])
    assert not is_valid_preference([0.5, 0.6])
    assert not is_valid_preference([-0.1, 1.1])


def gen(a, b, i=0):
    return PreferenceGenerator(i, np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


def test_zero_generator_uniform():
    g = gen(np.zeros((3, 4)), np.zeros(3))
    assert np.allclose(g(np.arange(4.0)), 1 / 3)


def test_biased_generator():
    g = gen(np.zeros((2, 4)), [10.0, 0.0])
    assert g(np.ones(4))[0] > 0.999


def test_generator_frozen_and_deterministic():
    g = build_generators(0, 2, 2, 6)[0]
    with pytest.raises(ValueError):
        g.weight[0, 0] = 1.0
    o = np.random.default_rng(0).normal(size=6)
    assert np.array_equal(g(o), g(o)) and g.frozen


def test_generator_dimension_mismatch():
    g = build_generators(0, 1, 2, 6)[0]
    with pytest.raises(DimensionError):
        g(np.ones(5))


def test_build_generators_seeded():
    a, b = build_generators(7, 3, 2, 10), build_generators(7, 3, 2, 10)
    assert all(np.array_equal(x.weight, y.weight) for x, y in zip(a, b))
    assert not np.array_equal(a[0].weight, a[1].weight)
    assert all(np.array_equal(g.bias, np.zeros(2)) for g in a)


def test_build_generators_variance():
    g = build_generators(0, 1, 200, 50, scale=2.0)[0]
    assert g.weight.var() == pytest.approx(4.0 / 50, rel=0.05)


def test_scale_to_zero_is_uniform():
    g = build_generators(0, 1, 3, 8, scale=1e-9)[0]
    obs = np.random.default_rng(0).normal(size=(50, 8))
    assert np.allclose(generate_from_observation(g, obs), 1 / 3, atol=1e-8)


def test_repeated_evaluations_bit_identical():
    gens = build_generators(1, 2, 3, 8)
    obs = np.random.default_rng(0).normal(size=(1000, 2, 8))
    first = [generate_all(gens, o) for o in obs]
    assert all(np.array_equal(generate_all(gens, o), w) for o, w in zip(obs, first))
    assert np.array_equal(generate_all(gens, obs), generate_all(gens, obs))


@given(hnp.arrays(np.float64, 8, elements=st.floats(-5, 5)), st.integers(0, 100))
def test_outputs_valid_and_lipschitz(o, seed):
    g = build_generators(seed, 1, 3, 8, scale=2.0)[0]
    w = g(o)
    assert is_valid_preference(w)
    delta = np.random.default_rng(seed).normal(size=8) * 1e-4
    # the softmax Jacobian maps a logit change z to a 1-norm change of at most (max z - min z) / 2
    z = g.weight @ delta
    lhs = np.abs(g(o + delta) - w).sum()
    assert lhs <= 0.5 * np.ptp(z) * (1 + 1e-3) + 1e-15
    assert np.ptp(z) <= np.sqrt(2) * np.linalg.norm(g.weight, 2) * np.linalg.norm(delta) + 1e-15


def test_bias_toward_sets_target_at_zero_logits():
    gens = bias_toward(build_generators(0, 2, 2, 6), [0.3, 0.7])
    assert np.allclose(generate_all(gens, np.zeros((2, 6))), [[0.3, 0.7], [0.3, 0.7]])


def test_conflict_pushes_agents_apart():
    gens = with_conflict(build_generators(0, 2, 2, 6), 1.0)
    w = generate_all(gens, np.zeros((2, 6)))
    assert w[0, 0] > 0.5 > w[1, 0]
