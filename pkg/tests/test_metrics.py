import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mamorl.envs import EnvConfig
from mamorl.errors import UnsupportedDimensionError
from mamorl.metrics import (
    ParetoFront,
    Rollouts,
    build_front_from_sweep,
    evaluate_gu,
    hypervolume_exact,
    hypervolume_mc,
    make_front,
    pareto_filter,
    preference_grid,
    random_policy,
    reference_point,
    rollout,
)
from mamorl.training import PreferenceConfig, PreferenceSource

DIAG = EnvConfig(env_kind="diagnostic", dt=0.3, diagnostic_landmarks=(-0.5, 0.0, 0.5, 0.0))


def brute_front(points):
    pts = np.unique(np.asarray(points), axis=0)
    keep = [p for p in pts if not any(np.all(q >= p) and np.any(q > p) for q in pts)]
    return {tuple(p) for p in keep}


def random_front(rng, m, k):
    pts = rng.uniform(0.1, 1.0, (k, m))
    return pareto_filter(pts)


# -- Pareto


def test_pareto_hand_case(kernels):
    out = pareto_filter([(1, 2), (2, 1), (0, 0)])
    assert out.tolist() == [[2, 1], [1, 2]]


def test_pareto_single_and_duplicates(kernels):
    assert pareto_filter([(3, 4)]).tolist() == [[3, 4]]
    assert pareto_filter([(1, 1), (1, 1), (0, 2)]).tolist() == [[1, 1], [0, 2]]


def test_pareto_empty():
    assert pareto_filter(np.zeros((0, 2))).shape == (0, 2)


@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(1, 4))
def test_pareto_matches_brute_force(seed, n, m):
    r = np.random.default_rng(seed)
    pts = np.round(r.normal(size=(n, m)), 1)  # rounding forces ties and duplicates
    assert {tuple(p) for p in pareto_filter(pts)} == brute_front(pts)


@given(st.integers(0, 2**32 - 1))
def test_pareto_idempotent(seed):
    pts = np.random.default_rng(seed).normal(size=(30, 3))
    once = pareto_filter(pts)
    assert np.array_equal(pareto_filter(once), once)


def test_pareto_backends_agree(kernels, rng):
    pts = np.round(rng.normal(size=(200, 3)), 1)
    assert {tuple(p) for p in pareto_filter(pts)} == brute_front(pts)


# -- exact HV


def test_hv_hand_cases(kernels):
    assert hypervolume_exact([(1, 1)], (0, 0)) == 1.0
    assert hypervolume_exact([(2, 1), (1, 2)], (0, 0)) == 3.0
    assert hypervolume_exact([(1, 1, 1)], (0, 0, 0)) == 1.0
    assert hypervolume_exact([(2, 1, 1), (1, 2, 1), (1, 1, 2)], (0, 0, 0)) == 4.0


def test_hv_ignores_points_not_beyond_ref(kernels):
    assert hypervolume_exact([(1, 1), (-1, 5)], (0, 0)) == 1.0
    assert hypervolume_exact(np.zeros((0, 2)), (0, 0)) == 0.0


def test_hv_accepts_front_object():
    front = make_front([(2, 1), (1, 2), (0.5, 0.5)], (0, 0))
    assert isinstance(front, ParetoFront) and front.n_points == 2 and front.n_objectives == 2
    assert hypervolume_exact(front) == 3.0


def test_hv_dimension_four_raises():
    with pytest.raises(UnsupportedDimensionError):
        hypervolume_exact([(1, 1, 1, 1)], (0, 0, 0, 0))


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
def test_hv_monotone_under_added_point(seed, m):
    r = np.random.default_rng(seed)
    pts = r.uniform(0.1, 1.0, (8, m))
    extra = r.uniform(0.05, 1.2, m)
    ref = np.zeros(m)
    assert hypervolume_exact(np.vstack([pts, extra]), ref) >= hypervolume_exact(pts, ref) - 1e-15


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]), st.floats(0.01, 0.5))
def test_hv_reference_shift(seed, m, delta):
    # lowering ref by delta on every axis adds exactly the slab volume of the enlarged dominated set
    r = np.random.default_rng(seed)
    pts = r.uniform(0.1, 1.0, (6, m))
    ref = np.zeros(m)
    shifted = hypervolume_exact(pts + delta, ref + delta)
    assert shifted == pytest.approx(hypervolume_exact(pts, ref), rel=1e-12)
    assert hypervolume_exact(pts, ref - delta) > hypervolume_exact(pts, ref)


def test_hv_2d_matches_3d_slab(rng):
    pts = random_front(rng, 2, 10)
    lifted = np.hstack([pts, np.ones((len(pts), 1))])
    assert hypervolume_exact(lifted, (0, 0, 0)) == pytest.approx(hypervolume_exact(pts, (0, 0)), rel=1e-12)


def test_hv_inclusion_exclusion_3d(rng):
    # brute force via inclusion-exclusion over subsets of a small front
    pts = random_front(rng, 3, 5)
    total = 0.0
    for k in range(1, len(pts) + 1):
        for sub in itertools.combinations(pts, k):
            total += (-1) ** (k + 1) * np.prod(np.min(sub, axis=0))
    assert hypervolume_exact(pts, (0, 0, 0)) == pytest.approx(total, rel=1e-12)


# -- MC HV


def test_mc_trivial_box_is_exact():
    est, se = hypervolume_mc([(1, 1)], (0, 0), 1_000_000, np.random.default_rng(0))
    assert est == 1.0 and se == 0.0


def test_mc_hand_case_within_three_sigma(kernels):
    est, se = hypervolume_mc([(2, 1), (1, 2)], (0, 0), 200_000, np.random.default_rng(0))
    assert abs(est - 3.0) <= 3 * se


def test_mc_std_error_scaling():
    pts = [(2, 1), (1, 2)]
    _, se1 = hypervolume_mc(pts, (0, 0), 40_000, np.random.default_rng(0))
    _, se2 = hypervolume_mc(pts, (0, 0), 640_000, np.random.default_rng(0))
    assert se1 / se2 == pytest.approx(4.0, rel=0.02)


def test_mc_rejects_small_sample():
    with pytest.raises(ValueError):
        hypervolume_mc([(1, 1)], (0, 0), 999)


def test_mc_degenerate_box():
    assert hypervolume_mc([(1, 0)], (0, 0), 10_000) == (0.0, 0.0)
    assert hypervolume_mc(np.zeros((0, 2)), (0, 0), 10_000) == (0.0, 0.0)


@pytest.mark.parametrize("m", [2, 3])
def test_mc_agrees_with_exact(m, rng):
    for _ in range(5):
        pts = random_front(rng, m, 8)
        est, se = hypervolume_mc(pts, np.zeros(m), 100_000, rng)
        assert abs(est - hypervolume_exact(pts, np.zeros(m))) <= 3 * se + 1e-12


# -- reference point and grid


def test_reference_point_rule():
    ref = reference_point([(0, 10), (10, 20)])
    assert np.allclose(ref, [-1.0, 9.0])
    assert np.allclose(reference_point([(2, 3)]), [1.8, 2.7])


def test_preference_grid():
    g = preference_grid(2, 11)
    assert g.shape == (11, 2) and np.allclose(g.sum(1), 1) and g[0].tolist() == [1, 0]
    g3 = preference_grid(3, 3)
    assert len(g3) == 6 and np.allclose(g3.sum(1), 1) and np.all(g3 >= 0)


# -- GU


class Fixed:
    def __init__(self, w):
        self.w = np.asarray(w, dtype=np.float64)

    def start_episode(self, rng):
        pass

    def __call__(self, obs):
        return self.w.copy()


def zero_policy(obs, prefs):
    return np.zeros((obs.shape[0], 2))


def test_gu_zero_reward_env(monkeypatch):
    from mamorl import envs

    real = envs.step

    def silent(state, actions, cfg):
        nxt, obs, r, done = real(state, actions, cfg)
        return nxt, obs, np.zeros_like(r), done

    monkeypatch.setattr("mamorl.metrics.envs.step", silent)
    assert evaluate_gu(zero_policy, DIAG, Fixed([[0.5, 0.5], [0.2, 0.8]]), n_states=3) == 0.0


def test_gu_single_state_is_that_return():
    r = rollout(zero_policy, DIAG, Fixed([[0.3, 0.7], [0.6, 0.4]]), 1, np.random.default_rng(5))
    gu = evaluate_gu(zero_policy, DIAG, Fixed([[0.3, 0.7], [0.6, 0.4]]), 1, np.random.default_rng(5))
    assert gu == r.scalar_returns.mean()
    expected = np.mean([np.dot([0.3, 0.7], r.vector_returns[0, 0]), np.dot([0.6, 0.4], r.vector_returns[0, 1])])
    assert gu == pytest.approx(expected, rel=1e-12)


def test_gu_linear_in_preference():
    pol = random_policy(np.random.default_rng(0), 2)
    r = rollout(pol, DIAG, Fixed([[1.0, 0.0], [1.0, 0.0]]), 8, np.random.default_rng(1))
    vec = r.vector_returns  # cached returns

    def gu(w):
        return float(np.mean(vec @ np.asarray(w)))

    a, b, lam = np.array([0.2, 0.8]), np.array([0.9, 0.1]), 0.3
    assert gu(lam * a + (1 - lam) * b) == pytest.approx(lam * gu(a) + (1 - lam) * gu(b), rel=1e-12)


def test_random_policy_gu_matches_large_run():
    prefs = PreferenceSource(PreferenceConfig(), DIAG)
    small = rollout(random_policy(np.random.default_rng(0), 2), DIAG, prefs, 64, np.random.default_rng(1))
    big = rollout(random_policy(np.random.default_rng(2), 2), DIAG, prefs, 640, np.random.default_rng(3))
    per_ep = small.scalar_returns.mean(axis=1)
    se = np.sqrt(per_ep.var(ddof=1) / len(per_ep) + big.scalar_returns.mean(axis=1).var(ddof=1) / 640)
    assert abs(small.gu - big.gu) <= 2.5 * se


def test_bound_dominates_gu():
    prefs = PreferenceSource(PreferenceConfig(), DIAG)
    r = rollout(random_policy(np.random.default_rng(0), 2), DIAG, prefs, 4, np.random.default_rng(1))
    assert isinstance(r, Rollouts) and np.all(r.scalar_returns <= r.bounds + 1e-12)


# -- sweep


def landmark_seeker(obs, prefs):
    """Steer toward landmark 0 or 1 depending on which objective the agent weights more."""
    k = (prefs[:, 1] > prefs[:, 0]).astype(int)
    rel = np.where(k[:, None] == 0, obs[:, 4:6], obs[:, 6:8])
    return np.clip(3.0 * rel - obs[:, 2:4], -1.0, 1.0)


def test_sweep_single_point():
    front, raw = build_front_from_sweep(landmark_seeker, DIAG, "random", grid=[[0.5, 0.5]], n_states=2)
    assert raw.shape == (1, 2) and front.n_points <= 1


def test_sweep_two_corner_policies_give_two_point_front():
    front, raw = build_front_from_sweep(landmark_seeker, DIAG, "random", grid=[[1, 0], [0, 1]], n_states=8)
    assert front.n_points == 2
    best = front.points
    assert np.argmax(best[:, 0]) != np.argmax(best[:, 1])
    assert np.all(front.points > front.ref)


def test_dominated_evaluation_leaves_hv_unchanged():
    _, raw = build_front_from_sweep(landmark_seeker, DIAG, "random", grid=[[1, 0], [0, 1]], n_states=4)
    ref = reference_point(raw)
    dominated = raw[0] - 1e-3
    before = hypervolume_exact(make_front(raw, ref))
    after = hypervolume_exact(make_front(np.vstack([raw, dominated]), ref))
    assert before == after


def test_observation_sweep_uses_generators():
    prefs = PreferenceSource(PreferenceConfig(), DIAG)
    front, raw = build_front_from_sweep(
        landmark_seeker, DIAG, "observation", grid=preference_grid(2, 3), generators=prefs.generators, n_states=2
    )
    assert raw.shape == (3, 2) and 1 <= front.n_points <= 3
    with pytest.raises(ValueError):
        build_front_from_sweep(landmark_seeker, DIAG, "observation", grid=[[1, 0]])
