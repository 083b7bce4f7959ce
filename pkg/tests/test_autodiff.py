import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from mamorl import autodiff as ad
from mamorl.autodiff import AdamState, Tape, Tensor, adam_step, finite_difference_check
from mamorl.errors import (
    ContractError,
    DegenerateNormalizationError,
    DimensionError,
    DivergedTrainingError,
    NumericInputError,
)


def grad_of(f, *xs):
    for x in xs:
        x.set_requires_grad(True)
        x.zero_grad()
    with Tape() as tape:
        loss = f(*xs)
    tape.backward(loss)
    return [x.grad.copy() for x in xs]


# -- matmul


def test_matmul_identity():
    out = ad.matmul(np.eye(2), np.array([[3.0], [5.0]]))
    assert np.array_equal(out.data, [[3.0], [5.0]])


def test_matmul_hand():
    assert ad.matmul(np.array([[1.0, 2.0]]), np.array([[3.0], [4.0]])).data.item() == 11.0


def test_matmul_fd(rng):
    a, b = Tensor(rng.normal(size=(4, 3))), Tensor(rng.normal(size=(3, 2)))
    assert finite_difference_check(lambda x: ad.sum(ad.matmul(x, b)), a) < 1e-6
    assert finite_difference_check(lambda x: ad.sum(ad.matmul(a, x)), b) < 1e-6


def test_matmul_grad_formula(rng):
    a, b = Tensor(rng.normal(size=(4, 3))), Tensor(rng.normal(size=(3, 2)))
    g = rng.normal(size=(4, 2))
    ga, gb = grad_of(lambda x, y: ad.sum(ad.mul(ad.matmul(x, y), g)), a, b)
    assert np.allclose(ga, g @ b.data.T)
    assert np.allclose(gb, a.data.T @ g)


def test_matmul_mismatch_names_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 2\)"):
        ad.matmul(np.ones((2, 3)), np.ones((2, 2)))


def test_batched_matmul_fd(rng):
    a, b = Tensor(rng.normal(size=(2, 3, 4))), Tensor(rng.normal(size=(4, 5)))
    assert finite_difference_check(lambda x: ad.sum(ad.square(ad.matmul(x, b))), a) < 1e-6
    assert finite_difference_check(lambda x: ad.sum(ad.square(ad.matmul(a, x))), b) < 1e-6
    c = Tensor(rng.normal(size=(2, 4, 5)))
    assert finite_difference_check(lambda x: ad.sum(ad.square(ad.matmul(a, x))), c) < 1e-6


# -- elementwise


def test_relu_values():
    assert np.array_equal(ad.elementwise("relu", np.array([-1.0, 0.0, 2.0])).data, [0.0, 0.0, 2.0])


def test_tanh_zero():
    assert ad.elementwise("tanh", np.array([0.0])).data[0] == 0.0


def test_tanh_derivative(rng):
    x = Tensor(rng.normal(size=5))
    (g,) = grad_of(lambda t: ad.sum(ad.tanh(t)), x)
    assert np.allclose(g, 1 - np.tanh(x.data) ** 2)


@given(
    hnp.array_shapes(min_dims=1, max_dims=3, max_side=4),
    st.integers(0, 2**32 - 1),
)
def test_add_fd_random_shapes(shape, seed):
    r = np.random.default_rng(seed)
    a, b = Tensor(r.normal(size=shape)), Tensor(r.normal(size=shape[1:]))
    w = r.normal(size=shape)
    assert finite_difference_check(lambda x: ad.sum(ad.mul(ad.add(x, b), w)), a) < 1e-6
    assert finite_difference_check(lambda x: ad.sum(ad.mul(ad.add(a, x), w)), b) < 1e-6


def test_mul_broadcast_leading(rng):
    a, b = Tensor(rng.normal(size=(3, 4))), Tensor(rng.normal(size=(4,)))
    assert finite_difference_check(lambda x: ad.sum(ad.square(ad.mul(a, x))), b) < 1e-6


def test_elementwise_bad_broadcast():
    with pytest.raises(DimensionError):
        ad.elementwise("add", np.ones((2, 3)), np.ones((4,)))


def test_elementwise_unknown_kind():
    with pytest.raises(ValueError):
        ad.elementwise("sigmoid", np.ones(2))


# -- layer norm


def test_layer_norm_constant_row():
    out = ad.layer_norm(np.ones((1, 3)), np.ones(3), np.zeros(3))
    assert np.array_equal(out.data, np.zeros((1, 3)))


@pytest.mark.parametrize("a", [1e-2, 0.5, 3.0, 1e3])
def test_layer_norm_symmetric_pair(a):
    out = ad.layer_norm(np.array([[-a, a]]), np.ones(2), np.zeros(2)).data
    exact = a / np.sqrt(a * a + 1e-5)  # the eps term only matters when a is near sqrt(eps)
    assert np.allclose(out, [[-exact, exact]], rtol=1e-14)
    if a >= 0.5:
        assert np.allclose(out, [[-1.0, 1.0]], atol=2e-5)


def test_layer_norm_fd(rng):
    x = Tensor(rng.normal(size=(3, 8)))
    gain, bias = Tensor(rng.normal(size=8)), Tensor(rng.normal(size=8))
    w = rng.normal(size=(3, 8))
    f = lambda: ad.sum(ad.mul(ad.layer_norm(x, gain, bias), w))  # noqa: E731
    for t in (x, gain, bias):
        assert finite_difference_check(lambda _t: f(), t) < 1e-5


def test_layer_norm_degenerate():
    with pytest.raises(DegenerateNormalizationError):
        ad.layer_norm(np.ones((2, 1)), np.ones(1), np.zeros(1))


# -- softmax


def test_softmax_uniform():
    assert np.allclose(ad.softmax(np.zeros((1, 3))).data, 1 / 3)


@given(hnp.arrays(np.float64, (3, 5), elements=st.floats(-50, 50)), st.floats(-1e3, 1e3))
def test_softmax_shift_invariant_and_stochastic(x, c):
    y = ad.softmax(x).data
    assert np.allclose(ad.softmax(x + c).data, y, atol=1e-12)
    assert np.all(y >= 0)
    assert np.all(np.abs(y.sum(axis=-1) - 1.0) <= 1e-12)


def test_softmax_extreme_logits_stay_finite():
    y = ad.softmax(np.array([[1e300, 0.0, -1e300]])).data
    assert np.all(np.isfinite(y)) and abs(y.sum() - 1) < 1e-12


def test_softmax_jvp_fd(rng):
    x = Tensor(rng.normal(size=(4, 6)))
    v = rng.normal(size=(4, 6))
    assert finite_difference_check(lambda t: ad.sum(ad.mul(ad.softmax(t), v)), x) < 1e-6


def test_softmax_nonfinite():
    with pytest.raises(NumericInputError):
        ad.softmax(np.array([[0.0, np.nan]]))


# -- backward


def test_backward_sum_gives_ones(rng):
    x = Tensor(rng.normal(size=(2, 3, 4)))
    (g,) = grad_of(ad.sum, x)
    assert np.array_equal(g, np.ones((2, 3, 4)))


def test_backward_dot_constant(rng):
    w = rng.normal(size=5)
    x = Tensor(rng.normal(size=5))
    (g,) = grad_of(lambda t: ad.sum(ad.mul(w, t)), x)
    assert np.allclose(g, w)


def test_backward_nonscalar_loss():
    x = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        y = ad.scale(x, 2.0)
    with pytest.raises(ContractError):
        tape.backward(y)


def test_gradient_accumulates_over_reuse(rng):
    x = Tensor(rng.normal(size=4))
    (g1,) = grad_of(lambda t: ad.sum(ad.square(t)), x)
    (g2,) = grad_of(lambda t: ad.sum(ad.tanh(t)), x)
    (both,) = grad_of(lambda t: ad.add(ad.sum(ad.square(t)), ad.sum(ad.tanh(t))), x)
    assert np.allclose(both, g1 + g2, rtol=0, atol=1e-15)


def test_off_path_grad_is_zero(rng):
    x, y = Tensor(rng.normal(size=3)), Tensor(rng.normal(size=3))
    gx, gy = grad_of(lambda a, b: ad.sum(ad.square(a)), x, y)
    assert np.array_equal(gy, np.zeros(3))


def test_backward_deterministic(rng):
    x = Tensor(rng.normal(size=(5, 4)))
    w = Tensor(rng.normal(size=(4, 3)))
    f = lambda a, b: ad.sum(ad.tanh(ad.matmul(a, b)))  # noqa: E731
    g1 = grad_of(f, x, w)
    g2 = grad_of(f, x, w)
    assert all(np.array_equal(a, b) for a, b in zip(g1, g2))


def test_composite_actor_through_critic(rng):
    from mamorl.networks import Actor, MLPCritic, gp_critic_forward
    from mamorl.autodiff import check_parameters

    actor = Actor(6, 2, rng, pref_dim=4, final_init=0.5)
    critic = MLPCritic(8 + 2 * 2 + 4, 2, rng)
    obs = rng.normal(size=(3, 6))
    state = rng.normal(size=(3, 8))
    prefs = rng.dirichlet([1, 1], size=(3, 2))
    other = rng.uniform(-1, 1, size=(3, 2))

    def objective():
        a = actor(obs, prefs)
        acts = ad.stack([a, Tensor(other)], axis=1)
        q = gp_critic_forward(critic, state, acts, prefs)
        return ad.neg(ad.mean(ad.sum(ad.mul(q, prefs[:, 0, :]), axis=-1)))

    errs = check_parameters(objective, actor.params, max_coords=10)
    assert max(errs.values()) < 1e-4


# -- adam


def test_adam_first_step():
    p = Tensor(np.array([0.5]), requires_grad=True)
    p.grad[...] = 1.0
    st_ = AdamState.for_param(p)
    adam_step(p, st_, 0.01)
    assert abs((p.data[0] - 0.5) + 0.01) < 1e-9
    assert st_.t == 1 and p.grad[0] == 0.0


def test_adam_zero_grad():
    p = Tensor(np.array([0.5, -2.0]), requires_grad=True)
    st_ = AdamState.for_param(p)
    adam_step(p, st_, 0.01)
    assert np.array_equal(p.data, [0.5, -2.0]) and st_.t == 1


def test_adam_monotone_against_grad():
    p = Tensor(np.array([1.0, 1.0]), requires_grad=True)
    st_ = AdamState.for_param(p)
    values = [p.data.copy()]
    for _ in range(2):
        p.grad[...] = [2.0, -3.0]
        adam_step(p, st_, 0.01)
        values.append(p.data.copy())
    assert values[0][0] > values[1][0] > values[2][0]
    assert values[0][1] < values[1][1] < values[2][1]


def test_adam_nonfinite_grad_names_param():
    p = Tensor(np.zeros(2), requires_grad=True, name="critic0/l0.W")
    p.grad[...] = [np.inf, 0.0]
    with pytest.raises(DivergedTrainingError, match="critic0/l0.W"):
        adam_step(p, AdamState.for_param(p), 0.01)


def test_adam_backends_agree(rng):
    from mamorl.autodiff.optim import _adam_update_nb, _adam_update_np

    outs = []
    for fn in (_adam_update_np, _adam_update_nb):
        data, grad = np.linspace(-1, 1, 7), np.linspace(2, -2, 7)
        m, v = np.zeros(7), np.zeros(7)
        for _ in range(3):
            fn(data, grad.copy(), m, v, 1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001)
        outs.append(data)
    assert np.allclose(outs[0], outs[1], rtol=0, atol=1e-15)


# -- finite-difference checker


def test_fd_quadratic():
    assert finite_difference_check(lambda t: ad.sum(ad.square(t)), Tensor(np.array([1.0, 2.0]))) < 1e-8


def test_fd_rejects_bad_eps():
    with pytest.raises(ValueError):
        finite_difference_check(lambda t: ad.sum(t), Tensor(np.ones(2)), eps=1e-2)


def test_fd_detects_wrong_gradient():
    from mamorl.autodiff.tensor import make_result

    def bad_square(t):
        return make_result(t.data**2, (t,), lambda g: (g * t.data,))  # missing factor 2

    assert finite_difference_check(lambda t: ad.sum(bad_square(t)), Tensor(np.array([1.0, 2.0]))) > 0.1


def test_actor_head_fd(rng):
    from mamorl.networks import Actor

    actor = Actor(5, 2, rng, final_init=0.5)
    x = Tensor(rng.normal(size=(4, 5)))
    assert finite_difference_check(lambda t: ad.sum(actor(t)), x) < 1e-5


def test_primitive_suite_ten_seeds():
    worst = 0.0
    for seed in range(10):
        r = np.random.default_rng(seed)
        x = Tensor(r.normal(size=(3, 6)))
        w = Tensor(r.normal(size=(6, 4)))
        g, b = Tensor(r.normal(size=4)), Tensor(r.normal(size=4))
        v = r.normal(size=(3, 4))

        def f(_t):
            h = ad.layer_norm(ad.matmul(x, w), g, b)
            return ad.sum(ad.mul(ad.softmax(ad.tanh(ad.relu(h))), v))

        for t in (x, w, g, b):
            worst = max(worst, finite_difference_check(f, t))
    assert worst < 1e-4
