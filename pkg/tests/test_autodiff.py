import numpy as np
import pytest

from wiae import autodiff as ad
from wiae.autodiff import Graph, Tensor
from wiae.errors import ContractError, DimensionError, GraphLookupError

from conftest import central_difference


def _check(fn, *arrays, tol=1e-6):
    ts = [Tensor(a, requires_grad=True) for a in arrays]
    grads = ad.grad(fn(*ts), ts)
    for i, a in enumerate(arrays):
        def f(v, i=i):
            args = [Tensor(b) for b in arrays]
            args[i] = Tensor(v)
            return fn(*args).item()
        num = central_difference(f, a)
        np.testing.assert_allclose(grads[i].data, num, rtol=tol, atol=tol)


def test_constructor_rejects_non_finite():
    with pytest.raises(ValueError):
        Tensor([1.0, np.nan])


def test_add_backward_is_ones():
    x = Tensor([[1.0, 2.0], [3.0, 4.0]], requires_grad=True)
    (g,) = ad.grad(ad.tsum(x + 0.0), [x])
    np.testing.assert_array_equal(g.data, np.ones((2, 2)))


def test_tanh_derivative_at_zero():
    x = Tensor(0.0, requires_grad=True)
    (g,) = ad.grad(ad.tanh(x), [x])
    assert g.item() == 1.0


def test_matmul_shape_mismatch():
    with pytest.raises(DimensionError):
        ad.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_non_scalar_output_rejected():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ContractError):
        ad.grad(x * 2.0, [x])


def test_wrt_without_grad_rejected():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(GraphLookupError):
        ad.grad(ad.tsum(x), [Tensor(np.ones(3))])


def test_unreachable_wrt_gets_zeros():
    x = Tensor(np.ones(3), requires_grad=True)
    y = Tensor(np.ones(2), requires_grad=True)
    gx, gy = ad.grad(ad.tsum(ad.square(x)), [x, y])
    np.testing.assert_array_equal(gx.data, 2 * np.ones(3))
    np.testing.assert_array_equal(gy.data, np.zeros(2))


def test_intermediate_gradient_kept():
    x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    h = ad.mul(x, 3.0)
    out = ad.tsum(ad.square(h))
    gh, gx = ad.grad(out, [h, x])
    np.testing.assert_allclose(gh.data, 2 * h.data)
    np.testing.assert_allclose(gx.data, 6 * h.data)


@pytest.mark.parametrize("fn", [
    lambda a, b: ad.tsum(ad.mul(a, b)),
    lambda a, b: ad.tsum(ad.div(a, ad.add(ad.square(b), 1.0))),
    lambda a, b: ad.tsum(ad.tanh(ad.sub(a, b))),
    lambda a, b: ad.mean(ad.sqrt(ad.add(ad.square(a), ad.square(b)))),
    lambda a, b: ad.tsum(ad.tabs(ad.mul(a, b))),
    lambda a, b: ad.tsum(ad.square(ad.concat([a, b], axis=1))),
    lambda a, b: ad.tsum(ad.square(ad.getitem(a, (slice(None), [2, 0])))),
    lambda a, b: ad.tsum(ad.square(ad.reshape(ad.transpose(a), (6,)))),
    lambda a, b: ad.tsum(ad.interpolate(a, b, np.array([[0.3], [0.8]]))),
])
def test_elementwise_and_structural_ops(fn, rng):
    a = rng.normal(size=(2, 3)) + 0.1
    b = rng.normal(size=(2, 3)) + 0.1
    _check(fn, a, b)


def test_broadcasting_bias(rng):
    x, w, b = rng.normal(size=(4, 3)), rng.normal(size=(3, 2)), rng.normal(size=2)
    _check(lambda x, w, b: ad.tsum(ad.tanh(ad.add(ad.matmul(x, w), b))), x, w, b)
    _check(lambda x, w, b: ad.tsum(ad.square(ad.linear(x, w, b))), x, w, b)


def test_tsum_axis_keepdims(rng):
    a = rng.normal(size=(3, 4))
    _check(lambda a: ad.tsum(ad.square(ad.tsum(a, axis=0, keepdims=True))), a)
    _check(lambda a: ad.tsum(ad.tanh(ad.mean(a, axis=1))), a)


def test_safe_div_zero_denominator():
    a = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    b = Tensor(np.array([0.0, 2.0]), requires_grad=True)
    out = ad.safe_div(a, b)
    np.testing.assert_array_equal(out.data, [0.0, 1.0])
    ga, gb = ad.grad(ad.tsum(out), [a, b])
    assert np.all(np.isfinite(ga.data)) and np.all(np.isfinite(gb.data))


def test_second_order_tanh(rng):
    # d/dx of d tanh(x)/dx = -2 tanh(x) (1 - tanh(x)^2)
    x = Tensor(rng.normal(size=5), requires_grad=True)
    (g,) = ad.grad(ad.tsum(ad.tanh(x)), [x], create_graph=True)
    (h,) = ad.grad(ad.tsum(g), [x])
    t = np.tanh(x.data)
    np.testing.assert_allclose(h.data, -2 * t * (1 - t * t), rtol=1e-12)


def test_gradient_norm_second_order(rng):
    w = rng.normal(size=(3, 1))

    def penalty(wv):
        wt = Tensor(wv, requires_grad=True)
        x = Tensor(rng_fixed, requires_grad=True)
        norms = ad.row_gradient_norms(ad.tsum(ad.tanh(ad.matmul(x, wt))), x)
        return wt, ad.tsum(ad.square(ad.sub(norms, 1.0)))

    rng_fixed = rng.normal(size=(4, 3))
    wt, out = penalty(w)
    (g,) = ad.grad(out, [wt])
    num = central_difference(lambda v: penalty(v)[1].item(), w)
    np.testing.assert_allclose(g.data, num, rtol=1e-6, atol=1e-8)


def test_no_grad_builds_no_graph():
    x = Tensor(np.ones(2), requires_grad=True)
    with ad.no_grad():
        y = ad.tsum(ad.square(x))
    assert not y.requires_grad


def test_graph_shape_check():
    g = Graph(lambda a: ad.tsum(a), [(2, 3)])
    with pytest.raises(DimensionError, match="input\\[0\\]"):
        g.forward([np.ones((3, 2))])
    (out,) = g.forward([np.ones((2, 3))])
    assert out.item() == 6.0
    assert len(g.nodes()) >= 2
