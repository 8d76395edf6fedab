"""Dense float64 tensors with reverse-mode differentiation.

Every backward rule is written in terms of the same differentiable
primitives, so a gradient computed with ``create_graph=True`` is itself a
graph node and can be differentiated again.  That is what the critic
gradient penalty needs: ``d/dw (||d D_w(x) / dx|| - 1)^2``.

The tape is define-by-run.  :class:`Graph` wraps a traced callable when a
fixed-signature ``forward``/``backward`` pair is more convenient.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import ContractError, DimensionError, GraphLookupError

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate without recording graph nodes."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def _as_array(value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor data must be finite")
    return arr


class Tensor:
    """A float64 array that may take part in a computation graph."""

    __slots__ = ("data", "requires_grad", "op", "parents", "vjp", "name")
    __array_priority__ = 100.0

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = _as_array(data)
        self.requires_grad = requires_grad
        self.op = "leaf"
        self.parents: tuple[Tensor, ...] = ()
        self.vjp = None
        self.name = name

    @classmethod
    def _node(cls, data: np.ndarray, op: str, parents: tuple, vjp) -> "Tensor":
        out = cls.__new__(cls)
        out.data = data
        out.op = op
        out.name = None
        if _GRAD_ENABLED and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out.parents = parents
            out.vjp = vjp
        else:
            out.requires_grad = False
            out.parents = ()
            out.vjp = None
        return out

    # -- basic properties -------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        t = Tensor.__new__(Tensor)
        t.data = self.data
        t.requires_grad = False
        t.op = "leaf"
        t.parents = ()
        t.vjp = None
        t.name = self.name
        return t

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self.op}{flag})"

    # -- operators --------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def sum(self, axis: int | None = None, keepdims: bool = False) -> "Tensor":
        return tsum(self, axis, keepdims)

    def mean(self, axis: int | None = None, keepdims: bool = False) -> "Tensor":
        return mean(self, axis, keepdims)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def tanh(self) -> "Tensor":
        return tanh(self)


def _const(value) -> Tensor:
    t = Tensor.__new__(Tensor)
    t.data = np.asarray(value, dtype=np.float64)
    t.requires_grad = False
    t.op = "leaf"
    t.parents = ()
    t.vjp = None
    t.name = None
    return t


def as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    if isinstance(value, (int, float)):
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("tensor data must be finite")
        return _const(float(value))
    return Tensor(value)


# -- broadcasting helpers -------------------------------------------------

def _binary(op: str, fn, a: Tensor, b: Tensor) -> np.ndarray:
    try:
        return fn(a.data, b.data)
    except ValueError:
        raise DimensionError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


def sum_to(g: Tensor, shape: tuple[int, ...]) -> Tensor:
    """Reduce a broadcast gradient back to ``shape``."""
    if g.shape == shape:
        return g
    lead = g.ndim - len(shape)
    axes = list(range(lead))
    axes += [lead + i for i, n in enumerate(shape) if n == 1 and g.shape[lead + i] != 1]
    out = g
    # Reduce one axis at a time, highest first, so indices stay valid.
    for ax in sorted(axes, reverse=True):
        out = tsum(out, ax, keepdims=ax >= lead)
    return reshape(out, shape)


def broadcast_to(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    shape = tuple(shape)
    if a.shape == shape:
        return a
    data = np.broadcast_to(a.data, shape).copy()
    src = a.shape
    return Tensor._node(data, "broadcast_to", (a,), lambda g, out: (sum_to(g, src),))


# -- elementwise primitives -----------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = _binary("add", np.add, a, b)
    sa, sb = a.shape, b.shape
    return Tensor._node(data, "add", (a, b),
                        lambda g, out: (sum_to(g, sa), sum_to(g, sb)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = _binary("sub", np.subtract, a, b)
    sa, sb = a.shape, b.shape
    return Tensor._node(data, "sub", (a, b),
                        lambda g, out: (sum_to(g, sa), sum_to(neg(g), sb)))


def neg(a) -> Tensor:
    a = as_tensor(a)
    return Tensor._node(-a.data, "neg", (a,), lambda g, out: (neg(g),))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = _binary("mul", np.multiply, a, b)
    sa, sb = a.shape, b.shape

    def vjp(g, out):
        return (sum_to(mul(g, b), sa) if a.requires_grad else None,
                sum_to(mul(g, a), sb) if b.requires_grad else None)

    return Tensor._node(data, "mul", (a, b), vjp)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = _binary("div", np.divide, a, b)
    sa, sb = a.shape, b.shape
    return Tensor._node(
        data, "div", (a, b),
        lambda g, out: (sum_to(div(g, b), sa), sum_to(neg(div(mul(g, out), b)), sb)),
    )


def safe_div(a, b) -> Tensor:
    """``a / b`` with the convention that the result is 0 wherever ``b == 0``."""
    a, b = as_tensor(a), as_tensor(b)
    _binary("safe_div", np.add, a, b)
    sa, sb = a.shape, b.shape
    zero = b.data == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        data = np.where(zero, 0.0, a.data / np.where(zero, 1.0, b.data))
    return Tensor._node(
        data, "safe_div", (a, b),
        lambda g, out: (sum_to(safe_div(g, b), sa),
                        sum_to(neg(safe_div(mul(g, out), b)), sb)),
    )


def tanh(a) -> Tensor:
    a = as_tensor(a)
    return Tensor._node(np.tanh(a.data), "tanh", (a,), lambda g, out: (tanh_grad(g, out),))


def tanh_grad(g, y) -> Tensor:
    """``g * (1 - y^2)``: the tanh backward rule as one differentiable node."""
    g, y = as_tensor(g), as_tensor(y)
    data = np.asarray(y.data * y.data)
    np.subtract(1.0, data, out=data)
    data *= g.data

    def vjp(h, out):
        return (tanh_grad(h, y) if g.requires_grad else None,
                mul(mul(h, g), mul(y, -2.0)) if y.requires_grad else None)

    return Tensor._node(data, "tanh_grad", (g, y), vjp)


def square(a) -> Tensor:
    a = as_tensor(a)
    return Tensor._node(a.data * a.data, "square", (a,),
                        lambda g, out: (mul(g, mul(a, 2.0)),))


def sqrt(a) -> Tensor:
    """Square root; the derivative at 0 is taken as 0 (subgradient)."""
    a = as_tensor(a)
    if np.any(a.data < 0):
        raise ValueError("sqrt of negative value")
    return Tensor._node(np.sqrt(a.data), "sqrt", (a,),
                        lambda g, out: (safe_div(g, mul(out, 2.0)),))


def tabs(a) -> Tensor:
    a = as_tensor(a)
    sign = Tensor(np.sign(a.data))
    return Tensor._node(np.abs(a.data), "abs", (a,), lambda g, out: (mul(g, sign),))


# -- linear algebra and reductions ----------------------------------------

def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def vjp(g, out):
        return (matmul(g, transpose(b)) if a.requires_grad else None,
                matmul(transpose(a), g) if b.requires_grad else None)

    return Tensor._node(a.data @ b.data, "matmul", (a, b), vjp)


def linear(x, w, b) -> Tensor:
    """Affine map ``x @ w + b`` for a batch of rows ``x``."""
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0] or b.shape != (w.shape[1],):
        raise DimensionError(
            f"linear: incompatible shapes x{x.shape}, w{w.shape}, b{b.shape}")
    data = x.data @ w.data
    data += b.data

    def vjp(g, out):
        return (matmul(g, transpose(w)) if x.requires_grad else None,
                matmul(transpose(x), g) if w.requires_grad else None,
                tsum(g, 0) if b.requires_grad else None)

    return Tensor._node(data, "linear", (x, w, b), vjp)


def transpose(a) -> Tensor:
    a = as_tensor(a)
    if a.ndim != 2:
        raise DimensionError(f"transpose: expected 2-d tensor, got shape {a.shape}")
    return Tensor._node(a.data.T, "transpose", (a,),
                        lambda g, out: (transpose(g),))


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    src = a.shape
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise DimensionError(f"reshape: cannot reshape {src} to {tuple(shape)}") from None
    return Tensor._node(data, "reshape", (a,), lambda g, out: (reshape(g, src),))


def tsum(a, axis: int | None = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    src = a.shape
    if axis is None:
        data = np.asarray(a.data.sum())
        if keepdims:
            data = data.reshape((1,) * a.ndim)

        def vjp(g, out):
            return (broadcast_to(reshape(g, (1,) * len(src)), src),)
    else:
        if not -a.ndim <= axis < a.ndim:
            raise DimensionError(f"sum: axis {axis} out of range for shape {src}")
        axis = axis % a.ndim
        data = a.data.sum(axis=axis, keepdims=keepdims)
        kept = src[:axis] + (1,) + src[axis + 1:]

        def vjp(g, out):
            return (broadcast_to(reshape(g, kept), src),)
    return Tensor._node(data, "sum", (a,), vjp)


def mean(a, axis: int | None = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.size if axis is None else a.shape[axis]
    if count == 0:
        raise DimensionError("mean: empty reduction")
    return mul(tsum(a, axis, keepdims), 1.0 / count)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise DimensionError("concat: no inputs")
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise DimensionError(f"concat: {exc}") from None
    axis = axis % data.ndim
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def vjp(g, out):
        parts = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(int(lo), int(hi))
            parts.append(getitem(g, tuple(idx)))
        return tuple(parts)

    return Tensor._node(data, "concat", tuple(tensors), vjp)


def getitem(a, index) -> Tensor:
    a = as_tensor(a)
    try:
        data = a.data[index]
    except IndexError as exc:
        raise DimensionError(f"slice: {exc}") from None
    src = a.shape
    return Tensor._node(np.array(data, dtype=np.float64), "slice", (a,),
                        lambda g, out: (scatter(g, index, src),))


def scatter(g, index, shape) -> Tensor:
    """Adjoint of slicing: place ``g`` at ``index`` inside zeros of ``shape``."""
    g = as_tensor(g)
    data = np.zeros(shape)
    np.add.at(data, index, g.data)
    return Tensor._node(data, "scatter", (g,), lambda h, out: (getitem(h, index),))


def interpolate(a, b, eps) -> Tensor:
    """``eps * a + (1 - eps) * b`` with ``eps`` broadcast against the rows."""
    eps = as_tensor(eps)
    return add(mul(eps, a), mul(sub(1.0, eps), b))


# -- differentiation ------------------------------------------------------

def _topological(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in reversed(node.parents):
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def grad(output: Tensor, wrt: Sequence[Tensor], create_graph: bool = False) -> list[Tensor]:
    """Return ``d output / d t`` for each ``t`` in ``wrt``.

    ``output`` must hold a single value.  Tensors in ``wrt`` must require
    gradients; those the output does not depend on get exact zeros.  With
    ``create_graph`` the returned gradients are themselves differentiable.
    """
    if output.size != 1:
        raise ContractError(f"grad: output must be scalar, got shape {output.shape}")
    for i, t in enumerate(wrt):
        if not isinstance(t, Tensor) or not t.requires_grad:
            raise GraphLookupError(f"grad: wrt[{i}] is not part of a differentiable graph")
    if not output.requires_grad:
        return [Tensor(np.zeros(t.shape)) for t in wrt]

    keep = {id(t) for t in wrt}
    ctx = contextlib.nullcontext() if create_graph else no_grad()
    with ctx:
        grads: dict[int, Tensor] = {id(output): Tensor(np.ones(output.shape))}
        for node in reversed(_topological(output)):
            if node.vjp is None:
                continue
            key = id(node)
            g = grads.get(key) if key in keep else grads.pop(key, None)
            if g is None:
                continue
            for parent, pg in zip(node.parents, node.vjp(g, node)):
                if pg is None or not parent.requires_grad:
                    continue
                pk = id(parent)
                grads[pk] = add(grads[pk], pg) if pk in grads else pg
        out = []
        for t in wrt:
            g = grads.get(id(t))
            out.append(g if g is not None else Tensor(np.zeros(t.shape)))
        return out


def input_gradient_norm(output: Tensor, x: Tensor) -> Tensor:
    """Euclidean norm of ``d output / d x``, kept on the graph."""
    (g,) = grad(output, [x], create_graph=True)
    return sqrt(tsum(square(g)))


def row_gradient_norms(output: Tensor, x: Tensor) -> Tensor:
    """Per-row norms of ``d output / d x`` for a 2-d ``x``.

    With ``output = sum_i f(x_i)`` row ``i`` of the gradient is ``f'(x_i)``,
    so this gives one input-gradient norm per batch element.
    """
    (g,) = grad(output, [x], create_graph=True)
    return sqrt(tsum(square(g), axis=1))


class Graph:
    """A traced computation with fixed input shapes.

    ``fn`` receives one :class:`Tensor` per declared input and returns a
    tensor or a sequence of tensors.
    """

    def __init__(self, fn: Callable[..., Tensor | Sequence[Tensor]],
                 input_shapes: Sequence[tuple[int, ...]]):
        self.fn = fn
        self.input_shapes = [tuple(s) for s in input_shapes]
        self.inputs: list[Tensor] = []
        self.outputs: list[Tensor] = []

    def forward(self, inputs: Sequence) -> list[Tensor]:
        if len(inputs) != len(self.input_shapes):
            raise DimensionError(
                f"graph expects {len(self.input_shapes)} inputs, got {len(inputs)}")
        wrapped = []
        for i, (value, shape) in enumerate(zip(inputs, self.input_shapes)):
            t = value if isinstance(value, Tensor) else Tensor(value, requires_grad=True)
            if t.shape != shape:
                raise DimensionError(f"input[{i}]: expected shape {shape}, got {t.shape}")
            wrapped.append(t)
        out = self.fn(*wrapped)
        self.inputs = wrapped
        self.outputs = [out] if isinstance(out, Tensor) else list(out)
        return self.outputs

    def nodes(self) -> list[Tensor]:
        """Recorded nodes in topological order (inputs before their users)."""
        order: list[Tensor] = []
        seen: set[int] = set()
        for out in self.outputs:
            for node in _topological(out) if out.requires_grad else [out]:
                if id(node) not in seen:
                    seen.add(id(node))
                    order.append(node)
        return order

    def backward(self, output: Tensor, wrt: Sequence[Tensor],
                 create_graph: bool = True) -> list[Tensor]:
        return grad(output, wrt, create_graph=create_graph)
