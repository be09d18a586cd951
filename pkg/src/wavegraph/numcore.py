"""Minimal differentiable numeric core: tensors on a reverse-mode tape,
dense layers, losses, Adam, and finite-difference gradient checking.

Everything is 64-bit. The tape is implicit: each op records its parents
and a vector-Jacobian closure; ``backward`` walks the graph once in
reverse topological order. Calling ``backward`` twice on the same result
is rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("identity", "sigmoid", "tanh", "elu", "softsign", "exp")


class Tensor:
    """A float64 array participating in reverse-mode differentiation.

    ``grad`` accumulates during ``backward`` for every tensor on the path
    to a parameter (``requires_grad=True`` leaves and their descendants).
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp", "_done")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._vjp = None
        self._done = False

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        tag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{tag})"

    # operator sugar; all semantics live in the module-level op functions
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, _wrap(other))


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, vjp) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum ``g`` down to ``shape`` (reverse of numpy broadcasting)."""
    if g.shape == tuple(shape):
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise / linear ops


def add(a: Tensor, b: Tensor) -> Tensor:
    return _make(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    return _make(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def neg(a: Tensor) -> Tensor:
    return _make(-a.data, (a,), lambda g: (-g,))


def mul(a: Tensor, b: Tensor) -> Tensor:
    return _make(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape),
                            _unbroadcast(g * a.data, b.shape)))


def div(a: Tensor, b: Tensor) -> Tensor:
    return _make(a.data / b.data, (a, b),
                 lambda g: (_unbroadcast(g / b.data, a.shape),
                            _unbroadcast(-g * a.data / (b.data * b.data), b.shape)))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    return _make(a.data @ b.data, (a, b),
                 lambda g: (g @ b.data.T, a.data.T @ g))


def exp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)
    return _make(out_data, (a,), lambda g: (g * out_data,))


def log(a: Tensor) -> Tensor:
    return _make(np.log(a.data), (a,), lambda g: (g / a.data,))


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)
    return _make(out_data, (a,), lambda g: (g * (1.0 - out_data * out_data),))


def sigmoid(a: Tensor) -> Tensor:
    # split by sign to avoid overflow in exp
    x = a.data
    out_data = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                        np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    return _make(out_data, (a,), lambda g: (g * out_data * (1.0 - out_data),))


def elu(a: Tensor) -> Tensor:
    x = a.data
    out_data = np.where(x > 0, x, np.expm1(x))
    return _make(out_data, (a,),
                 lambda g: (g * np.where(x > 0, 1.0, out_data + 1.0),))


def softsign(a: Tensor) -> Tensor:
    denom = 1.0 + np.abs(a.data)
    return _make(a.data / denom, (a,), lambda g: (g / (denom * denom),))


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    inside = (a.data >= lo) & (a.data <= hi)
    return _make(np.clip(a.data, lo, hi), (a,), lambda g: (g * inside,))


def activation(name: str, x: Tensor) -> Tensor:
    if name == "identity":
        return x
    if name == "sigmoid":
        return sigmoid(x)
    if name == "tanh":
        return tanh(x)
    if name == "elu":
        return elu(x)
    if name == "softsign":
        return softsign(x)
    if name == "exp":
        return exp(x)
    raise ValueError(f"unknown activation {name!r}")


# ---------------------------------------------------------------------------
# reductions / structural ops


def sum_all(a: Tensor) -> Tensor:
    return _make(np.asarray(a.data.sum()), (a,),
                 lambda g: (np.broadcast_to(g, a.shape).copy(),))


def concat(tensors, axis: int = 1) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    offsets = np.cumsum([t.data.shape[axis] for t in tensors])[:-1]

    def vjp(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, offsets, axis=axis))

    return _make(data, tuple(tensors), vjp)


def gather_rows(a: Tensor, idx: np.ndarray) -> Tensor:
    idx = np.asarray(idx, dtype=np.intp)

    def vjp(g):
        out = np.zeros_like(a.data)
        np.add.at(out, idx, g)
        return (out,)

    return _make(a.data[idx], (a,), vjp)


def scatter_rows(a: Tensor, idx: np.ndarray, values: Tensor) -> Tensor:
    """Copy of ``a`` with rows ``idx`` replaced by ``values`` (idx unique)."""
    idx = np.asarray(idx, dtype=np.intp)
    data = a.data.copy()
    data[idx] = values.data

    def vjp(g):
        ga = g.copy()
        ga[idx] = 0.0
        return ga, g[idx]

    return _make(data, (a, values), vjp)


def segment_sum(a: Tensor, seg: np.ndarray, num_segments: int) -> Tensor:
    """Sum rows of ``a`` into ``num_segments`` buckets given by ``seg``."""
    seg = np.asarray(seg, dtype=np.intp)
    data = np.zeros((num_segments,) + a.data.shape[1:])
    np.add.at(data, seg, a.data)
    return _make(data, (a,), lambda g: (g[seg],))


def segment_softmax(z: Tensor, seg: np.ndarray, num_segments: int) -> Tensor:
    """Per-element softmax of rows of ``z`` within each segment.

    Shift-invariant: the per-segment max is subtracted as a constant, which
    leaves both the value and the gradient unchanged.
    """
    seg = np.asarray(seg, dtype=np.intp)
    zmax = np.full((num_segments,) + z.data.shape[1:], -np.inf)
    np.maximum.at(zmax, seg, z.data)
    shifted = sub(z, Tensor(zmax[seg]))
    e = exp(shifted)
    denom = segment_sum(e, seg, num_segments)
    return div(e, gather_rows(denom, seg))


# ---------------------------------------------------------------------------
# backward


def backward(loss: Tensor) -> None:
    """Populate ``grad`` for every tensor reachable from ``loss``.

    ``loss`` must be a scalar produced by recorded ops; running backward a
    second time on the same result is rejected.
    """
    if loss.data.size != 1:
        raise ValueError("backward requires a scalar loss")
    if not loss._parents:
        raise ValueError("backward on a detached node: no recorded computation")
    if loss._done:
        raise RuntimeError("backward already ran on this tape")
    loss._done = True

    # iterative topo sort: deep wave tapes overflow the recursion limit
    order = []
    visited = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in visited:
                stack.append((p, False))

    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._vjp is None or node.grad is None:
            continue
        grads = node._vjp(node.grad)
        for parent, g in zip(node._parents, grads):
            if g is None or not parent.requires_grad:
                continue
            if parent.grad is None:
                parent.grad = np.zeros_like(parent.data)
            parent.grad += g


# ---------------------------------------------------------------------------
# layers


def glorot_limit(fan_in: int, fan_out: int) -> float:
    return math.sqrt(6.0 / max(fan_in + fan_out, 1))


class DenseLayer:
    """Fully connected layer ``act(x @ W + b)`` with a fixed activation tag."""

    def __init__(self, in_dim: int, out_dim: int, activation: str = "identity",
                 rng: np.random.Generator | None = None):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        if rng is None:
            rng = np.random.default_rng(0)
        limit = glorot_limit(in_dim, out_dim)
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.activation = activation
        self.weight = Tensor(rng.uniform(-limit, limit, size=(in_dim, out_dim)),
                             requires_grad=True)
        self.bias = Tensor(np.zeros(out_dim), requires_grad=True)

    def preactivation(self, x: Tensor) -> Tensor:
        if x.data.ndim != 2 or x.data.shape[1] != self.in_dim:
            raise ValueError(
                f"dense layer expects [batch x {self.in_dim}], got {x.data.shape}")
        return add(matmul(x, self.weight), self.bias)

    def __call__(self, x: Tensor) -> Tensor:
        return activation(self.activation, self.preactivation(x))

    def parameters(self):
        return [("weight", self.weight), ("bias", self.bias)]


def dense_forward(layer: DenseLayer, x: Tensor) -> Tensor:
    return layer(x)


# ---------------------------------------------------------------------------
# losses

CROSS_ENTROPY_EPS = 1e-12


def _masked_mean(elem: Tensor, mask) -> Tensor:
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != elem.data.shape:
        raise ValueError(f"mask shape {mask.shape} != value shape {elem.data.shape}")
    count = mask.sum()
    if count == 0:
        raise ValueError("all-zero mask")
    return div(sum_all(mul(elem, Tensor(mask))), Tensor(count))


def cross_entropy_loss(p: Tensor, target, mask) -> Tensor:
    """Mean over masked elements of -[t*log(p) + (1-t)*log(1-p)].

    ``p`` is clamped to [eps, 1-eps] so saturated sigmoids cannot produce
    log(0).
    """
    t = np.asarray(target, dtype=np.float64)
    if t.shape != p.data.shape:
        raise ValueError(f"target shape {t.shape} != prediction shape {p.data.shape}")
    pc = clip(p, CROSS_ENTROPY_EPS, 1.0 - CROSS_ENTROPY_EPS)
    elem = neg(add(mul(Tensor(t), log(pc)), mul(Tensor(1.0 - t), log(sub(Tensor(1.0), pc)))))
    return _masked_mean(elem, mask)


def mse_loss(y: Tensor, target, mask) -> Tensor:
    """Mean over masked elements of (y - t)^2."""
    t = np.asarray(target, dtype=np.float64)
    if t.shape != y.data.shape:
        raise ValueError(f"target shape {t.shape} != prediction shape {y.data.shape}")
    diff = sub(y, Tensor(t))
    return _masked_mean(mul(diff, diff), mask)


# ---------------------------------------------------------------------------
# optimizer


class Adam:
    """Standard Adam with bias correction, updating parameters in place."""

    def __init__(self, params, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = [p if isinstance(p, tuple) else ("param", p) for p in params]
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = [np.zeros_like(t.data) for _, t in self.params]
        self._v = [np.zeros_like(t.data) for _, t in self.params]

    def step(self):
        for name, tensor in self.params:
            if tensor.grad is not None and not np.all(np.isfinite(tensor.grad)):
                bad = int(np.count_nonzero(~np.isfinite(tensor.grad)))
                raise FloatingPointError(
                    f"non-finite gradient in {name!r} ({bad} entries); step aborted")
        self.step_count += 1
        t = self.step_count
        for i, (_, tensor) in enumerate(self.params):
            g = tensor.grad
            if g is None:
                continue
            self._m[i] = self.beta1 * self._m[i] + (1.0 - self.beta1) * g
            self._v[i] = self.beta2 * self._v[i] + (1.0 - self.beta2) * g * g
            m_hat = self._m[i] / (1.0 - self.beta1 ** t)
            v_hat = self._v[i] / (1.0 - self.beta2 ** t)
            tensor.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self):
        for _, tensor in self.params:
            tensor.zero_grad()


def adam_step(state: Adam, *_ignored) -> None:
    """Apply one Adam update; parameters/gradients live on ``state``."""
    state.step()


# ---------------------------------------------------------------------------
# gradient checking


@dataclass
class GradCheckReport:
    per_param: dict = field(default_factory=dict)

    @property
    def max_rel_error(self) -> float:
        return max(self.per_param.values(), default=0.0)

    def passed(self, tolerance: float) -> bool:
        return self.max_rel_error < tolerance

    def __str__(self):
        lines = [f"  {name}: {err:.3e}" for name, err in sorted(self.per_param.items())]
        lines.append(f"  max: {self.max_rel_error:.3e}")
        return "\n".join(lines)


def grad_check(fn, params, h: float = 1e-5, rel_floor: float = 1e-6) -> GradCheckReport:
    """Compare backward gradients of ``fn() -> scalar Tensor`` against
    central finite differences for every entry of every named parameter.

    The relative error denominator is floored at ``rel_floor`` so that
    near-zero gradients compare on an absolute scale.
    """
    params = list(params)
    for _, t in params:
        t.zero_grad()
    loss = fn()
    backward(loss)
    analytic = {name: (np.zeros_like(t.data) if t.grad is None else t.grad.copy())
                for name, t in params}
    for _, t in params:
        t.zero_grad()

    report = GradCheckReport()
    for name, t in params:
        flat = t.data.reshape(-1)
        worst = 0.0
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + h
            f_plus = fn().item()
            flat[i] = keep - h
            f_minus = fn().item()
            flat[i] = keep
            numeric = (f_plus - f_minus) / (2.0 * h)
            a = analytic[name].reshape(-1)[i]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), rel_floor)
            worst = max(worst, rel)
        report.per_param[name] = worst
    return report
