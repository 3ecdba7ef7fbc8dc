"""Dense float64 tensors with reverse-mode automatic differentiation.

Every operation records a backward closure on the freshly built graph, so the
tape is implicit in the tensor links and is rebuilt on each forward pass.
Gradients accumulate additively, which makes shared subexpressions correct by
construction. Only first-order gradients are supported.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "backward",
    "concat",
    "relu",
    "sigmoid",
    "log",
    "clip",
    "row_softmax",
    "masked_row_softmax",
    "layer_norm",
    "frobenius_sq",
    "row_l2_norm",
    "row_normalize",
    "cosine_similarity_matrix",
    "binary_cross_entropy",
    "dropout",
    "gather_rows",
    "scatter_add_rows",
    "gather_pairs",
    "scatter_pairs",
    "straight_through",
]


class Tensor:
    """A dense float64 array plus an optional gradient accumulator."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    # -- introspection -----------------------------------------------------

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
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        return _add(self, _wrap(other))

    __radd__ = __add__

    def __sub__(self, other):
        return _sub(self, _wrap(other))

    def __rsub__(self, other):
        return _sub(_wrap(other), self)

    def __mul__(self, other):
        return _mul(self, _wrap(other))

    __rmul__ = __mul__

    def __neg__(self):
        return _mul(self, _wrap(-1.0))

    def __matmul__(self, other):
        return _matmul(self, other)

    def sum(self, axis: int | None = None, keepdims: bool = False) -> "Tensor":
        return _sum(self, axis, keepdims)

    def mean(self, axis: int | None = None) -> "Tensor":
        n = self.size if axis is None else self.shape[axis]
        return _sum(self, axis, False) * (1.0 / n)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return _reshape(self, shape)

    def transpose(self) -> "Tensor":
        return _transpose(self)

    @property
    def T(self) -> "Tensor":
        return _transpose(self)

    def backward(self) -> None:
        backward(self)


# ---------------------------------------------------------------------------
# graph plumbing
# ---------------------------------------------------------------------------


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def _result(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    g = _unbroadcast(g, t.data.shape)
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    # Sum the gradient over axes that were broadcast in the forward pass.
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def backward(loss: Tensor) -> None:
    """Accumulate dloss/dx into every reachable tensor with requires_grad."""
    if loss.size != 1:
        raise ValueError(f"backward() needs a scalar loss, got shape {loss.shape}")
    # Iterative DFS topological order; recursion would overflow on deep graphs.
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen and p.requires_grad:
                stack.append((p, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


# ---------------------------------------------------------------------------
# elementwise and linear algebra ops
# ---------------------------------------------------------------------------


def _add(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        _accum(a, g)
        _accum(b, g)

    return _result(a.data + b.data, (a, b), bw)


def _sub(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        _accum(a, g)
        _accum(b, -g)

    return _result(a.data - b.data, (a, b), bw)


def _mul(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        _accum(a, g * b.data)
        _accum(b, g * a.data)

    return _result(a.data * b.data, (a, b), bw)


def _matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul expects 2-d operands, got {a.shape} @ {b.shape}")

    def bw(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    return _result(a.data @ b.data, (a, b), bw)


def _transpose(a: Tensor) -> Tensor:
    def bw(g):
        _accum(a, g.T)

    return _result(a.data.T, (a,), bw)


def _reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    old = a.data.shape

    def bw(g):
        _accum(a, g.reshape(old))

    return _result(a.data.reshape(shape), (a,), bw)


def _sum(a: Tensor, axis: int | None, keepdims: bool) -> Tensor:
    def bw(g):
        if axis is None:
            _accum(a, np.broadcast_to(g, a.data.shape).copy())
        else:
            ge = g if keepdims else np.expand_dims(g, axis)
            _accum(a, np.broadcast_to(ge, a.data.shape).copy())

    return _result(a.data.sum(axis=axis, keepdims=keepdims), (a,), bw)


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    datas = [t.data for t in tensors]
    sizes = [d.shape[axis] for d in datas]
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            _accum(t, piece)

    return _result(np.concatenate(datas, axis=axis), tuple(tensors), bw)


def relu(a: Tensor) -> Tensor:
    keep = a.data > 0

    def bw(g):
        _accum(a, g * keep)

    return _result(np.where(keep, a.data, 0.0), (a,), bw)


def sigmoid(a: Tensor) -> Tensor:
    y = 1.0 / (1.0 + np.exp(-a.data))

    def bw(g):
        _accum(a, g * y * (1.0 - y))

    return _result(y, (a,), bw)


def log(a: Tensor) -> Tensor:
    def bw(g):
        _accum(a, g / a.data)

    return _result(np.log(a.data), (a,), bw)


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    # Gradient is zero outside the open interval, matching the subgradient of
    # the clamp at its boundaries.
    inside = (a.data > lo) & (a.data < hi)

    def bw(g):
        _accum(a, g * inside)

    return _result(np.clip(a.data, lo, hi), (a,), bw)


# ---------------------------------------------------------------------------
# softmax family
# ---------------------------------------------------------------------------


def row_softmax(a: Tensor) -> Tensor:
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def bw(g):
        dot = (g * y).sum(axis=-1, keepdims=True)
        _accum(a, y * (g - dot))

    return _result(y, (a,), bw)


def masked_row_softmax(a: Tensor, mask: np.ndarray) -> Tensor:
    """Row softmax restricted to True positions of ``mask``; others get 0.

    Rows with an empty mask come out all-zero rather than raising.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != a.data.shape:
        raise ValueError(f"mask shape {mask.shape} != input shape {a.data.shape}")
    neg = np.where(mask, a.data, -np.inf)
    rowmax = neg.max(axis=-1, keepdims=True)
    rowmax = np.where(np.isfinite(rowmax), rowmax, 0.0)
    e = np.where(mask, np.exp(neg - rowmax), 0.0)
    denom = e.sum(axis=-1, keepdims=True)
    y = np.divide(e, denom, out=np.zeros_like(e), where=denom > 0)

    def bw(g):
        dot = (g * y).sum(axis=-1, keepdims=True)
        _accum(a, y * (g - dot))

    return _result(y, (a,), bw)


def layer_norm(a: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-row normalization over the last axis with learnable gain and bias."""
    mu = a.data.mean(axis=-1, keepdims=True)
    xc = a.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv

    def bw(g):
        _accum(gain, (g * xhat).sum(axis=tuple(range(g.ndim - 1))))
        _accum(bias, g.sum(axis=tuple(range(g.ndim - 1))))
        gx = g * gain.data
        d = a.data.shape[-1]
        # d xhat / d x backprop for per-row standardization
        ga = inv * (gx - gx.mean(axis=-1, keepdims=True)
                    - xhat * (gx * xhat).mean(axis=-1, keepdims=True))
        _accum(a, ga)

    return _result(xhat * gain.data + bias.data, (a, gain, bias), bw)


# ---------------------------------------------------------------------------
# norms and similarity
# ---------------------------------------------------------------------------


def frobenius_sq(a: Tensor) -> Tensor:
    def bw(g):
        _accum(a, 2.0 * g * a.data)

    return _result(np.asarray((a.data * a.data).sum()), (a,), bw)


def row_l2_norm(a: Tensor) -> Tensor:
    """Euclidean norm of each row; zero rows get norm 0 and zero gradient."""
    norms = np.sqrt((a.data * a.data).sum(axis=-1))

    def bw(g):
        safe = np.where(norms > 0, norms, 1.0)
        _accum(a, (g / safe)[..., None] * a.data)

    return _result(norms, (a,), bw)


def row_normalize(a: Tensor) -> Tensor:
    """Scale each row to unit norm; zero rows stay zero (gradient 0 there)."""
    norms = np.sqrt((a.data * a.data).sum(axis=-1, keepdims=True))
    nonzero = norms > 0
    safe = np.where(nonzero, norms, 1.0)
    y = a.data / safe

    def bw(g):
        dot = (g * y).sum(axis=-1, keepdims=True)
        _accum(a, np.where(nonzero, (g - y * dot) / safe, 0.0))

    return _result(y, (a,), bw)


def cosine_similarity_matrix(z: Tensor) -> Tensor:
    """All-pairs cosine similarity of rows; zero rows contribute 0."""
    rn = row_normalize(z)
    return rn @ rn.T


def binary_cross_entropy(p: Tensor, targets: np.ndarray, eps: float = 1e-6) -> Tensor:
    """Summed BCE of probabilities ``p`` against 0/1 ``targets``.

    Probabilities are clamped to [eps, 1-eps] before the logs; gradient is
    cut at the clamp boundaries.
    """
    t = np.asarray(targets, dtype=np.float64)
    pc = clip(p, eps, 1.0 - eps)
    loss = Tensor(t) * log(pc) + Tensor(1.0 - t) * log(1.0 - pc)
    return -loss.sum()


# ---------------------------------------------------------------------------
# structured data movement
# ---------------------------------------------------------------------------


def dropout(a: Tensor, rate: float, train: bool, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout; identity when not training or rate is 0."""
    if not train or rate <= 0.0:
        return a
    if rng is None:
        raise ValueError("dropout in train mode needs an rng")
    scale = (rng.random(a.data.shape) >= rate) / (1.0 - rate)

    def bw(g):
        _accum(a, g * scale)

    return _result(a.data * scale, (a,), bw)


def gather_rows(a: Tensor, idx: np.ndarray) -> Tensor:
    idx = np.asarray(idx, dtype=np.intp)

    def bw(g):
        if a.requires_grad:
            buf = np.zeros_like(a.data)
            np.add.at(buf, idx, g)
            _accum(a, buf)

    return _result(a.data[idx], (a,), bw)


def scatter_add_rows(values: Tensor, idx: np.ndarray, num_rows: int) -> Tensor:
    idx = np.asarray(idx, dtype=np.intp)
    out = np.zeros((num_rows,) + values.data.shape[1:], dtype=np.float64)
    np.add.at(out, idx, values.data)

    def bw(g):
        _accum(values, g[idx])

    return _result(out, (values,), bw)


def gather_pairs(a: Tensor, rows: np.ndarray, cols: np.ndarray) -> Tensor:
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)

    def bw(g):
        if a.requires_grad:
            buf = np.zeros_like(a.data)
            np.add.at(buf, (rows, cols), g)
            _accum(a, buf)

    return _result(a.data[rows, cols], (a,), bw)


def scatter_pairs(values: Tensor, rows: np.ndarray, cols: np.ndarray,
                  shape: tuple[int, int]) -> Tensor:
    """Scatter a vector of pair values into a dense matrix (duplicates add)."""
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    out = np.zeros(shape, dtype=np.float64)
    np.add.at(out, (rows, cols), values.data)

    def bw(g):
        _accum(values, g[rows, cols])

    return _result(out, (values,), bw)


def straight_through(soft: Tensor, threshold: float = 0.5) -> Tensor:
    """Forward a hard 0/1 threshold of ``soft``; backward passes through."""
    hard = (soft.data > threshold).astype(np.float64)

    def bw(g):
        _accum(soft, g)

    return _result(hard, (soft,), bw)
