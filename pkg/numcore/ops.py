"""
Differentiable primitives. Every model equation is composed from these.

No implicit broadcasting: binary ops require identical shapes, and the only
scalar interaction is ``scale``.
"""

from typing import List, Sequence, Tuple

import numpy as np

from numcore.errors import DimensionError, NumericError, VocabularyError
from numcore.tensor import Tensor, record


def _require_matrix(op: str, *tensors: Tensor) -> None:
    for tensor in tensors:
        if tensor.data.ndim != 2:
            raise DimensionError(op, tensor.shape, detail="expected a 2-D tensor")


def _require_same(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise DimensionError(op, a.shape, b.shape)


def _require_finite(op: str, x: Tensor) -> None:
    if not np.isfinite(x.data).all():
        raise NumericError(f"{op}: input contains NaN or infinite values")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    _require_matrix("matmul", a, b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError("matmul", a.shape, b.shape)
    left, right = a.data, b.data

    def backward(g):
        return g @ right.T, left.T @ g

    return record("matmul", left @ right, (a, b), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    _require_same("add", a, b)
    return record("add", a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _require_same("sub", a, b)
    return record("sub", a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _require_same("mul", a, b)
    left, right = a.data, b.data
    return record("mul", left * right, (a, b), lambda g: (g * right, g * left))


def scale(a: Tensor, factor: float) -> Tensor:
    factor = float(factor)
    return record("scale", a.data * factor, (a,), lambda g: (g * factor,))


def concat_rows(tensors: Sequence[Tensor]) -> Tensor:
    _require_matrix("concat_rows", *tensors)
    width = tensors[0].shape[1]
    for tensor in tensors[1:]:
        if tensor.shape[1] != width:
            raise DimensionError("concat_rows", tensors[0].shape, tensor.shape)
    bounds = np.cumsum([t.shape[0] for t in tensors])[:-1]

    def backward(g):
        return np.split(g, bounds, axis=0)

    return record("concat_rows", np.concatenate([t.data for t in tensors], axis=0),
                  tuple(tensors), backward)


def concat_cols(tensors: Sequence[Tensor]) -> Tensor:
    _require_matrix("concat_cols", *tensors)
    height = tensors[0].shape[0]
    for tensor in tensors[1:]:
        if tensor.shape[0] != height:
            raise DimensionError("concat_cols", tensors[0].shape, tensor.shape)
    bounds = np.cumsum([t.shape[1] for t in tensors])[:-1]

    def backward(g):
        return np.split(g, bounds, axis=1)

    return record("concat_cols", np.concatenate([t.data for t in tensors], axis=1),
                  tuple(tensors), backward)


def transpose(a: Tensor) -> Tensor:
    _require_matrix("transpose", a)
    return record("transpose", a.data.T.copy(), (a,), lambda g: (g.T,))


def reshape(a: Tensor, shape: Tuple[int, ...]) -> Tensor:
    shape = tuple(int(e) for e in shape)
    if int(np.prod(shape)) != a.size:
        raise DimensionError("reshape", a.shape, shape)
    original = a.shape
    return record("reshape", a.data.reshape(shape).copy(), (a,),
                  lambda g: (g.reshape(original),))


def softmax_rows(x: Tensor) -> Tensor:
    _require_matrix("softmax_rows", x)
    _require_finite("softmax_rows", x)
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)

    def backward(g):
        return (probs * (g - (g * probs).sum(axis=1, keepdims=True)),)

    return record("softmax_rows", probs, (x,), backward)


def log_softmax_rows(x: Tensor) -> Tensor:
    _require_matrix("log_softmax_rows", x)
    _require_finite("log_softmax_rows", x)
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    probs = np.exp(out)

    def backward(g):
        return (g - probs * g.sum(axis=1, keepdims=True),)

    return record("log_softmax_rows", out, (x,), backward)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize each row to zero mean / unit variance, then apply gain and bias."""
    _require_matrix("layer_norm", x, gain, bias)
    width = x.shape[1]
    if gain.shape != (1, width) or bias.shape != (1, width):
        raise DimensionError("layer_norm", x.shape, gain.shape, bias.shape)
    _require_finite("layer_norm", x)
    centered = x.data - x.data.mean(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=1, keepdims=True) + eps)
    normed = centered * inv_std
    gain_data = gain.data

    def backward(g):
        d_normed = g * gain_data
        d_x = inv_std / width * (
            width * d_normed
            - d_normed.sum(axis=1, keepdims=True)
            - normed * (d_normed * normed).sum(axis=1, keepdims=True)
        )
        return (d_x,
                (g * normed).sum(axis=0, keepdims=True),
                g.sum(axis=0, keepdims=True))

    return record("layer_norm", normed * gain_data + bias.data, (x, gain, bias), backward)


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)
    return record("tanh", out, (x,), lambda g: (g * (1.0 - out ** 2),))


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    exp = np.exp(z[~positive])
    out[~positive] = exp / (1.0 + exp)
    return out


def sigmoid(x: Tensor) -> Tensor:
    out = _stable_sigmoid(x.data)
    return record("sigmoid", out, (x,), lambda g: (g * out * (1.0 - out),))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return record("relu", x.data * mask, (x,), lambda g: (g * mask,))


def embedding(table: Tensor, ids: Sequence[int]) -> Tensor:
    """Gather rows of ``table``; the result has one row per id."""
    _require_matrix("embedding", table)
    index = np.asarray(list(ids), dtype=np.int64)
    if index.size == 0:
        raise DimensionError("embedding", table.shape, (0,), detail="no ids given")
    rows = table.shape[0]
    bad = index[(index < 0) | (index >= rows)]
    if bad.size:
        raise VocabularyError(f"embedding: id {int(bad[0])} outside table of {rows} rows")

    def backward(g):
        grad = np.zeros((rows, table.shape[1]))
        np.add.at(grad, index, g)
        return (grad,)

    return record("embedding", table.data[index].copy(), (table,), backward)


def mean(x: Tensor) -> Tensor:
    count = x.size
    shape = x.shape
    return record("mean", np.array(x.data.mean()), (x,),
                  lambda g: (np.full(shape, float(g) / count),))


def sum_all(x: Tensor) -> Tensor:
    shape = x.shape
    return record("sum_all", np.array(x.data.sum()), (x,),
                  lambda g: (np.full(shape, float(g)),))


def l2_norm_sq(x: Tensor) -> Tensor:
    data = x.data
    return record("l2_norm_sq", np.array((data ** 2).sum()), (x,),
                  lambda g: (2.0 * float(g) * data,))


def pick(x: Tensor, rows: Sequence[int], cols: Sequence[int]) -> Tensor:
    """Gather single entries ``x[rows[k], cols[k]]`` into a 1×k row."""
    _require_matrix("pick", x)
    row_index = np.asarray(list(rows), dtype=np.int64)
    col_index = np.asarray(list(cols), dtype=np.int64)
    if row_index.size == 0 or row_index.shape != col_index.shape:
        raise DimensionError("pick", row_index.shape, col_index.shape)
    if (row_index.min() < 0 or row_index.max() >= x.shape[0]
            or col_index.min() < 0 or col_index.max() >= x.shape[1]):
        raise DimensionError("pick", x.shape, detail="index out of range")
    shape = x.shape

    def backward(g):
        grad = np.zeros(shape)
        np.add.at(grad, (row_index, col_index), g[0])
        return (grad,)

    return record("pick", x.data[row_index, col_index][None, :].copy(), (x,), backward)


def l2_normalize_rows(x: Tensor, eps: float = 1e-12) -> Tensor:
    _require_matrix("l2_normalize_rows", x)
    norms = np.maximum(np.sqrt((x.data ** 2).sum(axis=1, keepdims=True)), eps)
    out = x.data / norms

    def backward(g):
        return ((g - out * (g * out).sum(axis=1, keepdims=True)) / norms,)

    return record("l2_normalize_rows", out, (x,), backward)


def rows(x: Tensor) -> List[Tensor]:
    """Split a matrix into its 1×n rows (differentiably)."""
    _require_matrix("rows", x)
    if x.shape[0] == 1:
        return [x]
    return [pick_row(x, i) for i in range(x.shape[0])]


def pick_row(x: Tensor, index: int) -> Tensor:
    _require_matrix("pick_row", x)
    if not 0 <= index < x.shape[0]:
        raise DimensionError("pick_row", x.shape, detail=f"row {index} out of range")
    shape = x.shape

    def backward(g):
        grad = np.zeros(shape)
        grad[index] = g[0]
        return (grad,)

    return record("pick_row", x.data[index:index + 1].copy(), (x,), backward)
