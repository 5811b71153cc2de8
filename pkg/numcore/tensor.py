"""
Dense float64 tensors, trainable parameters and the recording graph used for
reverse-mode differentiation.

Operations (see ``numcore.ops``) record themselves on the innermost active
``Graph``. Outside of any graph nothing is recorded, which is how inference,
beam search and finite differences run.
"""

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from numcore.errors import ContractError, DimensionError, NumericError

_local = threading.local()


def _graph_stack() -> List[Optional["Graph"]]:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = []
        _local.stack = stack
    return stack


def current_graph() -> Optional["Graph"]:
    """Return the innermost active graph of this thread, if any."""
    stack = _graph_stack()
    return stack[-1] if stack else None


@contextmanager
def no_grad():
    """Suspend recording inside an active graph."""
    stack = _graph_stack()
    stack.append(None)
    try:
        yield
    finally:
        stack.pop()


class Tensor:
    """Row-major float64 array with an optional gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_node")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        array = np.array(data, dtype=np.float64)
        if any(extent <= 0 for extent in array.shape):
            raise DimensionError("tensor", array.shape, detail="extents must be positive")
        self.data = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._node: Optional["Node"] = None

    @classmethod
    def _wrap(cls, array: np.ndarray) -> "Tensor":
        tensor = cls.__new__(cls)
        tensor.data = array
        tensor.grad = None
        tensor.requires_grad = False
        tensor.name = None
        tensor._node = None
        return tensor

    @classmethod
    def zeros(cls, *shape: int) -> "Tensor":
        return cls(np.zeros(shape))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single value, tensor has shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> "Tensor":
        return Tensor._wrap(self.data.copy())

    # Operator sugar; the implementations live in numcore.ops.
    def __add__(self, other: "Tensor") -> "Tensor":
        from numcore import ops
        return ops.add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        from numcore import ops
        return ops.sub(self, other)

    def __mul__(self, other) -> "Tensor":
        from numcore import ops
        if isinstance(other, Tensor):
            return ops.mul(self, other)
        return ops.scale(self, float(other))

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        from numcore import ops
        return ops.scale(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from numcore import ops
        return ops.matmul(self, other)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label})"


class Parameter(Tensor):
    """Named leaf tensor updated by the optimizer."""

    __slots__ = ()

    def __init__(self, data, name: str):
        super().__init__(data, requires_grad=True, name=name)

    def zero_grad(self) -> None:
        self.grad = None


@dataclass
class Node:
    """One recorded primitive: output, inputs and the vector-Jacobian product."""

    op: str
    output: Tensor
    parents: Tuple[Tensor, ...]
    backward_fn: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]
    graph: "Graph"


class Graph:
    """Tape of primitive operations in topological (execution) order."""

    def __init__(self):
        self.nodes: List[Node] = []
        self.leaves: Dict[int, Tensor] = {}
        self._differentiated = False

    def __enter__(self) -> "Graph":
        _graph_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _graph_stack().pop()

    def record(self, op: str, output: Tensor, parents: Tuple[Tensor, ...],
               backward_fn: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]) -> None:
        if self._differentiated:
            raise ContractError("cannot record on a graph that was already differentiated; call reset()")
        for parent in parents:
            if parent.requires_grad and parent._node is None:
                self.leaves.setdefault(id(parent), parent)
        output.requires_grad = True
        output._node = Node(op, output, parents, backward_fn, self)
        self.nodes.append(output._node)

    def reset(self) -> None:
        """Forget every recorded node so the graph can be reused."""
        for node in self.nodes:
            node.output._node = None
        self.nodes = []
        self.leaves = {}
        self._differentiated = False

    def backward(self, loss: Tensor) -> Dict[str, np.ndarray]:
        """Propagate d(loss)/d(leaf) into every leaf's ``grad`` buffer."""
        if self._differentiated:
            raise ContractError("backward() already ran on this graph; call reset() first")
        if loss.data.size != 1:
            raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
        if not np.isfinite(loss.data).all():
            raise NumericError(f"loss is not finite: {loss.data.reshape(-1)[0]}")
        if loss._node is None or loss._node.graph is not self:
            raise ContractError("loss was not produced inside this graph")

        for leaf in self.leaves.values():
            if leaf.grad is None:
                leaf.grad = np.zeros_like(leaf.data)

        adjoints: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self.nodes):
            upstream = adjoints.pop(id(node.output), None)
            if upstream is None:
                continue
            for parent, grad in zip(node.parents, node.backward_fn(upstream)):
                if grad is None or not parent.requires_grad:
                    continue
                if parent._node is None:
                    parent.grad += grad
                else:
                    key = id(parent)
                    adjoints[key] = adjoints[key] + grad if key in adjoints else grad

        self._differentiated = True
        return {leaf.name: leaf.grad for leaf in self.leaves.values() if leaf.name}


def record(op: str, data: np.ndarray, parents: Tuple[Tensor, ...],
           backward_fn: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]) -> Tensor:
    """Wrap ``data`` as an op output and record it when a graph is active."""
    output = Tensor._wrap(data)
    graph = current_graph()
    if graph is not None and any(parent.requires_grad for parent in parents):
        graph.record(op, output, parents, backward_fn)
    return output


class ParameterSet:
    """Ordered registry of named parameters."""

    def __init__(self):
        self._params: Dict[str, Parameter] = {}

    def add(self, name: str, data) -> Parameter:
        if name in self._params:
            raise ContractError(f"duplicate parameter name: {name}")
        param = Parameter(data, name)
        self._params[name] = param
        return param

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> List[str]:
        return list(self._params)

    def group(self, prefix: str) -> List[Parameter]:
        return [p for name, p in self._params.items() if name.startswith(prefix)]

    def num_values(self) -> int:
        return sum(p.size for p in self._params.values())

    def zero_grad(self) -> None:
        for param in self._params.values():
            param.grad = None

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self._params.items()}

    def restore(self, values: Dict[str, np.ndarray]) -> None:
        for name, array in values.items():
            param = self._params[name]
            if param.shape != array.shape:
                raise DimensionError(f"restore {name}", param.shape, array.shape)
            param.data[...] = array
