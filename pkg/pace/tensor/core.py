"""
Dense tensors with reverse-mode automatic differentiation.

A `Tensor` wraps a numpy array. Every differentiable operation is a `Function`
subclass whose `apply` runs the forward pass on raw arrays and records itself on the
output so `backward` can walk the graph in reverse topological order.
"""
from __future__ import annotations

from typing import Any, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from pace.exceptions import ContractError, PaceRuntimeError

ArrayLike = Union[np.ndarray, float, int, Sequence[float]]

_default_dtype: type = np.float64


def set_default_dtype(dtype: Union[str, type]) -> None:
    """Select float64 (oracles, gradient checks) or float32 (training loops)."""
    global _default_dtype
    resolved = np.dtype(dtype).type
    if resolved not in (np.float64, np.float32):
        raise ContractError(f"unsupported tensor dtype {dtype}")
    _default_dtype = resolved


def get_default_dtype() -> type:
    return _default_dtype


class Function:
    """
    Base class for differentiable operations.

    `forward` receives the input arrays (plus keyword options) and returns the output
    array. `backward` receives dL/d(output) and returns one gradient per input, `None`
    where the input needs none. Which inputs receive gradients is fixed when the op is
    applied, so graphs built inside `Module.frozen` stay frozen.
    """

    def __init__(self, *inputs: "Tensor"):
        self.inputs = inputs
        self.needs_grad = tuple(t.requires_grad for t in inputs)

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs: Union["Tensor", ArrayLike], **kwargs: Any) -> "Tensor":
        tensors = tuple(as_tensor(x) for x in inputs)
        fn = cls(*tensors)
        out = fn.forward(*(t.data for t in tensors), **kwargs)
        requires_grad = any(t.requires_grad for t in tensors)
        return Tensor(out, requires_grad=requires_grad, _ctx=fn if requires_grad else None)

    @staticmethod
    def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
        """Sum out broadcast dimensions so `grad` matches `shape`."""
        if grad.shape == shape:
            return grad
        while grad.ndim > len(shape):
            grad = grad.sum(axis=0)
        for axis, size in enumerate(shape):
            if size == 1 and grad.shape[axis] != 1:
                grad = grad.sum(axis=axis, keepdims=True)
        return grad


class Tensor:
    """A dense array that can take part in differentiation."""

    __array_priority__ = 1000

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        dtype: Optional[type] = None,
        _ctx: Optional[Function] = None,
    ):
        self.data = np.asarray(data, dtype=dtype or _default_dtype)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._ctx = _ctx

    # --- properties ---

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._ctx is None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def __len__(self) -> int:
        return len(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single value, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(grad, dtype=self.data.dtype, copy=True)
        else:
            self.grad = self.grad + grad

    # --- arithmetic ---

    def __add__(self, other):
        from pace.tensor import functional as F
        return F.Add.apply(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from pace.tensor import functional as F
        return F.Sub.apply(self, other)

    def __rsub__(self, other):
        from pace.tensor import functional as F
        return F.Sub.apply(other, self)

    def __mul__(self, other):
        from pace.tensor import functional as F
        return F.Mul.apply(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from pace.tensor import functional as F
        return F.Div.apply(self, other)

    def __rtruediv__(self, other):
        from pace.tensor import functional as F
        return F.Div.apply(other, self)

    def __neg__(self):
        from pace.tensor import functional as F
        return F.Neg.apply(self)

    def __pow__(self, exponent: float):
        from pace.tensor import functional as F
        return F.Pow.apply(self, exponent=float(exponent))

    def __matmul__(self, other):
        from pace.tensor import functional as F
        return F.MatMul.apply(self, other)

    def __getitem__(self, index):
        from pace.tensor import functional as F
        return F.GetItem.apply(self, index=index)

    # --- reductions and elementwise ---

    def sum(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False):
        from pace.tensor import functional as F
        return F.Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False):
        if axis is None:
            count = self.data.size
        else:
            axes = (axis,) if isinstance(axis, int) else axis
            count = int(np.prod([self.data.shape[a] for a in axes]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def exp(self):
        from pace.tensor import functional as F
        return F.Exp.apply(self)

    def log(self):
        from pace.tensor import functional as F
        return F.Log.apply(self)

    def abs(self):
        from pace.tensor import functional as F
        return F.Abs.apply(self)

    def sqrt(self):
        from pace.tensor import functional as F
        return F.SafeSqrt.apply(self)

    def elu(self, alpha: float = 1.0):
        from pace.tensor import functional as F
        return F.Elu.apply(self, alpha=alpha)

    def relu(self):
        from pace.tensor import functional as F
        return F.LeakyRelu.apply(self, slope=0.0)

    def leaky_relu(self, slope: float = 0.2):
        from pace.tensor import functional as F
        return F.LeakyRelu.apply(self, slope=slope)

    def clamp(self, low: float, high: float):
        from pace.tensor import functional as F
        return F.Clamp.apply(self, low=low, high=high)

    def reshape(self, *shape: int):
        from pace.tensor import functional as F
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.Reshape.apply(self, shape=shape)

    def transpose(self, *axes: int):
        from pace.tensor import functional as F
        return F.Transpose.apply(self, axes=axes or None)

    @property
    def T(self) -> "Tensor":
        return self.transpose()


class Parameter(Tensor):
    """A trainable leaf tensor owned by a module."""

    def __init__(self, data: ArrayLike, dtype: Optional[type] = None):
        super().__init__(data, requires_grad=True, dtype=dtype)


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False)


def concat(tensors: Iterable[Tensor], axis: int = 0) -> Tensor:
    from pace.tensor import functional as F
    return F.Concat.apply(*tensors, axis=axis)


def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        if node._ctx is not None:
            for parent, needs in zip(node._ctx.inputs, node._ctx.needs_grad):
                if needs and id(parent) not in visited:
                    stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """
    Accumulate d(loss)/d(leaf) into `.grad` of every requires_grad leaf reachable
    from `loss`. Gradients add up across calls until `zero_grad`.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ContractError("loss is not connected to any tensor that requires grad")

    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological_order(loss)):
        grad = grads.pop(id(node), None)
        if grad is None:
            continue
        if node._ctx is None:
            if not np.all(np.isfinite(grad)):
                raise PaceRuntimeError(f"non-finite gradient reached a leaf of shape {node.shape}")
            node._accumulate(grad)
            continue
        for parent, needs, parent_grad in zip(node._ctx.inputs, node._ctx.needs_grad, node._ctx.backward(grad)):
            if parent_grad is None or not needs:
                continue
            key = id(parent)
            grads[key] = grads[key] + parent_grad if key in grads else parent_grad
