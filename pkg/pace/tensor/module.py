"""
Parameter containers.
"""
from __future__ import annotations

from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Tuple

import numpy as np

from pace.exceptions import ContractError, DimensionError
from pace.tensor.core import Parameter


class Module:
    """
    Base class for anything that owns parameters. Parameters are discovered by walking
    public attributes (parameters, sub-modules, layer params, lists and dicts of them).
    Non-trainable state goes through `register_buffer`.
    """

    def __init__(self) -> None:
        self._buffers: Dict[str, np.ndarray] = {}
        self.training = True

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        return self.forward(*args, **kwargs)

    def forward(self, *args: Any, **kwargs: Any) -> Any:
        raise NotImplementedError

    # --- discovery ---

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for name, value in vars(self).items():
            if not name.startswith("_"):
                yield from _walk_parameters(value, f"{prefix}{name}")

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def named_modules(self, prefix: str = "") -> Iterator[Tuple[str, "Module"]]:
        yield prefix.rstrip("."), self
        for name, value in vars(self).items():
            if name.startswith("_"):
                continue
            for child_name, child in _children(value, f"{prefix}{name}"):
                yield from child.named_modules(f"{child_name}.")

    def register_buffer(self, name: str, value: np.ndarray) -> None:
        self._buffers[name] = value

    def buffer(self, name: str) -> np.ndarray:
        return self._buffers[name]

    def named_buffers(self) -> Iterator[Tuple[str, np.ndarray]]:
        for module_name, module in self.named_modules():
            for name, value in module._buffers.items():
                yield (f"{module_name}.{name}" if module_name else name), value

    # --- state ---

    def state_dict(self) -> Dict[str, np.ndarray]:
        state = {name: p.data.copy() for name, p in self.named_parameters()}
        state.update({f"buffer:{name}": value.copy() for name, value in self.named_buffers()})
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        expected = {name: p for name, p in self.named_parameters()}
        buffers = dict(self._buffer_owners())
        missing = (set(expected) | {f"buffer:{b}" for b in buffers}) - set(state)
        if missing:
            raise ContractError(f"state is missing entries: {sorted(missing)[:5]}")
        for name, param in expected.items():
            value = np.asarray(state[name])
            if value.shape != param.shape:
                raise DimensionError(
                    f"parameter {name} expects shape {param.shape}, got {value.shape}"
                )
            param.data = value.astype(param.dtype, copy=True)
        for name, (owner, key) in buffers.items():
            owner._buffers[key] = np.array(state[f"buffer:{name}"], copy=True)

    def _buffer_owners(self) -> Iterator[Tuple[str, Tuple["Module", str]]]:
        for module_name, module in self.named_modules():
            for key in module._buffers:
                yield (f"{module_name}.{key}" if module_name else key), (module, key)

    # --- modes ---

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def train(self, mode: bool = True) -> "Module":
        for _, module in self.named_modules():
            module.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)

    @contextmanager
    def frozen(self):
        """Treat every parameter as a constant while building graphs inside the block."""
        params = self.parameters()
        flags = [p.requires_grad for p in params]
        for p in params:
            p.requires_grad = False
        try:
            yield self
        finally:
            for p, flag in zip(params, flags):
                p.requires_grad = flag


def _walk_parameters(value: Any, name: str) -> Iterator[Tuple[str, Parameter]]:
    from pace.tensor.layers import LayerParams

    if isinstance(value, Parameter):
        yield name, value
    elif isinstance(value, Module):
        yield from value.named_parameters(f"{name}.")
    elif isinstance(value, LayerParams):
        yield from _walk_parameters(value.weights, f"{name}.weights")
        if value.bias is not None:
            yield from _walk_parameters(value.bias, f"{name}.bias")
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            yield from _walk_parameters(item, f"{name}.{i}")
    elif isinstance(value, dict):
        for key, item in value.items():
            yield from _walk_parameters(item, f"{name}.{key}")


def _children(value: Any, name: str) -> Iterator[Tuple[str, Module]]:
    if isinstance(value, Module):
        yield name, value
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            yield from _children(item, f"{name}.{i}")
    elif isinstance(value, dict):
        for key, item in value.items():
            yield from _children(item, f"{name}.{key}")
