"""
Adam optimizer over module parameters.
"""
from __future__ import annotations

from typing import Dict, Iterable, List, Tuple

import numpy as np

from pace.tensor.core import Parameter


class Adam:
    """Adaptive moment estimation with bias correction."""

    def __init__(
        self,
        params: Iterable[Parameter],
        lr: float = 3e-4,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.params: List[Parameter] = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.betas
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g
            update = self.lr * (self.m[i] / c1) / (np.sqrt(self.v[i] / c2) + self.eps)
            p.data -= update.astype(p.data.dtype, copy=False)

    def state_dict(self) -> Dict[str, np.ndarray]:
        state = {"t": np.array(self.t)}
        for i in range(len(self.params)):
            state[f"m.{i}"] = self.m[i]
            state[f"v.{i}"] = self.v[i]
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        self.t = int(state["t"])
        for i in range(len(self.params)):
            self.m[i] = np.array(state[f"m.{i}"], copy=True)
            self.v[i] = np.array(state[f"v.{i}"], copy=True)
