"""Adam optimizer over named parameters."""


# Imports
from typing import Dict

import numpy as np

from lib.neural.tensor import Tensor


class Adam:
    """Adam with bias correction.

    Parameters without a gradient are left untouched and their moments are
    not advanced.
    """

    def __init__(self, params: Dict[str, Tensor], lr: float,
                 betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = {n: np.zeros_like(p.data) for n, p in self.params.items()}
        self.v = {n: np.zeros_like(p.data) for n, p in self.params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def step(self):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            if p.grad is None:
                continue
            g = p.grad
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
            p.data = (p.data - update).astype(p.dtype)

    def state_dict(self) -> Dict[str, np.ndarray]:
        state = {f'm.{n}': a for n, a in self.m.items()}
        state.update({f'v.{n}': a for n, a in self.v.items()})
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray], t: int):
        for name in self.params:
            self.m[name] = np.asarray(state[f'm.{name}'],
                                      dtype=self.m[name].dtype).copy()
            self.v[name] = np.asarray(state[f'v.{name}'],
                                      dtype=self.v[name].dtype).copy()
        self.t = t
