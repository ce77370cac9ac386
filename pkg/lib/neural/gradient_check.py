"""Finite-difference gradient checking."""


# Imports
from typing import Callable, Dict, Sequence

import numpy as np

from lib.neural.tensor import Tensor


def numerical_grad(f: Callable[[], float], inputs: Sequence[np.ndarray],
                   eps: float = 1e-6) -> list:
    """Central finite differences of a scalar function.

    Every element of every input is perturbed in place by ``+eps`` and
    ``-eps`` and restored afterwards.

    Parameters
    ----------
    f : Callable[[], float]
        Function with no arguments that reads ``inputs`` and returns a
        scalar.
    inputs : Sequence[np.ndarray]
        Float arrays, preferably float64.
    eps : float
        Step size.

    Returns
    -------
    list
        One gradient array per input.
    """
    grads = []
    for x in inputs:
        if x.dtype.kind != 'f':
            raise TypeError(f'Expected a float array, got {x.dtype}')
        grad = np.zeros(x.shape, dtype=np.float64)
        it = np.nditer(x, flags=['multi_index'])
        for _ in it:
            idx = it.multi_index
            orig = x[idx].copy()
            x[idx] = orig + eps
            plus = float(f())
            x[idx] = orig - eps
            minus = float(f())
            x[idx] = orig
            grad[idx] = (plus - minus) / (2.0 * eps)
        grads.append(grad)
    return grads


def relative_error(analytic: np.ndarray, numeric: np.ndarray,
                   floor: float = 1e-8) -> float:
    """Largest elementwise ``|a - n| / max(|a|, |n|, floor)``."""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale, initial=0.0))


def check_gradients(loss: Callable[[], Tensor], params: Dict[str, Tensor],
                    eps: float = 1e-6, atol: float = 1e-8) -> Dict[str, float]:
    """Compare backpropagated and numerical gradients.

    Parameters
    ----------
    loss : Callable[[], Tensor]
        Builds a scalar loss from ``params``.
    params : Dict[str, Tensor]
        Tensors to check, ideally float64.
    eps : float
        Finite-difference step.
    atol : float
        Differences below this are treated as zero.

    Returns
    -------
    Dict[str, float]
        Relative error per parameter.
    """
    for p in params.values():
        p.zero_grad()
    loss().backward()
    analytic = {
        name: (p.grad if p.grad is not None else np.zeros_like(p.data))
        for name, p in params.items()
    }
    numeric = numerical_grad(
        lambda: loss().item(), [p.data for p in params.values()], eps
    )
    errors = {}
    for (name, a), n in zip(analytic.items(), numeric):
        close = np.abs(a - n) <= atol
        errors[name] = relative_error(np.where(close, 0.0, a),
                                      np.where(close, 0.0, n))
    return errors
