"""Balanced sampling across datasets of different sizes."""


# Imports
from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

import numpy as np


# Constants
EXPONENT = 0.3


@dataclass(frozen=True)
class SamplingPlan:
    """Dataset probabilities ``(n_i / sum n) ** 0.3``, normalized.

    Attributes
    ----------
    sizes : Tuple[int, ...]
        Dataset sizes.
    exponent : float
        Balancing exponent.
    """

    sizes: Tuple[int, ...]
    exponent: float = EXPONENT

    def __post_init__(self):
        if not self.sizes:
            raise ValueError('Balanced sampling needs at least one dataset')
        if any(n <= 0 for n in self.sizes):
            raise ValueError(f'Dataset sizes must be positive: {self.sizes}')

    @property
    def weights(self) -> np.ndarray:
        """Unnormalized ``(n_i / sum n) ** exponent``."""
        sizes = np.asarray(self.sizes, dtype=np.float64)
        return (sizes / sizes.sum()) ** self.exponent

    @property
    def probabilities(self) -> np.ndarray:
        w = self.weights
        return w / w.sum()


def balanced_sampler(sizes: Sequence[int], rng: np.random.Generator,
                     exponent: float = EXPONENT) -> Iterator[Tuple[int, int]]:
    """Endless stream of ``(dataset, example)`` indices.

    Parameters
    ----------
    sizes : Sequence[int]
        Example count of every dataset.
    rng : np.random.Generator
        Random generator.
    exponent : float
        Balancing exponent.

    Yields
    ------
    Tuple[int, int]
        Dataset index drawn by the plan, then a uniform example in it.
    """
    plan = SamplingPlan(tuple(int(n) for n in sizes), exponent)
    p = plan.probabilities
    while True:
        dataset = int(rng.choice(len(p), p=p))
        yield dataset, int(rng.integers(plan.sizes[dataset]))
