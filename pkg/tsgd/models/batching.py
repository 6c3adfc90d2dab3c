"""Epoch-based mini-batch sampling without replacement."""

from typing import Optional

import numpy as np

from tsgd.utils.exceptions import InvalidInputError


def default_batch_size(n_samples: int) -> int:
    """The 1 % rule: max(1, round(0.01 N))."""
    return max(1, round(0.01 * n_samples))


class EpochBatcher:
    """Shuffle the index set, hand out consecutive batches, reshuffle when exhausted.

    The final batch of an epoch may be shorter; it is emitted, not dropped.
    """

    def __init__(self, n_samples: int, batch_size: int, rng: np.random.Generator):
        if batch_size < 1:
            raise InvalidInputError("batch_size must be >= 1")
        if batch_size > n_samples:
            raise InvalidInputError(f"batch_size {batch_size} exceeds {n_samples} samples")
        self.n_samples = n_samples
        self.batch_size = batch_size
        self.rng = rng
        self.permutation: Optional[np.ndarray] = None
        self.cursor = n_samples
        self.epoch = 0

    def next_batch(self) -> np.ndarray:
        if self.cursor >= self.n_samples:
            self.permutation = self.rng.permutation(self.n_samples)
            self.cursor = 0
            self.epoch += 1
        batch = self.permutation[self.cursor:self.cursor + self.batch_size]
        self.cursor += batch.size
        return batch

    def __iter__(self):
        return self

    def __next__(self) -> np.ndarray:
        return self.next_batch()
