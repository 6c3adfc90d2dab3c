from dataclasses import dataclass

import numpy as np
from scipy import sparse

from tsgd.utils.exceptions import InvalidInputError


@dataclass(frozen=True)
class SparseDataset:
    """Binary classification data: CSR feature rows and +-1 labels."""

    matrix: sparse.csr_matrix
    labels: np.ndarray

    def __post_init__(self):
        if self.matrix.shape[0] < 1:
            raise InvalidInputError("Dataset must contain at least one sample")
        if self.labels.shape != (self.matrix.shape[0],):
            raise InvalidInputError(
                f"Expected {self.matrix.shape[0]} labels, got {self.labels.shape[0]}"
            )
        if not self.matrix.has_sorted_indices:
            self.matrix.sort_indices()

    @property
    def n_samples(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_features(self) -> int:
        return self.matrix.shape[1]

    def row(self, i: int) -> list[tuple[int, float]]:
        """Sorted (0-based index, value) pairs of sample i."""
        start, end = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return [
            (int(j), float(v))
            for j, v in zip(self.matrix.indices[start:end], self.matrix.data[start:end])
        ]

    def max_row_norm_sq(self) -> float:
        return float(self.matrix.multiply(self.matrix).sum(axis=1).max())
