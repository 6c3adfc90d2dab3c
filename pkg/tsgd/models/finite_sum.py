from abc import abstractmethod
from collections.abc import Iterator
from typing import Optional

import numpy as np

from tsgd.models.batching import EpochBatcher, default_batch_size
from tsgd.models.core import ParamVector, StochasticGradientOracle
from tsgd.models.dataset import SparseDataset
from tsgd.utils.exceptions import DimensionMismatchError, InvalidInputError


class FiniteSumProblem(StochasticGradientOracle):
    """Regularized empirical risk (1/N) sum_i loss_i(w) + (reg/2)||w||^2 over a dataset."""

    def __init__(
        self,
        dataset: SparseDataset,
        reg: float,
        batch_size: Optional[int] = None,
        fit_intercept: bool = True,
    ):
        if reg < 0:
            raise InvalidInputError("reg must be non-negative")
        self.dataset = dataset
        self.samples = dataset.matrix
        self.labels = dataset.labels
        self.reg = float(reg)
        self.fit_intercept = fit_intercept
        self.batch_size = default_batch_size(dataset.n_samples) if batch_size is None else batch_size
        if not 1 <= self.batch_size <= dataset.n_samples:
            raise InvalidInputError(
                f"batch_size must lie in [1, {dataset.n_samples}], got {self.batch_size}"
            )

    @property
    def n_samples(self) -> int:
        return self.dataset.n_samples

    def _batch(self, batch) -> np.ndarray:
        idx = np.asarray(batch, dtype=np.intp).reshape(-1)
        if idx.size == 0:
            raise InvalidInputError("batch must not be empty")
        if idx.min() < 0 or idx.max() >= self.n_samples:
            raise InvalidInputError(f"batch index out of range [0, {self.n_samples})")
        return idx

    def _check_w(self, w: ParamVector) -> None:
        if w.shape != (self.dimension(),):
            raise DimensionMismatchError(f"expected {self.dimension()} parameters, got {w.shape[0]}")

    @abstractmethod
    def value_and_gradient(self, batch, w: ParamVector) -> tuple[float, ParamVector]:
        ...

    def gradient_at(self, draw, w: ParamVector) -> ParamVector:
        return self.value_and_gradient(draw, w)[1]

    def full_gradient(self, w: ParamVector) -> ParamVector:
        return self.value_and_gradient(np.arange(self.n_samples), w)[1]

    def objective(self, w: ParamVector) -> float:
        return self.value_and_gradient(np.arange(self.n_samples), w)[0]

    def draws(self, rng: np.random.Generator, batch_size: Optional[int] = None) -> Iterator[np.ndarray]:
        return EpochBatcher(self.n_samples, batch_size or self.batch_size, rng)
