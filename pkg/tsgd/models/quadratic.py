import math
from collections.abc import Iterator
from typing import Literal, Optional

import numpy as np
import numpy.typing as npt

from tsgd.models.batching import EpochBatcher
from tsgd.models.core import ParamVector, StochasticGradientOracle, as_param_vector
from tsgd.utils.exceptions import DimensionMismatchError, InvalidInputError

NoiseKind = Literal["gaussian", "bounded_uniform"]

# Half-width giving unit variance per coordinate.
UNIFORM_HALF_WIDTH = math.sqrt(3.0)


class QuadraticProblem(StochasticGradientOracle):
    """F(w) = 1/2 (w - w*)^T diag (w - w*) with additive gradient noise.

    A draw is either a standard noise vector eta (streaming mode) or, when
    `n_samples` is set, a batch of indices into a centred noise table fixed at
    construction, which turns the problem into a finite sum.
    """

    name = "quadratic"

    def __init__(
        self,
        matrix_diag: npt.ArrayLike,
        target: Optional[npt.ArrayLike] = None,
        noise_sigma: float = 0.0,
        noise_kind: NoiseKind = "gaussian",
        n_samples: Optional[int] = None,
        domain_radius: Optional[float] = None,
        seed: int = 0,
        noise_block: int = 1024,
    ):
        self.matrix_diag = as_param_vector(matrix_diag)
        if self.matrix_diag.size == 0:
            raise InvalidInputError("quadratic needs a non-empty diagonal")
        if np.any(self.matrix_diag <= 0):
            raise InvalidInputError("diagonal entries must be positive")
        d = self.matrix_diag.size
        self.target = np.zeros(d) if target is None else as_param_vector(target)
        if self.target.size != d:
            raise DimensionMismatchError(f"target has dimension {self.target.size}, diagonal {d}")
        if noise_sigma < 0:
            raise InvalidInputError("noise_sigma must be non-negative")
        if noise_kind not in ("gaussian", "bounded_uniform"):
            raise InvalidInputError(f"unknown noise kind {noise_kind!r}")
        if domain_radius is not None and domain_radius <= 0:
            raise InvalidInputError("domain_radius must be positive")
        self.noise_sigma = float(noise_sigma)
        self.noise_kind = noise_kind
        self.domain_radius = domain_radius
        self.noise_block = noise_block

        self.noise_table: Optional[np.ndarray] = None
        if n_samples is not None:
            if n_samples < 1:
                raise InvalidInputError("n_samples must be >= 1")
            table = self.standard_noise(np.random.default_rng(seed), n_samples)
            self.noise_table = table - table.mean(axis=0)

        # E||eta||^2 and E||eta||^4 of the standardized noise.
        if self.noise_table is not None:
            sq = np.sum(self.noise_table**2, axis=1)
            self.noise_moment2 = float(sq.mean())
            self.noise_moment4 = float((sq**2).mean())
            self.noise_sup = float(np.sqrt(sq.max()))
        elif noise_kind == "gaussian":
            self.noise_moment2 = float(d)
            self.noise_moment4 = float(d * (d + 2))
            self.noise_sup = math.inf
        else:
            self.noise_moment2 = float(d)
            self.noise_moment4 = float(d * 9.0 / 5.0 + d * (d - 1))
            self.noise_sup = UNIFORM_HALF_WIDTH * math.sqrt(d)

    def standard_noise(self, rng: np.random.Generator, count: int) -> np.ndarray:
        shape = (count, self.matrix_diag.size)
        if self.noise_kind == "gaussian":
            return rng.standard_normal(shape)
        return rng.uniform(-UNIFORM_HALF_WIDTH, UNIFORM_HALF_WIDTH, shape)

    def dimension(self) -> int:
        return self.matrix_diag.size

    @property
    def n_samples(self) -> Optional[int]:
        return None if self.noise_table is None else self.noise_table.shape[0]

    @property
    def w_star(self) -> ParamVector:
        return self.target.copy()

    @property
    def f_star(self) -> float:
        return 0.0

    def objective(self, w: ParamVector) -> float:
        diff = w - self.target
        return 0.5 * float(np.dot(self.matrix_diag * diff, diff))

    def mean_gradient(self, w: ParamVector) -> ParamVector:
        return self.matrix_diag * (w - self.target)

    def full_gradient(self, w: ParamVector) -> ParamVector:
        if self.noise_table is None:
            return self.mean_gradient(w)
        return self.mean_gradient(w) + self.noise_sigma * self.noise_table.mean(axis=0)

    def gradient_at(self, draw: np.ndarray, w: ParamVector) -> ParamVector:
        if self.noise_table is not None:
            eta = self.noise_table[np.asarray(draw, dtype=np.intp)].mean(axis=0)
        else:
            eta = draw
        return self.mean_gradient(w) + self.noise_sigma * eta

    def draws(self, rng: np.random.Generator, batch_size: Optional[int] = None) -> Iterator[np.ndarray]:
        if self.noise_table is not None:
            yield from EpochBatcher(self.n_samples, batch_size or 1, rng)
            return
        while True:
            yield from self.standard_noise(rng, self.noise_block)
