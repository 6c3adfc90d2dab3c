"""Numeric building blocks shared by every problem and by the runner."""

from abc import ABC, abstractmethod
from collections.abc import Iterator
from typing import Any, Optional

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field

from tsgd.utils.exceptions import NonFiniteError

ParamVector = npt.NDArray[np.float64]
Draw = Any

# Stream id reserved for drawing a shared random initial value.
INIT_STREAM_ID = 2**64 - 1


def ensure_finite(v: np.ndarray, what: str = "vector") -> None:
    if not np.isfinite(v).all():
        raise NonFiniteError(f"{what} contains NaN or Inf")


def as_param_vector(values: npt.ArrayLike) -> ParamVector:
    """Copy values into a contiguous 1-D float64 vector and check finiteness."""
    vector = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    ensure_finite(vector)
    return vector


class RngStream(BaseModel):
    """One reproducible random stream per sample path.

    Streams share a master seed and differ in `stream_id`; the generator is a
    counter-based Philox keyed through a spawned `SeedSequence`, so distinct ids
    give independent sequences and identical ids replay bit for bit.
    """

    model_config = ConfigDict(frozen=True)

    seed: int = Field(..., ge=0, lt=2**64)
    stream_id: int = Field(0, ge=0, lt=2**64)

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(sequence))


class StochasticGradientOracle(ABC):
    """Source of per-draw gradients of F(w) = E[f(xi, w)].

    Implementations are immutable after construction, so one instance can be
    shared by every sample-path worker.
    """

    name: str = "oracle"

    @abstractmethod
    def dimension(self) -> int:
        ...

    @abstractmethod
    def gradient_at(self, draw: Draw, w: ParamVector) -> ParamVector:
        """Gradient of f(xi, .) at w for one draw; deterministic given (draw, w)."""

    @abstractmethod
    def draws(self, rng: np.random.Generator, batch_size: Optional[int] = None) -> Iterator[Draw]:
        """Endless iterator of draws xi_1, xi_2, ... consumed by one sample path."""

    def objective(self, w: ParamVector) -> float:
        raise NotImplementedError(f"{self.name} has no closed-form objective")

    def full_gradient(self, w: ParamVector) -> ParamVector:
        raise NotImplementedError(f"{self.name} is not a finite sum")

    @property
    def n_samples(self) -> Optional[int]:
        """Number of components of a finite-sum problem, None otherwise."""
        return None

    @property
    def w_star(self) -> Optional[ParamVector]:
        """Exact minimizer when known analytically."""
        return None

    @property
    def f_star(self) -> Optional[float]:
        return None
