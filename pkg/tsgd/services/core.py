"""Vector plumbing and the finite-sum gradient identity."""

from collections.abc import Sequence

import numpy as np
from scipy import linalg

from tsgd.models.core import ParamVector, StochasticGradientOracle, as_param_vector, ensure_finite  # noqa: F401
from tsgd.utils.exceptions import DimensionMismatchError, PartitionError


def ensure_same_dimension(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension {a.shape[0]} does not match {b.shape[0]}")


def vec_norm(v: ParamVector) -> float:
    """Euclidean norm; BLAS nrm2 keeps it overflow-safe for huge entries."""
    v = np.asarray(v, dtype=np.float64)
    ensure_finite(v)
    if v.size == 0:
        return 0.0
    return float(linalg.norm(v, check_finite=False))


def finite_sum_gradient_identity(
    oracle: StochasticGradientOracle,
    w: ParamVector,
    partition: Sequence[Sequence[int]],
) -> float:
    """Max-norm gap between the full gradient and the size-weighted batch mean."""
    n = oracle.n_samples
    if n is None:
        raise PartitionError(f"{oracle.name} is not a finite-sum problem")
    batches = [np.asarray(batch, dtype=np.intp) for batch in partition]
    if any(batch.size == 0 for batch in batches):
        raise PartitionError("empty batch in partition")
    covered = np.sort(np.concatenate(batches)) if batches else np.empty(0, dtype=np.intp)
    if covered.size != n or not np.array_equal(covered, np.arange(n)):
        raise PartitionError()

    full = oracle.full_gradient(w)
    mean = np.zeros_like(full)
    for batch in batches:
        mean += (batch.size / n) * oracle.gradient_at(batch, w)
    return float(np.max(np.abs(full - mean)))
