"""TSGD and SGD update rules, step-size schedules and the taming algebra."""

from dataclasses import replace

import numpy as np
import numpy.typing as npt

from tsgd.models.core import ParamVector
from tsgd.models.optimizer import OptimizerState
from tsgd.schemas.schedule import StepSchedule
from tsgd.services.core import ensure_finite, ensure_same_dimension, vec_norm
from tsgd.utils.exceptions import InvalidInputError, PreconditionError


def schedule_value(s: StepSchedule, n: int) -> float:
    if n < 1:
        raise PreconditionError(f"step index must be >= 1, got {n}")
    if s.kind == "constant":
        return float(s.constant_value)
    return s.theta / (n + s.gamma)


def taming_factor(alpha: npt.ArrayLike, grad_norm: npt.ArrayLike):
    """t / (1 + t) with t = alpha * grad_norm; works elementwise on arrays."""
    alpha = np.asarray(alpha, dtype=np.float64)
    grad_norm = np.asarray(grad_norm, dtype=np.float64)
    if np.any(alpha <= 0):
        raise InvalidInputError("alpha must be positive")
    if np.any(grad_norm < 0):
        raise InvalidInputError("gradient norm must be non-negative")
    t = alpha * grad_norm
    factor = t / (1.0 + t)
    return float(factor) if factor.ndim == 0 else factor


def tamed_increment(alpha: float, gradient: ParamVector, denominator_norm: float) -> ParamVector:
    """alpha * g / (1 + alpha * ||g(z)||); shared with the theory module's T operator."""
    return (alpha * gradient) / (1.0 + alpha * denominator_norm)


def _check_step(state: OptimizerState, gradient: ParamVector) -> float:
    ensure_same_dimension(state.iterate, gradient)
    ensure_finite(gradient, "gradient")
    return schedule_value(state.schedule, state.step_index)


def tsgd_step(state: OptimizerState, gradient: ParamVector) -> OptimizerState:
    alpha = _check_step(state, gradient)
    increment = tamed_increment(alpha, gradient, vec_norm(gradient))
    return replace(state, iterate=state.iterate - increment, step_index=state.step_index + 1)


def sgd_step(state: OptimizerState, gradient: ParamVector) -> OptimizerState:
    alpha = _check_step(state, gradient)
    return replace(state, iterate=state.iterate - alpha * gradient, step_index=state.step_index + 1)


STEP_RULES = {"tsgd": tsgd_step, "sgd": sgd_step}


def perturbation_decomposition(alpha: float, gradient: ParamVector) -> tuple[ParamVector, ParamVector]:
    """Split the tamed increment into the SGD step and a second-order correction.

    tamed increment == first - second, with second = O(alpha^2).
    """
    if alpha <= 0:
        raise InvalidInputError("alpha must be positive")
    gradient = np.asarray(gradient, dtype=np.float64)
    norm = vec_norm(gradient)
    first = alpha * gradient
    second = (alpha**2 * norm * gradient) / (1.0 + alpha * norm)
    return first, second
