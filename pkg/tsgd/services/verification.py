"""Property suite behind `tsgd verify`: every lemma checked against brute force or an exact identity."""

import logging
import math
from collections.abc import Callable

import numpy as np

from tsgd.config import get_settings
from tsgd.models.core import RngStream
from tsgd.models.logistic import LogisticProblem
from tsgd.models.mlp import MlpProblem
from tsgd.models.optimizer import OptimizerState
from tsgd.models.quadratic import QuadraticProblem
from tsgd.schemas.experiment import ExperimentConfig
from tsgd.schemas.schedule import StepSchedule
from tsgd.schemas.verification import CheckResult
from tsgd.services.core import finite_sum_gradient_identity, vec_norm
from tsgd.services.experiment import resolve_reference, run_path
from tsgd.services.data_io import synthetic_classification
from tsgd.services.optimizers import perturbation_decomposition, taming_factor, tsgd_step
from tsgd.services.problems import build_problem, initial_point
from tsgd.services.theory import (
    algebraic_bound_product,
    algebraic_bound_sum,
    f_gap_sandwich,
    pathwise_bound_check,
    second_lip_identity_gap,
    t_operator,
    taylor_inequality,
    theorem1_bound,
)

logger = logging.getLogger(__name__)

LEMMA_X_COUNT = 10
LEMMA_Y_VALUES = (0.1, 1.0, 5.0, 10.0)
LEMMA_N_MAX = 300


def _result(name: str, margins: np.ndarray, detail: str = "") -> CheckResult:
    """margins > 0 are violations."""
    margins = np.asarray(margins, dtype=np.float64)
    violations = int(np.sum(margins > 0))
    return CheckResult(
        name=name,
        passed=violations == 0,
        cases=margins.size,
        violations=violations,
        worst=float(margins.max()) if margins.size else None,
        detail=detail,
    )


def check_taming_sandwich(rng: np.random.Generator, cases: int = 100_000) -> CheckResult:
    alpha = 10.0 ** rng.uniform(-8, 8, cases)
    grad_norm = 10.0 ** rng.uniform(-8, 8, cases)
    t = alpha * grad_norm
    factor = taming_factor(alpha, grad_norm)
    cap = np.minimum(1.0, t)
    margins = np.maximum(factor - cap * (1 + 1e-15), 0.5 * cap * (1 - 1e-15) - factor)
    # t / (1 + t) rounds to 1 once 1 + t is no longer exact.
    representable = t < 2.0**52
    margins = np.where(representable & (factor >= 1.0), 1.0, margins)
    return _result("taming_sandwich", margins, "1/2 min{1,t} <= t/(1+t) <= min{1,t} < 1")


def check_perturbation(rng: np.random.Generator, cases: int = 2_000) -> CheckResult:
    margins = np.empty(cases)
    for i in range(cases):
        alpha = 10.0 ** rng.uniform(-4, 2)
        gradient = rng.standard_normal(rng.integers(1, 9)) * 10.0 ** rng.uniform(-3, 3)
        first, second = perturbation_decomposition(alpha, gradient)
        tamed = alpha * gradient / (1.0 + alpha * vec_norm(gradient))
        margins[i] = vec_norm(tamed - (first - second)) - 1e-12 * max(1.0, vec_norm(first))
    return _result("perturbation_decomposition", margins)


def check_t_operator(rng: np.random.Generator, cases: int = 1_000) -> CheckResult:
    margins = np.empty(cases)
    for i in range(cases):
        d = int(rng.integers(1, 9))
        w = rng.standard_normal(d)
        gradient = rng.standard_normal(d) * 10.0 ** rng.uniform(-2, 2)
        theta = 10.0 ** rng.uniform(-2, 2)
        state = OptimizerState(iterate=w, schedule=StepSchedule(theta=theta, gamma=0.0))
        stepped = tsgd_step(state, gradient).iterate
        operated = t_operator(theta, gradient, vec_norm(gradient), w)
        margins[i] = 0.0 if np.array_equal(stepped, operated) else 1.0
    return _result("t_operator_equals_step", margins, "bitwise agreement with z = w")


def check_second_lipschitz_identity(rng: np.random.Generator, cases: int = 10_000) -> CheckResult:
    margins = np.empty(cases)
    for i in range(cases):
        d = int(rng.integers(1, 9))
        alpha = 10.0 ** rng.uniform(-3, 1)
        xi_cap = rng.uniform(0, 10)
        direction = rng.standard_normal(d)
        grad_at_w = direction / np.linalg.norm(direction) * rng.uniform(0, 10)
        grad_at_z_norm = rng.uniform(0, 10)
        w = rng.standard_normal(d)
        gap = second_lip_identity_gap(alpha, xi_cap, grad_at_w, grad_at_z_norm, w)
        margins[i] = gap - 1e-10 * max(1.0, vec_norm(grad_at_w))
    return _result("second_lipschitz_identity", margins)


def _lemma_grid() -> list[tuple[float, float]]:
    return [(float(x), y) for y in LEMMA_Y_VALUES for x in np.linspace(0.1, 1.0 + y, LEMMA_X_COUNT)]


def check_product_bound() -> CheckResult:
    margins = []
    for x, y in _lemma_grid():
        for n in range(1, LEMMA_N_MAX + 1):
            for m in sorted({1, math.ceil(n / 2), n + 1}):
                product, bound = algebraic_bound_product(x, y, m, n)
                margins.append(product - bound * (1 + 1e-12))
    return _result("harmonic_product_bound", np.asarray(margins))


def check_sum_bound() -> CheckResult:
    margins = []
    for x, y in _lemma_grid():
        for n in range(1, LEMMA_N_MAX + 1):
            value, bound = algebraic_bound_sum(x, y, n)
            margins.append(value - bound * (1 + 1e-12))
    return _result("harmonic_sum_bound", np.asarray(margins))


def check_taylor() -> CheckResult:
    grid = np.geomspace(1e-3, 1e3, 10)
    margins = []
    for a in grid:
        for b in grid:
            for x in grid:
                first, second = taylor_inequality(a, b, x)
                margins.append(first - second - 1e-12 * max(1.0, 1.0 / b, abs(second)))
    return _result("tangent_line_bound", np.asarray(margins))


def check_envelope_monotone() -> CheckResult:
    """Nonincreasing in n where 2 theta mu >= 1.

    The log branch only starts decreasing once n + gamma exceeds about 1.8, hence gamma >= 1.
    """
    margins = []
    n = np.arange(1, 501)
    for gamma in (1.0, 10.0, 100.0):
        for mu in (0.1, 1.0, 10.0):
            upper = (1.0 + gamma) / (2.0 * mu)
            for theta in np.linspace(1.0 / (2.0 * mu), upper, 5):
                for k, init in ((1.0, 0.0), (1.0, 1.0), (0.0, 1.0)):
                    values = np.array([theorem1_bound(int(i), theta, gamma, mu, k, init) for i in n])
                    margins.extend(np.diff(values) - 1e-12 * values[1:])
    return _result("envelope_monotone", np.asarray(margins))


def check_f_gap_sandwich(rng: np.random.Generator, cases: int = 1_000) -> CheckResult:
    margins = np.empty(cases)
    for i in range(cases):
        d = int(rng.integers(1, 9))
        diag = 10.0 ** rng.uniform(-3, 3, d)
        problem = QuadraticProblem(diag, rng.standard_normal(d))
        w = problem.w_star + rng.standard_normal(d) * 10.0 ** rng.uniform(-3, 3)
        dist_sq = float(np.sum((w - problem.w_star) ** 2))
        upper, lower = f_gap_sandwich(problem.objective(w), 0.0, dist_sq, diag.min(), diag.max())
        scale = max(1.0, diag.max() * dist_sq)
        margins[i] = -min(upper, lower) - 1e-9 * scale
    return _result("f_gap_sandwich", margins)


def check_finite_sum_identity(rng: np.random.Generator) -> CheckResult:
    data = synthetic_classification(16, 6, seed=int(rng.integers(2**31)))
    problems = [
        LogisticProblem(data, reg=0.1, batch_size=3),
        MlpProblem(data, reg=0.1, hidden_width=4, batch_size=3),
        QuadraticProblem([1.0, 2.0, 5.0], [1.0, -1.0, 0.5], noise_sigma=1.0, n_samples=16, seed=3),
    ]
    margins = []
    for problem in problems:
        w = rng.standard_normal(problem.dimension())
        for batch_size in (1, 3, 5, 16):
            partition = np.array_split(rng.permutation(16), math.ceil(16 / batch_size))
            gap = finite_sum_gradient_identity(problem, w, partition)
            scale = max(1.0, float(np.max(np.abs(problem.full_gradient(w)))))
            margins.append(gap - 1e-12 * scale)
    return _result("finite_sum_identity", np.asarray(margins))


def check_pathwise_bound(rng: np.random.Generator, paths: int = 4, steps: int = 300) -> CheckResult:
    """Seeded TSGD paths against the distance bound, with every step recorded."""
    tolerance = get_settings().pathwise_tolerance
    shared = {"n_steps": steps, "n_paths": paths, "record_every": 1, "seed": int(rng.integers(2**31))}
    configs = [
        ExperimentConfig.model_validate({
            "problem": {"kind": "quadratic", "diag": [1.0, 10.0, 100.0], "noise_sigma": 1.0},
            "schedule": {"theta": 50.0, "gamma": 0.0},
            **shared,
        }),
        ExperimentConfig.model_validate({
            "problem": {
                "kind": "logistic",
                "synthetic": {"n_samples": 60, "n_features": 5, "seed": int(rng.integers(2**31))},
                "reg": 0.01,
                "batch_size": 1,
            },
            "schedule": {"theta": 10.0, "gamma": 1.0},
            "reference_method": "scipy",
            **shared,
        }),
    ]
    margins = []
    for cfg in configs:
        problem = build_problem(cfg)
        w1 = initial_point(cfg, problem)
        w_star, f_star = resolve_reference(cfg, problem, w1)
        for i in range(paths):
            trace = run_path(problem, cfg, i, w1, w_star, f_star)
            margins.append(pathwise_bound_check(trace, w_star, w1) - tolerance)
    return _result("pathwise_bound", np.asarray(margins), f"quadratic and logistic paths, tolerance {tolerance:g}")


def run_verification(seed: int = 0) -> list[CheckResult]:
    rng = RngStream(seed=seed).generator()
    checks: list[Callable[[], CheckResult]] = [
        lambda: check_taming_sandwich(rng),
        lambda: check_perturbation(rng),
        lambda: check_t_operator(rng),
        lambda: check_second_lipschitz_identity(rng),
        check_product_bound,
        check_sum_bound,
        check_taylor,
        check_envelope_monotone,
        lambda: check_f_gap_sandwich(rng),
        lambda: check_finite_sum_identity(rng),
        lambda: check_pathwise_bound(rng),
    ]
    results = []
    for check in checks:
        result = check()
        logger.info(
            "%s: %s (%d cases, %d violations)",
            result.name, "ok" if result.passed else "FAILED", result.cases, result.violations,
        )
        results.append(result)
    return results
