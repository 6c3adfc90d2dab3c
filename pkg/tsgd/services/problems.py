"""Problem constants, value/gradient entry points, reference solutions and problem assembly."""

import logging
import math
from typing import Literal, Optional, Union

import numpy as np
from scipy import optimize

from tsgd.config import get_settings
from tsgd.models.core import INIT_STREAM_ID, ParamVector, RngStream, StochasticGradientOracle
from tsgd.models.finite_sum import FiniteSumProblem
from tsgd.models.logistic import LogisticProblem
from tsgd.models.mlp import MlpProblem
from tsgd.models.optimizer import OptimizerState
from tsgd.models.quadratic import QuadraticProblem
from tsgd.schemas.constants import ProblemConstants
from tsgd.schemas.experiment import ExperimentConfig, LogisticSpec, MlpSpec, QuadraticSpec
from tsgd.schemas.schedule import StepSchedule
from tsgd.services.core import as_param_vector, vec_norm
from tsgd.services.data_io import load_libsvm, synthetic_classification
from tsgd.services.optimizers import schedule_value, tsgd_step
from tsgd.utils.exceptions import InvalidInputError, NonConvergentBudgetError, PreconditionError

logger = logging.getLogger(__name__)

Problem = Union[QuadraticProblem, LogisticProblem, MlpProblem]


## constants

def quadratic_constants(p: QuadraticProblem, draws: Optional[int] = None, seed: int = 0) -> ProblemConstants:
    """mu, L from the spectrum; sigma, sigma4 from the noise model.

    B is only defined on a bounded domain with bounded noise; D is then
    estimated by Monte Carlo over points of that domain. Both hold only while
    the iterates stay in the ball, which run_path enforces by truncating paths
    that leave it. `invariant_radius` gives a radius they cannot leave.
    """
    mu = float(p.matrix_diag.min())
    lipschitz = float(p.matrix_diag.max())
    sigma = p.noise_sigma * math.sqrt(p.noise_moment2)
    sigma4 = p.noise_sigma * p.noise_moment4**0.25

    grad_bound = noise_ratio = None
    if p.domain_radius is not None and math.isfinite(p.noise_sup):
        grad_bound = lipschitz * p.domain_radius + p.noise_sigma * p.noise_sup
        noise_ratio = estimate_noise_ratio(p, draws=draws, seed=seed)

    return ProblemConstants(
        mu=mu, mu2=mu, lipschitz=lipschitz, lipschitz4=lipschitz,
        sigma=sigma, sigma4=max(sigma, sigma4),
        grad_bound=grad_bound, noise_ratio=noise_ratio,
    )


def invariant_radius(p: QuadraticProblem, schedule: StepSchedule, w1: ParamVector) -> Optional[float]:
    """Radius of a ball around w* that neither TSGD nor SGD can leave from w1.

    With bounded noise and alpha_1 * L <= 1 every step contracts the error by
    (1 - c mu) and adds at most c sigma sup|eta|, where c <= alpha_1 is the
    effective step. Any radius of at least sigma sup|eta| / mu is then
    invariant. Returns None when either condition fails.
    """
    if not math.isfinite(p.noise_sup):
        return None
    mu = float(p.matrix_diag.min())
    lipschitz = float(p.matrix_diag.max())
    if schedule_value(schedule, 1) * lipschitz > 1.0:
        return None
    return max(vec_norm(as_param_vector(w1) - p.w_star), p.noise_sigma * p.noise_sup / mu)


def estimate_noise_ratio(
    p: QuadraticProblem,
    draws: Optional[int] = None,
    points: int = 32,
    seed: int = 0,
) -> float:
    """sup_w sqrt(E[||g(xi, w*)||^2 / ||g(xi, w)||^2]) over sampled points of the domain ball."""
    draws = draws or get_settings().constant_draws
    rng = np.random.default_rng(seed)
    d = p.dimension()
    if p.noise_table is not None:
        eta = p.noise_table[rng.integers(0, p.noise_table.shape[0], draws)]
    else:
        eta = p.standard_noise(rng, draws)
    at_star = p.noise_sigma * eta
    star_sq = np.sum(at_star**2, axis=1)

    directions = rng.standard_normal((points, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = p.domain_radius * rng.random(points) ** (1.0 / d)
    offsets = np.vstack([np.zeros(d), directions * radii[:, None]])

    worst = 0.0
    for offset in offsets:
        grads = p.matrix_diag * offset + at_star
        norm_sq = np.sum(grads**2, axis=1)
        positive = norm_sq > 0
        ratio = np.zeros(draws)
        ratio[positive] = star_sq[positive] / norm_sq[positive]
        worst = max(worst, math.sqrt(float(ratio.mean())))
    return worst


def logistic_lipschitz(p: FiniteSumProblem) -> float:
    """Upper bound 1/4 max ||x~||^2 + lambda, x~ = (x, 1) with an intercept."""
    max_sq = p.dataset.max_row_norm_sq() + (1.0 if p.fit_intercept else 0.0)
    return 0.25 * max_sq + p.reg


def logistic_constants(
    p: LogisticProblem,
    w_ref: Optional[ParamVector] = None,
    draws: Optional[int] = None,
    seed: int = 0,
) -> ProblemConstants:
    """mu = lambda exactly; L by the data bound; sigma from batch gradients at w_ref."""
    if w_ref is None:
        w_ref, _ = reference_solution(p, budget=10_000, seed=seed, method="scipy")
    draws = draws or min(get_settings().constant_draws, 2_000)
    batches = p.draws(RngStream(seed=seed).generator())
    norms_sq = np.array([vec_norm(p.gradient_at(next(batches), w_ref)) ** 2 for _ in range(draws)])
    sigma = math.sqrt(float(norms_sq.mean()))
    sigma4 = float((norms_sq**2).mean()) ** 0.25
    lipschitz = logistic_lipschitz(p)
    return ProblemConstants(
        mu=p.reg, mu2=p.reg, lipschitz=lipschitz, lipschitz4=lipschitz,
        sigma=sigma, sigma4=max(sigma, sigma4), reg=p.reg,
    )


## value and gradient

def logistic_value_and_gradient(p: LogisticProblem, batch, w: ParamVector) -> tuple[float, ParamVector]:
    return p.value_and_gradient(batch, w)


def mlp_value_and_gradient(p: MlpProblem, batch, w: ParamVector) -> tuple[float, ParamVector]:
    return p.value_and_gradient(batch, w)


## reference solution

def default_reference_schedule(p: FiniteSumProblem) -> StepSchedule:
    """theta = 2 / lambda with gamma chosen so that alpha_1 = 1 / L for the logistic loss."""
    theta = 2.0 / p.reg
    if isinstance(p, LogisticProblem):
        gamma = max(0.0, theta * logistic_lipschitz(p) - 1.0)
    else:
        gamma = 1e4
    return StepSchedule(kind="harmonic", theta=theta, gamma=gamma)


def reference_solution(
    p: StochasticGradientOracle,
    budget: int,
    seed: int = 0,
    schedule: Optional[StepSchedule] = None,
    batch_size: Optional[int] = None,
    w1: Optional[ParamVector] = None,
    method: Literal["tsgd", "scipy"] = "tsgd",
    planned_steps: Optional[int] = None,
    tol: float = 1e-8,
    check_every: Optional[int] = None,
    strict: bool = True,
) -> tuple[ParamVector, float]:
    """Best iterate and lowest F of a long TSGD run (or a scipy solve).

    The quadratic returns its analytic minimizer. A TSGD run whose lowest value
    in the final tenth of the budget still improves on the earlier best by more
    than tol is rejected as non-convergent, or only logged when `strict` is off.
    """
    if budget < 1:
        raise InvalidInputError("budget must be >= 1")
    if planned_steps is not None and budget <= planned_steps:
        raise PreconditionError(f"budget {budget} must exceed the planned {planned_steps} steps")
    if isinstance(p, QuadraticProblem):
        return p.w_star, 0.0

    w = np.zeros(p.dimension()) if w1 is None else as_param_vector(w1)
    if method == "scipy":
        result = optimize.minimize(
            lambda v: p.value_and_gradient(np.arange(p.n_samples), v),
            w, jac=True, method="L-BFGS-B",
            options={"maxiter": budget, "gtol": 1e-12, "ftol": 1e-15},
        )
        logger.info("scipy reference: F=%.17g after %d iterations (%s)", result.fun, result.nit, result.message)
        return np.asarray(result.x, dtype=np.float64), float(result.fun)

    schedule = schedule or default_reference_schedule(p)
    check_every = check_every or max(1, budget // 2_000)
    draws = p.draws(RngStream(seed=seed).generator(), batch_size)
    state = OptimizerState(iterate=w, schedule=schedule)

    best_w, best_f = w.copy(), p.objective(w)
    tail_start = budget - budget // 10
    best_before_tail = best_f
    for n in range(1, budget + 1):
        state = tsgd_step(state, p.gradient_at(next(draws), state.iterate))
        if n % check_every == 0 or n == budget:
            f = p.objective(state.iterate)
            if f < best_f:
                best_w, best_f = state.iterate.copy(), f
        if n == tail_start:
            best_before_tail = best_f

    improvement = best_before_tail - best_f
    if tail_start > 0 and improvement > tol * max(1.0, abs(best_f)):
        message = f"F still decreased by {improvement:.3e} over the last tenth of {budget} steps"
        if strict:
            raise NonConvergentBudgetError(message)
        logger.warning("reference not converged: %s", message)
    logger.info("TSGD reference: F=%.17g after %d steps", best_f, budget)
    return best_w, best_f


## problem assembly

def build_problem(cfg: ExperimentConfig) -> Problem:
    spec = cfg.problem
    settings = get_settings()
    if isinstance(spec, QuadraticSpec):
        if spec.diag is not None:
            diag = np.asarray(spec.diag, dtype=np.float64)
        else:
            diag = np.geomspace(spec.mu, spec.lipschitz, spec.dim)
        target = np.ones(diag.size) if spec.target is None else spec.target
        return QuadraticProblem(
            diag, target, noise_sigma=spec.noise_sigma, noise_kind=spec.noise_kind,
            n_samples=spec.n_samples, domain_radius=spec.domain_radius,
            seed=cfg.seed, noise_block=settings.noise_block,
        )

    if spec.data_path is not None:
        dataset = load_libsvm(spec.data_path, n_features=spec.n_features)
    else:
        s = spec.synthetic
        dataset = synthetic_classification(s.n_samples, s.n_features, s.density, s.label_noise, s.seed)
    if isinstance(spec, LogisticSpec):
        return LogisticProblem(dataset, spec.reg, batch_size=spec.batch_size, fit_intercept=spec.fit_intercept)
    if isinstance(spec, MlpSpec):
        return MlpProblem(
            dataset, spec.reg, hidden_width=spec.hidden_width,
            batch_size=spec.batch_size, fit_intercept=spec.fit_intercept,
        )
    raise InvalidInputError(f"unknown problem kind {spec.kind!r}")


def initial_point(cfg: ExperimentConfig, problem: Problem) -> ParamVector:
    """Deterministic w1 shared by every path of an experiment."""
    if cfg.init is not None:
        w1 = as_param_vector(cfg.init)
        if w1.size != problem.dimension():
            raise InvalidInputError(f"init has dimension {w1.size}, problem {problem.dimension()}")
        check_in_domain(problem, w1)
        return w1
    if isinstance(problem, MlpProblem):
        return problem.initial_point(RngStream(seed=cfg.seed, stream_id=INIT_STREAM_ID).generator())
    w1 = np.zeros(problem.dimension())
    check_in_domain(problem, w1)
    return w1


def check_in_domain(problem: Problem, w1: ParamVector) -> None:
    radius = getattr(problem, "domain_radius", None)
    if radius is None:
        return
    dist = vec_norm(w1 - problem.w_star)
    if dist > radius:
        raise PreconditionError(f"start point is {dist:.6g} from w*, outside the domain radius {radius:.6g}")
