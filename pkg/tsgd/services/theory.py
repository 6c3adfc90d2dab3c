"""Executable forms of the convergence lemmas and the theorem bound envelopes."""

import math
from collections.abc import Callable, Sequence
from typing import Literal, Optional

import numpy as np

from tsgd.config import get_settings
from tsgd.models.core import ParamVector, RngStream, StochasticGradientOracle
from tsgd.models.trace import AggregateTrace, RunTrace
from tsgd.schemas.constants import ProblemConstants, TheoremConstants
from tsgd.services.core import as_param_vector, ensure_finite, ensure_same_dimension, vec_norm
from tsgd.services.optimizers import tamed_increment
from tsgd.utils.exceptions import InsufficientDataError, InvalidInputError, PreconditionError

# Relative slack on the step-size precondition theta <= (1 + gamma) / (2 mu).
ADMISSIBLE_RTOL = 1e-12


## T operator and the second Lipschitz identity

def t_operator(alpha: float, grad_at_w: ParamVector, grad_at_z_norm: float, w: ParamVector) -> ParamVector:
    """w - alpha g(w) / (1 + alpha ||g(z)||); with z = w this is one TSGD step."""
    if not alpha > 0:
        raise InvalidInputError("alpha must be positive")
    if not grad_at_z_norm >= 0:
        raise InvalidInputError("||g(z)|| must be non-negative")
    grad_at_w = as_param_vector(grad_at_w)
    w = as_param_vector(w)
    ensure_same_dimension(w, grad_at_w)
    ensure_finite(np.array([alpha, grad_at_z_norm]), "scalars")
    return w - tamed_increment(alpha, grad_at_w, grad_at_z_norm)


def second_lip_identity_gap(
    alpha: float,
    xi_cap: float,
    grad_at_w: ParamVector,
    grad_at_z_norm: float,
    w: ParamVector,
) -> float:
    """|LHS - RHS| of the identity comparing T with a step tamed by a fixed cap Xi."""
    if not xi_cap >= 0:
        raise InvalidInputError("xi_cap must be non-negative")
    ensure_finite(np.array([xi_cap]), "xi_cap")
    grad_at_w = as_param_vector(grad_at_w)
    w = as_param_vector(w)
    lhs = vec_norm(t_operator(alpha, grad_at_w, grad_at_z_norm, w) - w + alpha * grad_at_w / (1.0 + alpha * xi_cap))
    rhs = (
        alpha**2 * abs(xi_cap - grad_at_z_norm) * vec_norm(grad_at_w)
        / ((1.0 + alpha * grad_at_z_norm) * (1.0 + alpha * xi_cap))
    )
    return abs(lhs - rhs)


## pathwise bound

def pathwise_bound_check(trace: RunTrace, w_star: ParamVector, w1: ParamVector) -> float:
    """Worst slack of ||w^{n+1} - w*|| <= ||w1 - w*|| + sum_{i<=n} min{1, alpha_i ||g_i||}.

    Uses stored iterates when present, otherwise the recorded err_sq. A value
    <= 0 means the bound holds at every recorded step.
    """
    w_star = as_param_vector(w_star)
    w1 = as_param_vector(w1)
    ensure_same_dimension(w_star, w1)
    if trace.cum_tamed.shape != trace.n.shape:
        raise InvalidInputError("trace lacks the running sum of tamed step bounds")
    if len(trace) == 0:
        return -math.inf
    if trace.iterates is not None:
        dist = np.linalg.norm(trace.iterates - w_star, axis=1)
    elif trace.has_errors:
        dist = np.sqrt(trace.err_sq)
    else:
        raise InvalidInputError("trace records neither iterates nor errors")
    return float(np.max(dist - vec_norm(w1 - w_star) - trace.cum_tamed))


## envelopes

def _harmonic_envelope(n: int, x: float, y: float, scale: float, init_err_sq: float) -> float:
    """init (1+y)^x (n+1+y)^-x + exp(x/(1+y)) scale case(x)."""
    head = init_err_sq * (1.0 + y) ** x * (n + 1.0 + y) ** (-x)
    if abs(x - 1.0) <= ADMISSIBLE_RTOL:
        tail = (1.0 + math.log(n + y)) / (n + 1.0 + y)
    elif x > 1.0:
        tail = 1.0 / ((n + 1.0 + y) * (x - 1.0))
    else:
        tail = (n + 1.0 + y) ** (-x) * (1.0 + y) ** (x - 2.0) * (x - 2.0 - y) / (x - 1.0)
    return head + math.exp(x / (1.0 + y)) * scale * tail


def _check_envelope_args(n: int, k: float, init_err_sq: float) -> None:
    if n < 1:
        raise PreconditionError(f"n must be >= 1, got {n}")
    if k < 0:
        raise InvalidInputError("k must be non-negative")
    if init_err_sq < 0:
        raise InvalidInputError("init_err_sq must be non-negative")


def theorem1_bound(
    n: int,
    theta: float,
    gamma: float,
    mu: float,
    k: float,
    init_err_sq: float,
    enforce_admissible: bool = True,
) -> float:
    """Mean-square error envelope for the harmonic schedule alpha_n = theta / (n + gamma).

    Requires theta <= (1 + gamma) / (2 mu) unless `enforce_admissible` is off.
    """
    _check_envelope_args(n, k, init_err_sq)
    if theta <= 0 or mu <= 0 or gamma < 0:
        raise PreconditionError("theta and mu must be positive and gamma non-negative")
    if enforce_admissible and theta > (1.0 + gamma) / (2.0 * mu) * (1.0 + ADMISSIBLE_RTOL):
        raise PreconditionError(f"theta={theta} exceeds (1 + gamma) / (2 mu) = {(1.0 + gamma) / (2.0 * mu)}")
    return _harmonic_envelope(n, 2.0 * theta * mu, gamma, k, init_err_sq)


def theorem2_constant_c(
    theta: float,
    gamma: float,
    mu: float,
    lipschitz: float,
    sigma_at_star: float,
    init_dist: float,
) -> float:
    """C = 2 gamma theta mu / (gamma + theta L ||w1 - w*|| + gamma theta L + theta sigma*)."""
    if min(theta, gamma, mu, lipschitz, sigma_at_star, init_dist) < 0:
        raise InvalidInputError("all inputs must be non-negative")
    denominator = gamma + theta * lipschitz * init_dist + gamma * theta * lipschitz + theta * sigma_at_star
    if denominator == 0:
        raise PreconditionError("C is undefined: its denominator vanishes")
    return 2.0 * gamma * theta * mu / denominator


def theorem2_bound(n: int, gamma: float, c: float, k: float, init_err_sq: float) -> float:
    """The envelope of the second-moment theorem: exponent C in place of 2 theta mu."""
    _check_envelope_args(n, k, init_err_sq)
    if gamma < 0:
        raise PreconditionError("gamma must be non-negative")
    if not 0 < c <= (1.0 + gamma) * (1.0 + ADMISSIBLE_RTOL):
        raise PreconditionError(f"C={c} must lie in (0, 1 + gamma]")
    return _harmonic_envelope(n, c, gamma, k, init_err_sq)


def theorem3_bound(
    n: int,
    theta: float,
    gamma: float,
    mu: float,
    b_bound: float,
    k: float,
    init_err_sq: float = 0.0,
) -> float:
    """Envelope under an almost-sure gradient bound B; the offset shifts to gamma + theta B."""
    _check_envelope_args(n, k, init_err_sq)
    if theta <= 0 or mu <= 0 or gamma < 0 or b_bound < 0:
        raise PreconditionError("theta and mu must be positive, gamma and B non-negative")
    if 1.0 + gamma < theta * (2.0 * mu - b_bound) * (1.0 - ADMISSIBLE_RTOL):
        raise PreconditionError("requires 1 + gamma >= theta (2 mu - B)")
    return _harmonic_envelope(n, 2.0 * theta * mu, gamma + theta * b_bound, theta**2 * k, init_err_sq)


## theorem constants

def admissible_mu(mu: float, theta: float, gamma: float) -> float:
    """Largest mu' <= mu with theta <= (1 + gamma) / (2 mu')."""
    if mu <= 0 or theta <= 0 or gamma < 0:
        raise InvalidInputError("mu and theta must be positive and gamma non-negative")
    return min(mu, (1.0 + gamma) / (2.0 * theta))


def theorem1_k(c: ProblemConstants, theta: float, m2: float, m4: float) -> float:
    t2 = 2.0 * theta**2
    return (
        t2 * c.lipschitz * c.mu2 * m4**0.75
        + (t2 * c.lipschitz**2 + t2 * c.lipschitz * c.sigma + t2 * c.mu2 * c.sigma) * m2
        + t2 * c.sigma**2 * math.sqrt(m2)
        + t2 * c.sigma**2
    )


def theorem2_k(c: ProblemConstants, theta: float, m2: float) -> float:
    return 2.0 * theta**2 * (
        (c.lipschitz**2 + c.lipschitz * c.sigma) * m2 + c.sigma**2 + c.sigma**2 * math.sqrt(m2)
    )


def theorem3_k(c: ProblemConstants, m2: float) -> float:
    """K without the theta^2 factor, which the bounded-gradient envelope applies itself."""
    if c.grad_bound is None or c.noise_ratio is None:
        raise PreconditionError("the bounded-gradient constant needs B and D")
    b, d = c.grad_bound, c.noise_ratio
    return (4.0 + 6.0 * d**2) * b**2 + 2.0 * (b**2 * d + c.sigma * b) * math.sqrt(m2)


def estimate_theorem2_c(
    oracle: StochasticGradientOracle,
    constants: ProblemConstants,
    theta: float,
    gamma: float,
    w1: ParamVector,
    w_star: ParamVector,
    draws: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Monte Carlo mean of the per-draw C over gradients at the minimizer.

    mu and L are taken as deterministic, so only ||grad f(xi, w*)|| varies; with
    noiseless gradients this equals `theorem2_constant_c` with sigma* = 0.
    """
    draws = draws or get_settings().constant_draws
    rng = rng or RngStream(seed=0).generator()
    w1 = as_param_vector(w1)
    w_star = as_param_vector(w_star)
    init_dist = vec_norm(w1 - w_star)
    source = oracle.draws(rng)
    norms = np.array([vec_norm(oracle.gradient_at(next(source), w_star)) for _ in range(draws)])
    denominator = (
        gamma + theta * constants.lipschitz * init_dist + gamma * theta * constants.lipschitz + theta * norms
    )
    if np.any(denominator == 0):
        raise PreconditionError("C is undefined: its denominator vanishes")
    return float(np.mean(2.0 * gamma * theta * constants.mu / denominator))


def theorem_constants(
    constants: ProblemConstants,
    theta: float,
    gamma: float,
    m2: float,
    m4: float,
    init_dist: float,
    c: Optional[float] = None,
    source: Literal["empirical", "user_supplied"] = "empirical",
) -> TheoremConstants:
    """Bundle M2, M4, the three K's and C; Phi = 0 and Xi = B when B is known."""
    if c is None:
        c = theorem2_constant_c(theta, gamma, constants.mu, constants.lipschitz, constants.sigma, init_dist)
    bounded = constants.grad_bound is not None and constants.noise_ratio is not None
    return TheoremConstants(
        m2=m2,
        m4=m4,
        k=theorem1_k(constants, theta, m2, m4),
        k_weak=theorem2_k(constants, theta, m2),
        k_bounded=theorem3_k(constants, m2) if bounded else 0.0,
        c=c,
        phi=0.0,
        xi_cap=constants.grad_bound or 0.0,
        source=source,
    )


def estimate_m2_m4(
    paths: Sequence[RunTrace],
    w_star: Optional[ParamVector] = None,
    min_paths: int = 30,
) -> TheoremConstants:
    """Empirical sup over recorded n of the path-mean second and fourth error moments.

    The sup includes the deterministic starting error; paths are compared on
    their common recorded prefix.
    """
    if len(paths) < min_paths:
        raise InsufficientDataError(f"need at least {min_paths} paths, got {len(paths)}")
    length = min(len(t) for t in paths)
    rows = []
    for trace in paths:
        if trace.iterates is not None and w_star is not None:
            err_sq = np.sum((trace.iterates[:length] - as_param_vector(w_star)) ** 2, axis=1)
        else:
            err_sq = trace.err_sq[:length]
        if not np.all(np.isfinite(err_sq)) or not math.isfinite(trace.init_err_sq):
            raise InsufficientDataError("every path must record finite errors")
        rows.append(err_sq)
    err_sq = np.vstack(rows) if length else np.empty((len(paths), 0))
    init = max(t.init_err_sq for t in paths)
    m2 = max(init, float(err_sq.mean(axis=0).max(initial=0.0)))
    m4 = max(init**2, float((err_sq**2).mean(axis=0).max(initial=0.0)))
    return TheoremConstants(m2=m2, m4=m4, source="empirical")


## envelope dominance and sandwich

def envelope_check(
    aggregate: AggregateTrace,
    bound: Callable[[int], float],
    n_min: int = 20,
    metric: Literal["err_sq", "f_gap"] = "err_sq",
    se_factor: float = 3.0,
) -> float:
    """Worst value of mean + se_factor * SE - bound(n) over recorded n >= n_min; <= 0 means dominated."""
    mean = aggregate.mean_err_sq if metric == "err_sq" else aggregate.mean_f_gap
    se = aggregate.se_err_sq if metric == "err_sq" else aggregate.se_f_gap
    selected = np.flatnonzero(aggregate.n >= n_min)
    if selected.size == 0:
        raise InsufficientDataError(f"no recorded steps with n >= {n_min}")
    excess = [mean[i] + se_factor * se[i] - bound(int(aggregate.n[i])) for i in selected]
    if not np.all(np.isfinite(excess)):
        raise InsufficientDataError(f"aggregate {metric} is not finite on the checked range")
    return float(max(excess))


def f_gap_sandwich(
    f_at_w: float,
    f_at_star: float,
    dist_sq: float,
    mu: float,
    lipschitz: float,
    tol: float = 1e-9,
) -> tuple[float, float]:
    """Slacks (L/2 dist^2 - gap, gap - mu/2 dist^2); both >= -tol * scale when the sandwich holds."""
    if mu > lipschitz:
        raise PreconditionError("mu must not exceed lipschitz")
    if dist_sq < 0:
        raise InvalidInputError("dist_sq must be non-negative")
    gap = f_at_w - f_at_star
    if gap < -tol * max(1.0, abs(f_at_star)):
        raise PreconditionError(f"F(w) lies below F(w*) by {-gap:.3e}")
    return 0.5 * lipschitz * dist_sq - gap, gap - 0.5 * mu * dist_sq


## elementary inequalities

def _check_algebraic(x: float, y: float) -> None:
    if x <= 0 or y <= 0:
        raise PreconditionError("x and y must be positive")
    if x / (1.0 + y) > 1.0:
        raise PreconditionError("requires x / (1 + y) <= 1")


def algebraic_bound_product(x: float, y: float, m: int, n: int) -> tuple[float, float]:
    """(prod_{i=m}^n (1 - x/(i+y)), ((n+1+y)/(m+y))^-x)."""
    _check_algebraic(x, y)
    if m < 1 or m > n + 1:
        raise PreconditionError("requires 1 <= m <= n + 1")
    i = np.arange(m, n + 1, dtype=np.float64)
    product = float(np.prod(1.0 - x / (i + y)))
    return product, ((n + 1.0 + y) / (m + y)) ** (-x)


def algebraic_bound_sum(x: float, y: float, n: int) -> tuple[float, float]:
    """(sum_i (i+y)^-2 prod_{j>i}^n (1 - x/(j+y)), its three-branch closed-form bound)."""
    _check_algebraic(x, y)
    if n < 1:
        raise PreconditionError("n must be >= 1")
    i = np.arange(1, n + 1, dtype=np.float64)
    factors = 1.0 - x / (i + y)
    # tail[k] = prod_{j=k+2}^{n} factors, 1 for the last term
    tail = np.ones(n)
    tail[:-1] = np.cumprod(factors[::-1])[::-1][1:]
    value = float(np.sum(tail / (i + y) ** 2))
    return value, _harmonic_envelope(n, x, y, 1.0, 0.0)


def taylor_inequality(a: float, b: float, x: float) -> tuple[float, float]:
    """(-1/(a x + b), -1/b + a x / b^2); the first never exceeds the second."""
    if a <= 0 or b <= 0 or x <= 0:
        raise InvalidInputError("a, b and x must be positive")
    return -1.0 / (a * x + b), -1.0 / b + a / b**2 * x
