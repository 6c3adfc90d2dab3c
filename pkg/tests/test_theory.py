"""
Theory tests: the T operator, bound envelopes, constants and elementary inequalities.
"""
import math

import numpy as np
import pytest

from tsgd.models.optimizer import OptimizerState
from tsgd.models.quadratic import QuadraticProblem
from tsgd.models.trace import AggregateTrace, RunTrace
from tsgd.schemas.constants import ProblemConstants
from tsgd.schemas.schedule import StepSchedule
from tsgd.services.core import vec_norm
from tsgd.services.optimizers import tsgd_step
from tsgd.services.theory import (
    admissible_mu,
    algebraic_bound_product,
    algebraic_bound_sum,
    envelope_check,
    estimate_m2_m4,
    estimate_theorem2_c,
    f_gap_sandwich,
    pathwise_bound_check,
    second_lip_identity_gap,
    t_operator,
    taylor_inequality,
    theorem1_bound,
    theorem1_k,
    theorem2_bound,
    theorem2_constant_c,
    theorem2_k,
    theorem3_bound,
    theorem3_k,
    theorem_constants,
)
from tsgd.utils.exceptions import InsufficientDataError, InvalidInputError, PreconditionError


def make_trace(err_sq, cum_tamed, init_err_sq=1.0, iterates=None) -> RunTrace:
    size = len(err_sq)
    return RunTrace(
        optimizer="tsgd",
        n=np.arange(1, size + 1),
        alpha=np.ones(size),
        err_sq=np.asarray(err_sq, dtype=np.float64),
        f_gap=np.zeros(size),
        step_length=np.zeros(size),
        grad_norm=np.zeros(size),
        cum_tamed=np.asarray(cum_tamed, dtype=np.float64),
        init_err_sq=init_err_sq,
        iterates=iterates,
    )


class TestTOperator:
    """Tests for T and the identity comparing it with a capped step."""

    def test_equals_tsgd_step_bitwise(self):
        """With z = w the operator is one TSGD step."""
        rng = np.random.default_rng(0)
        for _ in range(100):
            w, g = rng.standard_normal(4), rng.standard_normal(4) * 3
            alpha = rng.uniform(0.01, 10)
            state = OptimizerState(iterate=w, schedule=StepSchedule(kind="constant", constant_value=alpha))
            assert np.array_equal(t_operator(alpha, g, vec_norm(g), w), tsgd_step(state, g).iterate)

    def test_zero_gradient(self):
        w = np.array([1.0, -2.0])
        assert np.array_equal(t_operator(3.0, np.zeros(2), 5.0, w), w)

    def test_hand_evaluation(self):
        """alpha=1, g(w)=2, ||g(z)||=3, w=1 gives 1 - 2/4."""
        assert t_operator(1.0, np.array([2.0]), 3.0, np.array([1.0]))[0] == 0.5

    def test_rejects_non_positive_alpha(self):
        with pytest.raises(InvalidInputError):
            t_operator(0.0, np.array([1.0]), 1.0, np.array([0.0]))

    def test_identity_collapses_when_cap_equals_norm(self):
        assert second_lip_identity_gap(0.7, 3.0, np.array([1.0, 2.0]), 3.0, np.zeros(2)) <= 1e-15

    def test_identity_zero_gradient(self):
        assert second_lip_identity_gap(0.7, 1.0, np.zeros(3), 5.0, np.ones(3)) == 0.0

    def test_identity_hand_evaluation(self):
        """alpha=1, Xi=0, ||g(z)||=3, g(w)=2: both sides are 1.5."""
        assert second_lip_identity_gap(1.0, 0.0, np.array([2.0]), 3.0, np.array([0.0])) <= 1e-15

    def test_identity_on_random_tuples(self):
        """Gap stays below 1e-10 scale over 1e4 random tuples."""
        rng = np.random.default_rng(1)
        for _ in range(10_000):
            d = int(rng.integers(1, 9))
            g = rng.standard_normal(d)
            g *= rng.uniform(0, 10) / np.linalg.norm(g)
            gap = second_lip_identity_gap(
                10.0 ** rng.uniform(-3, 1), rng.uniform(0, 10), g, rng.uniform(0, 10), rng.standard_normal(d)
            )
            assert gap <= 1e-10 * max(1.0, vec_norm(g))


class TestPathwiseBound:
    """Tests for the deterministic distance bound along a path."""

    def test_path_at_minimizer(self):
        """Zero-noise path that starts at w* never moves."""
        trace = make_trace([0.0, 0.0, 0.0], [0.0, 0.0, 0.0], init_err_sq=0.0)
        assert pathwise_bound_check(trace, np.zeros(2), np.zeros(2)) <= 0.0

    def test_corrupted_iterate_detected(self):
        """Moving one recorded iterate by 10 produces positive slack."""
        iterates = np.array([[0.5, 0.0], [0.25, 0.0]])
        trace = make_trace([0.25, 0.0625], [0.5, 0.75], iterates=iterates)
        w_star, w1 = np.zeros(2), np.array([1.0, 0.0])
        assert pathwise_bound_check(trace, w_star, w1) <= 0.0
        trace.iterates[1, 0] += 10.0
        assert pathwise_bound_check(trace, w_star, w1) == pytest.approx(8.5)

    def test_recorded_errors_used_without_iterates(self):
        trace = make_trace([4.0], [0.5])
        assert pathwise_bound_check(trace, np.zeros(1), np.ones(1)) == pytest.approx(0.5)

    def test_missing_running_sum(self):
        trace = make_trace([1.0, 1.0], [0.5])
        with pytest.raises(InvalidInputError):
            pathwise_bound_check(trace, np.zeros(1), np.ones(1))

    def test_missing_errors_and_iterates(self):
        trace = make_trace([math.nan], [0.5])
        with pytest.raises(InvalidInputError):
            pathwise_bound_check(trace, np.zeros(1), np.ones(1))


class TestTheorem1Bound:
    """Tests for the fourth-moment envelope."""

    def test_hand_evaluation_outside_step_condition(self):
        """theta mu = 1, gamma = 0: 0.25 + e^2 / 2."""
        value = theorem1_bound(1, 1.0, 0.0, 1.0, 1.0, 1.0, enforce_admissible=False)
        assert value == pytest.approx(0.25 + math.exp(2.0) / 2.0, rel=1e-12)
        assert value == pytest.approx(3.9445, abs=1e-4)

    def test_step_condition_enforced_by_default(self):
        with pytest.raises(PreconditionError):
            theorem1_bound(1, 1.0, 0.0, 1.0, 1.0, 1.0)

    def test_zero_constants(self):
        for n in (1, 10, 1000):
            assert theorem1_bound(n, 0.5, 0.0, 1.0, 0.0, 0.0) == 0.0

    def test_log_branch(self):
        """2 theta mu = 1, gamma = 0, n = 9: e (1 + ln 9) / 10."""
        value = theorem1_bound(9, 0.5, 0.0, 1.0, 1.0, 0.0)
        assert value == pytest.approx(math.e * (1.0 + math.log(9.0)) / 10.0, rel=1e-12)
        assert value == pytest.approx(0.8692, abs=2e-4)

    def test_small_exponent_branch(self):
        """2 theta mu = 0.5, gamma = 1, init 0: the third branch."""
        x, y, n = 0.5, 1.0, 4
        expected = math.exp(x / 2.0) * (n + 1 + y) ** (-x) * 2.0 ** (x - 2) * (x - 2 - y) / (x - 1)
        assert theorem1_bound(n, 0.25, 1.0, 1.0, 1.0, 0.0) == pytest.approx(expected, rel=1e-12)

    def test_nonincreasing_for_exponent_at_least_one(self):
        for theta in (0.5, 0.75, 1.0):
            values = [theorem1_bound(n, theta, 1.0, 1.0, 2.0, 3.0) for n in range(1, 300)]
            assert all(b <= a * (1 + 1e-12) for a, b in zip(values, values[1:]))

    def test_negative_k(self):
        with pytest.raises(InvalidInputError):
            theorem1_bound(1, 0.5, 0.0, 1.0, -1.0, 0.0)


class TestTheorem2:
    """Tests for the contraction constant C and its envelope."""

    def test_hand_evaluation(self):
        assert theorem2_constant_c(1.0, 1.0, 1.0, 1.0, 0.0, 1.0) == pytest.approx(2.0 / 3.0, rel=1e-15)

    def test_large_gamma_limit(self):
        """C tends to 2 theta mu / (1 + theta L)."""
        c = theorem2_constant_c(0.5, 1e8, 1.0, 4.0, 1.0, 2.0)
        assert c == pytest.approx(2 * 0.5 * 1.0 / (1 + 0.5 * 4.0), rel=1e-6)

    def test_zero_theta(self):
        assert theorem2_constant_c(0.0, 1.0, 1.0, 1.0, 1.0, 1.0) == 0.0

    def test_vanishing_denominator(self):
        with pytest.raises(PreconditionError):
            theorem2_constant_c(1.0, 0.0, 1.0, 0.0, 0.0, 1.0)

    def test_bound_uses_c_as_exponent(self):
        """With C = 2 theta mu the envelope coincides with the fourth-moment one."""
        assert theorem2_bound(5, 1.0, 1.0, 2.0, 1.0) == pytest.approx(theorem1_bound(5, 0.5, 1.0, 1.0, 2.0, 1.0))

    def test_bound_rejects_large_c(self):
        with pytest.raises(PreconditionError):
            theorem2_bound(1, 0.0, 1.5, 1.0, 1.0)

    def test_monte_carlo_c_without_noise(self):
        """Noiseless gradients at w* give the closed-form C."""
        problem = QuadraticProblem([1.0, 2.0], [1.0, 1.0])
        constants = ProblemConstants(mu=1.0, mu2=1.0, lipschitz=2.0, lipschitz4=2.0, sigma=0.0, sigma4=0.0)
        c = estimate_theorem2_c(problem, constants, 0.5, 1.0, np.zeros(2), problem.w_star, draws=50)
        assert c == pytest.approx(theorem2_constant_c(0.5, 1.0, 1.0, 2.0, 0.0, math.sqrt(2.0)), rel=1e-14)

    def test_monte_carlo_c_with_noise_is_smaller(self):
        problem = QuadraticProblem([1.0, 2.0], [1.0, 1.0], noise_sigma=1.0)
        constants = ProblemConstants(mu=1.0, mu2=1.0, lipschitz=2.0, lipschitz4=2.0, sigma=1.4, sigma4=1.6)
        c = estimate_theorem2_c(problem, constants, 0.5, 1.0, np.zeros(2), problem.w_star, draws=500)
        assert 0.0 < c < theorem2_constant_c(0.5, 1.0, 1.0, 2.0, 0.0, math.sqrt(2.0))


class TestTheorem3Bound:
    """Tests for the bounded-gradient envelope."""

    def test_hand_evaluation(self):
        """2 theta mu = 2, gamma = 0, theta B = 1: 4/9 + e/3."""
        value = theorem3_bound(1, 1.0, 0.0, 1.0, 1.0, 1.0, init_err_sq=1.0)
        assert value == pytest.approx(4.0 / 9.0 + math.e / 3.0, rel=1e-12)
        assert value == pytest.approx(1.3505, abs=1e-4)

    def test_zero_bound_matches_theorem1_with_scaled_k(self):
        """B = 0 is the fourth-moment envelope with K replaced by theta^2 K."""
        a = theorem3_bound(7, 0.4, 1.0, 1.0, 0.0, 2.0, init_err_sq=0.5)
        b = theorem1_bound(7, 0.4, 1.0, 1.0, 0.4**2 * 2.0, 0.5)
        assert a == pytest.approx(b, rel=1e-14)

    def test_zero_constants(self):
        assert theorem3_bound(3, 1.0, 0.0, 1.0, 1.0, 0.0) == 0.0

    def test_precondition(self):
        with pytest.raises(PreconditionError):
            theorem3_bound(1, 2.0, 0.0, 1.0, 0.1, 1.0)


class TestTheoremConstants:
    constants = ProblemConstants(
        mu=1.0, mu2=1.0, lipschitz=2.0, lipschitz4=2.0, sigma=0.5, sigma4=0.6, grad_bound=3.0, noise_ratio=0.5
    )

    def test_k_formulas(self):
        m2, m4, theta = 4.0, 16.0, 0.5
        t2 = 2 * theta**2
        k1 = t2 * 2 * 1 * 16**0.75 + (t2 * 4 + t2 * 2 * 0.5 + t2 * 1 * 0.5) * 4 + t2 * 0.25 * 2 + t2 * 0.25
        assert theorem1_k(self.constants, theta, m2, m4) == pytest.approx(k1, rel=1e-14)
        k2 = t2 * ((4 + 1) * 4 + 0.25 + 0.25 * 2)
        assert theorem2_k(self.constants, theta, m2) == pytest.approx(k2, rel=1e-14)
        k3 = (4 + 6 * 0.25) * 9 + 2 * (9 * 0.5 + 0.5 * 3) * 2
        assert theorem3_k(self.constants, m2) == pytest.approx(k3, rel=1e-14)

    def test_bundle(self):
        bundle = theorem_constants(self.constants, 0.5, 1.0, 4.0, 16.0, init_dist=1.0)
        assert bundle.xi_cap == 3.0
        assert bundle.phi == 0.0
        assert bundle.k_bounded > 0.0
        assert bundle.source == "empirical"

    def test_k3_needs_bounded_noise(self):
        unbounded = self.constants.model_copy(update={"grad_bound": None})
        with pytest.raises(PreconditionError):
            theorem3_k(unbounded, 1.0)

    def test_admissible_mu(self):
        assert admissible_mu(1.0, 2.0, 1.0) == 0.5
        assert admissible_mu(0.1, 2.0, 1.0) == 0.1


class TestEstimateMoments:
    """Tests for empirical a priori bounds."""

    def test_zero_error_paths(self):
        traces = [make_trace([0.0, 0.0], [0.0, 0.0], init_err_sq=0.0) for _ in range(30)]
        estimate = estimate_m2_m4(traces)
        assert estimate.m2 == 0.0 and estimate.m4 == 0.0

    def test_jensen_and_sup(self):
        rng = np.random.default_rng(3)
        traces = [make_trace(rng.exponential(size=20), np.zeros(20), init_err_sq=0.1) for _ in range(40)]
        estimate = estimate_m2_m4(traces)
        means = np.mean([t.err_sq for t in traces], axis=0)
        assert estimate.m2 == pytest.approx(means.max())
        assert estimate.m2**2 <= estimate.m4

    def test_too_few_paths(self):
        with pytest.raises(InsufficientDataError):
            estimate_m2_m4([make_trace([1.0], [0.0])] * 29)


class TestEnvelopeCheck:
    def test_dominated(self):
        agg = AggregateTrace(
            n=np.array([10, 20, 30]), alpha=np.ones(3),
            mean_err_sq=np.array([5.0, 1.0, 0.5]), se_err_sq=np.array([0.1, 0.1, 0.1]),
            mean_f_gap=np.zeros(3), se_f_gap=np.zeros(3), paths=np.full(3, 10),
        )
        assert envelope_check(agg, lambda n: 40.0 / n) == pytest.approx(max(1.3 - 2.0, 0.8 - 40.0 / 30))
        assert envelope_check(agg, lambda n: 1.0 / n) > 0.0

    def test_no_rows_in_range(self):
        with pytest.raises(InsufficientDataError):
            envelope_check(AggregateTrace.empty(), lambda n: 1.0)


class TestFGapSandwich:
    """Tests for the function-gap sandwich."""

    def test_equal_eigenvalues_are_tight(self):
        problem = QuadraticProblem([2.0, 2.0], [1.0, 1.0])
        w = np.array([3.0, -1.0])
        upper, lower = f_gap_sandwich(problem.objective(w), 0.0, 8.0, 2.0, 2.0)
        assert upper == 0.0 and lower == 0.0

    def test_ill_conditioned_quadratic(self):
        problem = QuadraticProblem([1.0, 10.0], [0.0, 0.0])
        rng = np.random.default_rng(4)
        for _ in range(200):
            w = rng.standard_normal(2) * 3
            upper, lower = f_gap_sandwich(problem.objective(w), 0.0, float(w @ w), 1.0, 10.0)
            assert upper >= -1e-9 and lower >= -1e-9

    def test_at_minimizer(self):
        assert f_gap_sandwich(0.0, 0.0, 0.0, 1.0, 2.0) == (0.0, 0.0)

    def test_mu_above_lipschitz(self):
        with pytest.raises(PreconditionError):
            f_gap_sandwich(1.0, 0.0, 1.0, 3.0, 2.0)


class TestAlgebraicBounds:
    """Tests for the harmonic product and sum bounds."""

    def test_product_hand_evaluation(self):
        product, bound = algebraic_bound_product(1.0, 1.0, 1, 2)
        assert product == pytest.approx(1.0 / 3.0, rel=1e-15)
        assert bound == pytest.approx(0.5, rel=1e-15)

    def test_empty_product(self):
        assert algebraic_bound_product(0.5, 1.0, 5, 4) == (1.0, 1.0)

    def test_product_long_range(self):
        product, bound = algebraic_bound_product(2.0, 1.0, 1, 50)
        direct = 1.0
        for i in range(1, 51):
            direct *= 1.0 - 2.0 / (i + 1.0)
        assert product == pytest.approx(direct, abs=1e-300)
        assert product <= bound

    def test_sum_branch_above_one(self):
        value, bound = algebraic_bound_sum(2.0, 1.0, 100)
        assert bound == pytest.approx(math.exp(1.0) / 102.0, rel=1e-14)
        assert value <= bound

    def test_sum_log_branch(self):
        value, bound = algebraic_bound_sum(1.0, 0.5, 10)
        assert value <= bound

    def test_sum_branch_below_one(self):
        value, bound = algebraic_bound_sum(0.5, 1.0, 10)
        assert value <= bound

    def test_sum_matches_double_loop(self):
        x, y, n = 1.3, 2.0, 25
        direct = 0.0
        for i in range(1, n + 1):
            prod = 1.0
            for j in range(i + 1, n + 1):
                prod *= 1.0 - x / (j + y)
            direct += prod / (i + y) ** 2
        assert algebraic_bound_sum(x, y, n)[0] == pytest.approx(direct, rel=1e-13)

    def test_precondition(self):
        with pytest.raises(PreconditionError):
            algebraic_bound_sum(3.0, 1.0, 5)
        with pytest.raises(PreconditionError):
            algebraic_bound_product(0.5, 1.0, 7, 5)


class TestTaylorInequality:
    def test_unit_values(self):
        assert taylor_inequality(1.0, 1.0, 1.0) == (-0.5, 0.0)

    def test_tangency_at_zero(self):
        first, second = taylor_inequality(2.0, 3.0, 1e-9)
        assert first == pytest.approx(-1.0 / 3.0) and second - first < 1e-15

    def test_hand_evaluation(self):
        first, second = taylor_inequality(3.0, 2.0, 5.0)
        assert first == pytest.approx(-1.0 / 17.0)
        assert second == pytest.approx(3.25)
        assert first <= second

    def test_non_positive_input(self):
        with pytest.raises(InvalidInputError):
            taylor_inequality(0.0, 1.0, 1.0)
