"""Monte Carlo runner: sample paths, aggregation, rate fitting, gamma sweeps and CSV output."""

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Literal, Optional, Sequence, Union

import numpy as np

from tsgd.config import get_settings
from tsgd.models.core import ParamVector, RngStream, StochasticGradientOracle
from tsgd.models.optimizer import OptimizerState
from tsgd.models.trace import AGGREGATE_COLUMNS, AggregateTrace, ExperimentResult, RunTrace
from tsgd.schemas.experiment import AggregateRow, ExperimentConfig, RunSummary, SweepRow
from tsgd.services.core import vec_norm
from tsgd.services.optimizers import STEP_RULES, schedule_value
from tsgd.services.problems import build_problem, initial_point, reference_solution
from tsgd.utils.exceptions import InsufficientDataError, InvalidInputError

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ("gamma", "optimizer", "final_err", "max_err", "diverged")
TRACE_COLUMNS = ("n", "alpha", "err_sq", "f_gap", "step_length", "grad_norm", "cum_tamed")

# Rounding slack when testing ||w - w*|| against the domain radius.
DOMAIN_RTOL = 1e-12


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    return ExperimentConfig.model_validate_json(Path(path).read_text())


## sample paths

def run_path(
    problem: StochasticGradientOracle,
    cfg: ExperimentConfig,
    path_index: int,
    w1: ParamVector,
    w_star: Optional[ParamVector] = None,
    f_star: Optional[float] = None,
) -> RunTrace:
    """One sample path driven by stream `path_index` of the master seed.

    The optimizer takes every step; rows are stored only when n is a multiple of
    `record_every`. A path whose iterate leaves the overflow guard is truncated,
    and so is a path that leaves the domain ball of a problem with a
    `domain_radius`; the offending step is not recorded.
    """
    guard = get_settings().overflow_guard
    radius = getattr(problem, "domain_radius", None)
    center = problem.w_star
    rng = RngStream(seed=cfg.seed, stream_id=path_index).generator()
    draws = problem.draws(rng, getattr(cfg.problem, "batch_size", None))
    step = STEP_RULES[cfg.optimizer]
    state = OptimizerState(iterate=w1.copy(), schedule=cfg.schedule)

    rows: dict[str, list] = {name: [] for name in TRACE_COLUMNS}
    iterates: list[np.ndarray] = []
    cum_tamed = 0.0
    diverged_at = exited_at = None

    for n in range(1, cfg.n_steps + 1):
        gradient = problem.gradient_at(next(draws), state.iterate)
        alpha = schedule_value(cfg.schedule, n)
        grad_norm = vec_norm(gradient)
        with np.errstate(over="ignore", invalid="ignore"):
            new_state = step(state, gradient)
        cum_tamed += min(1.0, alpha * grad_norm)
        if not np.all(np.abs(new_state.iterate) <= guard):
            diverged_at = n
            logger.warning("path %d (%s) diverged at step %d", path_index, cfg.optimizer, n)
            break
        if radius is not None and vec_norm(new_state.iterate - center) > radius * (1.0 + DOMAIN_RTOL):
            exited_at = n
            logger.warning("path %d (%s) left the domain ball at step %d", path_index, cfg.optimizer, n)
            break
        step_length = vec_norm(new_state.iterate - state.iterate)
        state = new_state
        if n % cfg.record_every:
            continue
        w = state.iterate
        rows["n"].append(n)
        rows["alpha"].append(alpha)
        rows["err_sq"].append(float(np.dot(w - w_star, w - w_star)) if w_star is not None else math.nan)
        rows["f_gap"].append(problem.objective(w) - f_star if f_star is not None else math.nan)
        rows["step_length"].append(step_length)
        rows["grad_norm"].append(grad_norm)
        rows["cum_tamed"].append(cum_tamed)
        if cfg.record_iterates:
            iterates.append(w.copy())

    logger.debug("path %d finished after %d recorded rows", path_index, len(rows["n"]))
    columns = {name: np.asarray(values, dtype=np.int64 if name == "n" else np.float64) for name, values in rows.items()}
    return RunTrace(
        optimizer=cfg.optimizer,
        **columns,
        init_err_sq=float(np.dot(w1 - w_star, w1 - w_star)) if w_star is not None else math.nan,
        diverged=diverged_at is not None,
        diverged_at=diverged_at,
        exited_domain_at=exited_at,
        iterates=np.asarray(iterates).reshape(-1, w1.size) if cfg.record_iterates else None,
        final_iterate=state.iterate,
    )


def _path_job(problem, cfg, w1, w_star, f_star, path_index: int) -> RunTrace:
    return run_path(problem, cfg, path_index, w1, w_star, f_star)


def resolve_reference(
    cfg: ExperimentConfig,
    problem: StochasticGradientOracle,
    w1: ParamVector,
) -> tuple[Optional[ParamVector], Optional[float]]:
    """Exact minimizer when known, otherwise a reference solve.

    Without an explicit `reference_budget` the budget is ten times the run and a
    non-convergent reference only logs a warning.
    """
    if problem.w_star is not None:
        return problem.w_star, problem.f_star
    strict = cfg.reference_budget is not None
    budget = cfg.reference_budget or 10 * cfg.n_steps
    return reference_solution(
        problem, budget, seed=cfg.seed, w1=w1, method=cfg.reference_method,
        planned_steps=cfg.n_steps, strict=strict,
    )


def run_paths(cfg: ExperimentConfig) -> ExperimentResult:
    """Run `n_paths` independent paths and aggregate them in path-index order."""
    problem = build_problem(cfg)
    w1 = initial_point(cfg, problem)
    w_star, f_star = resolve_reference(cfg, problem, w1)
    workers = get_settings().workers
    logger.info(
        "running %d %s paths of %d steps on %s (workers=%d)",
        cfg.n_paths, cfg.optimizer, cfg.n_steps, problem.name, workers,
    )

    if workers > 1 and cfg.n_paths > 1:
        job = partial(_path_job, problem, cfg, w1, w_star, f_star)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(job, range(cfg.n_paths)))
    else:
        traces = [run_path(problem, cfg, i, w1, w_star, f_star) for i in range(cfg.n_paths)]

    result = ExperimentResult(traces=traces, aggregate=aggregate(traces), w1=w1, w_star=w_star, f_star=f_star)
    logger.info(
        "finished: %d of %d paths diverged, %d left the domain",
        result.diverged_paths, cfg.n_paths, result.exited_paths,
    )
    return result


## aggregation and rates

def aggregate(traces: Sequence[RunTrace]) -> AggregateTrace:
    """Mean and standard error per recorded n over the paths that reached it."""
    if not traces:
        raise InsufficientDataError("nothing to aggregate")
    longest = max(traces, key=len)
    length = len(longest)
    if length == 0:
        return AggregateTrace.empty()

    present = np.zeros((len(traces), length), dtype=bool)
    err_sq = np.zeros((len(traces), length))
    f_gap = np.zeros((len(traces), length))
    for p, trace in enumerate(traces):
        if not np.array_equal(trace.n, longest.n[:len(trace)]):
            raise InvalidInputError("paths were recorded on different step grids")
        present[p, :len(trace)] = True
        err_sq[p, :len(trace)] = trace.err_sq
        f_gap[p, :len(trace)] = trace.f_gap
    counts = present.sum(axis=0)

    def mean_and_se(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            mean = np.where(present, values, 0.0).sum(axis=0) / counts
            sq_dev = np.where(present, (values - mean) ** 2, 0.0).sum(axis=0)
            se = np.where(counts > 1, np.sqrt(sq_dev / np.maximum(counts - 1, 1) / counts), 0.0)
        se[np.isnan(mean)] = np.nan
        return mean, se

    mean_err, se_err = mean_and_se(err_sq)
    mean_gap, se_gap = mean_and_se(f_gap)
    return AggregateTrace(
        n=longest.n.copy(), alpha=longest.alpha.copy(),
        mean_err_sq=mean_err, se_err_sq=se_err,
        mean_f_gap=mean_gap, se_f_gap=se_gap,
        paths=counts.astype(np.int64),
    )


def fit_rate(
    agg: AggregateTrace,
    n_min: int,
    n_max: int,
    metric: Literal["err_sq", "f_gap"] = "err_sq",
    min_points: int = 10,
) -> float:
    """Least-squares slope of log(mean error) against log(n) on [n_min, n_max]."""
    mean = agg.mean_err_sq if metric == "err_sq" else agg.mean_f_gap
    selected = (agg.n >= n_min) & (agg.n <= n_max)
    if selected.sum() < min_points:
        raise InsufficientDataError(f"need {min_points} recorded points in [{n_min}, {n_max}], got {selected.sum()}")
    values = mean[selected]
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise InvalidInputError(f"mean {metric} must be positive and finite on the fitted range")
    slope, _ = np.polyfit(np.log(agg.n[selected].astype(np.float64)), np.log(values), 1)
    return float(slope)


def _error_column(agg: AggregateTrace) -> np.ndarray:
    if agg.mean_err_sq.size and np.all(np.isfinite(agg.mean_err_sq)):
        return agg.mean_err_sq
    return agg.mean_f_gap


def gamma_sweep(
    cfg: ExperimentConfig,
    gammas: Sequence[float],
    optimizers: Sequence[str] = ("tsgd", "sgd"),
) -> list[SweepRow]:
    """run_paths per (gamma, optimizer); reports the final and the largest recorded mean error."""
    if not gammas:
        raise InvalidInputError("gammas must not be empty")
    rows = []
    for gamma in gammas:
        for optimizer in optimizers:
            logger.info("sweep: gamma=%g optimizer=%s", gamma, optimizer)
            run_cfg = cfg.model_copy(update={
                "schedule": cfg.schedule.model_copy(update={"gamma": float(gamma)}),
                "optimizer": optimizer,
            })
            result = run_paths(run_cfg)
            errors = _error_column(result.aggregate)
            rows.append(SweepRow(
                gamma=float(gamma),
                optimizer=optimizer,
                final_err=_finite_or_none(errors[-1]) if errors.size else None,
                max_err=_finite_or_none(np.nanmax(errors)) if np.any(np.isfinite(errors)) else None,
                diverged=result.diverged_paths > 0,
            ))
    return rows


## CSV and summaries

def _fmt(value) -> str:
    return format(float(value), ".17g")


def emit_csv(data: Union[AggregateTrace, Sequence[SweepRow]], path: Union[str, Path]) -> None:
    """Header plus one line per row; reals with 17 significant digits and LF line ends."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        if isinstance(data, AggregateTrace):
            writer.writerow(AGGREGATE_COLUMNS)
            for i in range(len(data)):
                writer.writerow([int(data.n[i])] + [_fmt(col[i]) for col in data.columns()[1:]])
        else:
            writer.writerow(SWEEP_COLUMNS)
            for row in data:
                writer.writerow([
                    _fmt(row.gamma), row.optimizer,
                    "" if row.final_err is None else _fmt(row.final_err),
                    "" if row.max_err is None else _fmt(row.max_err),
                    str(row.diverged).lower(),
                ])


def read_aggregate_csv(path: Union[str, Path]) -> AggregateTrace:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != AGGREGATE_COLUMNS:
            raise InvalidInputError(f"{path} is not an aggregate CSV")
        try:
            records = [[float(v) for v in line] for line in reader if line]
        except ValueError as exc:
            raise InvalidInputError(f"{path}: {exc}") from None
    if not records:
        return AggregateTrace.empty()
    table = np.asarray(records)
    # Path counts are not part of the file.
    return AggregateTrace(table[:, 0].astype(np.int64), *table[:, 1:].T, paths=np.zeros(len(table), dtype=np.int64))


def _finite_or_none(value) -> Optional[float]:
    value = float(value)
    return value if math.isfinite(value) else None


def aggregate_rows(agg: AggregateTrace) -> list[AggregateRow]:
    return [
        AggregateRow(
            n=int(agg.n[i]),
            alpha=float(agg.alpha[i]),
            mean_err_sq=_finite_or_none(agg.mean_err_sq[i]),
            se_err_sq=_finite_or_none(agg.se_err_sq[i]),
            mean_f_gap=_finite_or_none(agg.mean_f_gap[i]),
            se_f_gap=_finite_or_none(agg.se_f_gap[i]),
        )
        for i in range(len(agg))
    ]


def rows_to_aggregate(rows: Sequence[AggregateRow]) -> AggregateTrace:
    if not rows:
        return AggregateTrace.empty()

    def column(name: str) -> np.ndarray:
        return np.array([math.nan if getattr(r, name) is None else getattr(r, name) for r in rows], dtype=np.float64)

    return AggregateTrace(
        n=np.array([r.n for r in rows], dtype=np.int64),
        alpha=column("alpha"),
        mean_err_sq=column("mean_err_sq"),
        se_err_sq=column("se_err_sq"),
        mean_f_gap=column("mean_f_gap"),
        se_f_gap=column("se_f_gap"),
        paths=np.zeros(len(rows), dtype=np.int64),
    )


def to_summary(cfg: ExperimentConfig, result: ExperimentResult) -> RunSummary:
    return RunSummary(
        optimizer=cfg.optimizer,
        n_paths=len(result.traces),
        diverged_paths=result.diverged_paths,
        exited_paths=result.exited_paths,
        f_star=result.f_star,
        rows=aggregate_rows(result.aggregate),
    )
