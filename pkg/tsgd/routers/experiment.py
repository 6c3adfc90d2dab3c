## Monte Carlo experiment endpoints
from fastapi import APIRouter, Request
from fastapi.concurrency import run_in_threadpool

from tsgd.middleware.rate_limiter import EXPENSIVE_LIMIT, limiter
from tsgd.schemas.experiment import (
    ExperimentConfig,
    RateRequest,
    RateResponse,
    RunSummary,
    SweepRequest,
    SweepResponse,
)
from tsgd.services.experiment import fit_rate, gamma_sweep, rows_to_aggregate, run_paths, to_summary
from tsgd.utils.exceptions import BadRequestException, ConflictException, InvalidInputError, NonConvergentBudgetError

router = APIRouter()


@router.post("/run", response_model=RunSummary)
@limiter.limit(EXPENSIVE_LIMIT)
async def run_experiment(request: Request, config: ExperimentConfig):
    """
    Run the sample paths of one experiment and return the aggregate trace.

    Non-finite aggregate values (unknown minimizer, diverged paths) are returned as null.
    """
    try:
        result = await run_in_threadpool(run_paths, config)
    except InvalidInputError as exc:
        raise BadRequestException(detail=exc.detail)
    except NonConvergentBudgetError as exc:
        raise ConflictException(detail=exc.detail)
    return to_summary(config, result)


@router.post("/sweep", response_model=SweepResponse)
@limiter.limit(EXPENSIVE_LIMIT)
async def sweep(request: Request, body: SweepRequest):
    """Run the experiment once per gamma and optimizer."""
    try:
        rows = await run_in_threadpool(gamma_sweep, body.config, body.gammas, body.optimizers)
    except InvalidInputError as exc:
        raise BadRequestException(detail=exc.detail)
    except NonConvergentBudgetError as exc:
        raise ConflictException(detail=exc.detail)
    return SweepResponse(rows=rows)


## log-log slope of posted aggregate rows
@router.post("/rate", response_model=RateResponse)
async def rate(body: RateRequest):
    agg = rows_to_aggregate(body.rows)
    try:
        slope = fit_rate(agg, body.n_min, body.n_max, metric=body.metric)
    except InvalidInputError as exc:
        raise BadRequestException(detail=exc.detail)
    points = int(((agg.n >= body.n_min) & (agg.n <= body.n_max)).sum())
    return RateResponse(slope=slope, points=points)
