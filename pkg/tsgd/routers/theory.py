from fastapi import APIRouter, Request
from fastapi.concurrency import run_in_threadpool

from tsgd.middleware.rate_limiter import EXPENSIVE_LIMIT, limiter
from tsgd.schemas.verification import (
    BoundResponse,
    SandwichRequest,
    SandwichResponse,
    Theorem1Request,
    Theorem3Request,
    VerificationReport,
)
from tsgd.services.theory import f_gap_sandwich, theorem1_bound, theorem3_bound
from tsgd.services.verification import run_verification
from tsgd.utils.exceptions import BadRequestException, InvalidInputError

router = APIRouter()


@router.get("/verify", response_model=VerificationReport)
@limiter.limit(EXPENSIVE_LIMIT)
async def verify(request: Request, seed: int = 0):
    """Run the lemma property suite; `passed` is false if any check has a violation."""
    checks = await run_in_threadpool(run_verification, seed)
    return VerificationReport(passed=all(c.passed for c in checks), checks=checks)


@router.post("/theorem1", response_model=BoundResponse)
async def theorem1(body: Theorem1Request):
    """Mean-square error envelope of the harmonic schedule."""
    try:
        return BoundResponse(bound=theorem1_bound(**body.model_dump()))
    except InvalidInputError as exc:
        raise BadRequestException(detail=exc.detail)


@router.post("/theorem3", response_model=BoundResponse)
async def theorem3(body: Theorem3Request):
    """Envelope under an almost-sure gradient bound B."""
    try:
        return BoundResponse(bound=theorem3_bound(**body.model_dump()))
    except InvalidInputError as exc:
        raise BadRequestException(detail=exc.detail)


@router.post("/sandwich", response_model=SandwichResponse)
async def sandwich(body: SandwichRequest):
    try:
        upper, lower = f_gap_sandwich(**body.model_dump())
    except InvalidInputError as exc:
        raise BadRequestException(detail=exc.detail)
    scale = max(1.0, abs(body.f_at_w), body.lipschitz * body.dist_sq)
    return SandwichResponse(upper_slack=upper, lower_slack=lower, holds=min(upper, lower) >= -1e-9 * scale)
