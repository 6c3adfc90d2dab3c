from typing import Optional
from pydantic import BaseModel, Field


class CheckResult(BaseModel):
    """Outcome of one property check of the verification suite."""

    name: str
    passed: bool
    cases: int = Field(..., ge=0, description="Number of evaluated cases")
    violations: int = Field(..., ge=0)
    worst: Optional[float] = Field(None, description="Largest violation margin, null when none was measured")
    detail: str = ""


class VerificationReport(BaseModel):
    passed: bool
    checks: list[CheckResult]


class Theorem1Request(BaseModel):
    n: int = Field(..., ge=1)
    theta: float = Field(..., gt=0)
    gamma: float = Field(..., ge=0)
    mu: float = Field(..., gt=0)
    k: float = Field(..., ge=0)
    init_err_sq: float = Field(..., ge=0)
    enforce_admissible: bool = True


class Theorem3Request(BaseModel):
    n: int = Field(..., ge=1)
    theta: float = Field(..., gt=0)
    gamma: float = Field(..., ge=0)
    mu: float = Field(..., gt=0)
    b_bound: float = Field(..., ge=0)
    k: float = Field(..., ge=0)
    init_err_sq: float = Field(0.0, ge=0)


class BoundResponse(BaseModel):
    bound: float


class SandwichRequest(BaseModel):
    f_at_w: float
    f_at_star: float
    dist_sq: float = Field(..., ge=0)
    mu: float = Field(..., ge=0)
    lipschitz: float = Field(..., gt=0)


class SandwichResponse(BaseModel):
    upper_slack: float
    lower_slack: float
    holds: bool
