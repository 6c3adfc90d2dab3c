"""Assumption constants of a problem and constants of the convergence theorems."""

import math
from typing import Literal, Optional
from pydantic import BaseModel, Field, model_validator


class ProblemConstants(BaseModel):
    mu: float = Field(..., ge=0, description="Strong convexity constant")
    mu2: float = Field(..., ge=0, description="Second moment of the per-draw convexity constant")
    lipschitz: float = Field(..., gt=0, description="L, root second moment of per-draw Lipschitz constants")
    lipschitz4: float = Field(..., gt=0, description="L4, fourth-moment version of L")
    sigma: float = Field(..., ge=0, description="Root second moment of the gradient at the minimizer")
    sigma4: float = Field(..., ge=0, description="Root fourth moment of the gradient at the minimizer")
    grad_bound: Optional[float] = Field(None, gt=0, description="B, almost-sure gradient bound")
    noise_ratio: Optional[float] = Field(None, ge=0, description="D, noise-ratio bound")
    reg: float = Field(0.0, ge=0, description="lambda, L2 regularization")

    @model_validator(mode="after")
    def check_moments(self):
        values = [self.mu, self.mu2, self.lipschitz, self.lipschitz4, self.sigma, self.sigma4, self.reg]
        values += [v for v in (self.grad_bound, self.noise_ratio) if v is not None]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("problem constants must be finite")
        if self.mu > self.lipschitz:
            raise ValueError("mu must not exceed the Lipschitz constant")
        if self.mu > self.mu2:
            raise ValueError("mu must not exceed mu2")
        if self.sigma > self.sigma4:
            raise ValueError("sigma must not exceed sigma4")
        if self.lipschitz > self.lipschitz4:
            raise ValueError("L must not exceed L4")
        return self


class TheoremConstants(BaseModel):
    m2: float = Field(..., ge=0, description="A priori bound on E||w^n - w*||^2")
    m4: float = Field(..., ge=0, description="A priori bound on E||w^n - w*||^4")
    k: float = Field(0.0, ge=0, description="K of the fourth-moment theorem (theta^2 folded in)")
    k_weak: float = Field(0.0, ge=0, description="K of the second-moment theorem")
    k_bounded: float = Field(0.0, ge=0, description="K of the bounded-gradient theorem (theta^2 kept outside)")
    c: float = Field(0.0, ge=0, description="Contraction exponent C of the second-moment theorem")
    phi: float = Field(0.0, ge=0)
    xi_cap: float = Field(0.0, ge=0)
    source: Literal["empirical", "user_supplied"] = "user_supplied"

    @model_validator(mode="after")
    def check_jensen(self):
        values = [self.m2, self.m4, self.k, self.k_weak, self.k_bounded, self.c, self.phi, self.xi_cap]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("theorem constants must be finite")
        if self.source == "empirical" and self.m2**2 > self.m4 * (1 + 1e-12) + 1e-300:
            raise ValueError("empirical estimates violate m2^2 <= m4")
        return self
