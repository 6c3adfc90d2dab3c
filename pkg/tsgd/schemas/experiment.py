"""Experiment configuration and result schemas."""

from typing import Annotated, Literal, Optional, Union
from pydantic import BaseModel, Field, model_validator

from tsgd.schemas.schedule import StepSchedule


class SyntheticData(BaseModel):
    n_samples: int = Field(..., ge=1)
    n_features: int = Field(..., ge=1)
    density: float = Field(0.3, gt=0, le=1)
    label_noise: float = Field(0.05, ge=0, le=0.5)
    seed: int = Field(0, ge=0)


class QuadraticSpec(BaseModel):
    kind: Literal["quadratic"] = "quadratic"
    diag: Optional[list[float]] = Field(None, description="Explicit eigenvalues")
    dim: Optional[int] = Field(None, ge=1, description="Dimension for log-spaced eigenvalues")
    mu: Optional[float] = Field(None, gt=0, description="Smallest log-spaced eigenvalue")
    lipschitz: Optional[float] = Field(None, gt=0, description="Largest log-spaced eigenvalue")
    target: Optional[list[float]] = Field(None, description="Minimizer w*, ones when omitted")
    noise_sigma: float = Field(0.0, ge=0)
    noise_kind: Literal["gaussian", "bounded_uniform"] = "gaussian"
    n_samples: Optional[int] = Field(None, ge=1, description="Finite-sum variant with a fixed noise table")
    batch_size: Optional[int] = Field(None, ge=1)
    domain_radius: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def check_eigenvalues(self):
        if self.diag is None and None in (self.dim, self.mu, self.lipschitz):
            raise ValueError("give either diag or dim, mu and lipschitz")
        if self.diag is not None and not self.diag:
            raise ValueError("diag must not be empty")
        if self.mu is not None and self.lipschitz is not None and self.mu > self.lipschitz:
            raise ValueError("mu must not exceed lipschitz")
        return self


class _DataSpec(BaseModel):
    data_path: Optional[str] = Field(None, description="LIBSVM file, optionally .gz")
    n_features: Optional[int] = Field(None, ge=1, description="Override of the feature count")
    synthetic: Optional[SyntheticData] = None
    reg: float = Field(1e-5, gt=0, description="lambda")
    batch_size: Optional[int] = Field(None, ge=1, description="Defaults to 1 % of the samples")
    fit_intercept: bool = True

    @model_validator(mode="after")
    def check_source(self):
        if (self.data_path is None) == (self.synthetic is None):
            raise ValueError("give exactly one of data_path and synthetic")
        return self


class LogisticSpec(_DataSpec):
    kind: Literal["logistic"] = "logistic"


class MlpSpec(_DataSpec):
    kind: Literal["mlp"] = "mlp"
    hidden_width: int = Field(100, ge=1)


ProblemSpec = Annotated[Union[QuadraticSpec, LogisticSpec, MlpSpec], Field(discriminator="kind")]


class ExperimentConfig(BaseModel):
    problem: ProblemSpec
    schedule: StepSchedule = StepSchedule()
    optimizer: Literal["tsgd", "sgd"] = "tsgd"
    n_steps: int = Field(..., ge=1)
    n_paths: int = Field(100, ge=1)
    record_every: int = Field(10, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    init: Optional[list[float]] = Field(None, description="w1; zeros (random for mlp) when omitted")
    record_iterates: bool = False
    reference_budget: Optional[int] = Field(None, ge=1)
    reference_method: Literal["tsgd", "scipy"] = "tsgd"
    output: Optional[str] = None


class AggregateRow(BaseModel):
    """One aggregate row; non-finite values travel as null."""

    n: int
    alpha: float
    mean_err_sq: Optional[float] = None
    se_err_sq: Optional[float] = None
    mean_f_gap: Optional[float] = None
    se_f_gap: Optional[float] = None


class RunSummary(BaseModel):
    optimizer: str
    n_paths: int
    diverged_paths: int
    exited_paths: int = Field(0, description="Paths truncated on leaving the domain ball")
    f_star: Optional[float] = None
    rows: list[AggregateRow]


class SweepRow(BaseModel):
    gamma: float
    optimizer: str
    final_err: Optional[float] = None
    max_err: Optional[float] = None
    diverged: bool


class SweepRequest(BaseModel):
    config: ExperimentConfig
    gammas: list[float] = Field(..., min_length=1)
    optimizers: list[Literal["tsgd", "sgd"]] = ["tsgd", "sgd"]


class SweepResponse(BaseModel):
    rows: list[SweepRow]


class RateRequest(BaseModel):
    rows: list[AggregateRow]
    n_min: int = Field(..., ge=1)
    n_max: int = Field(..., ge=1)
    metric: Literal["err_sq", "f_gap"] = "err_sq"


class RateResponse(BaseModel):
    slope: float
    points: int
