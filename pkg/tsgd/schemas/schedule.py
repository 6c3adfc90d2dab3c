## step-size schedule schema

from typing import Literal, Optional
from pydantic import BaseModel, Field, model_validator


class StepSchedule(BaseModel):
    """alpha_n = theta / (n + gamma), or a constant step."""

    kind: Literal["harmonic", "constant"] = "harmonic"
    theta: float = Field(1.0, gt=0, description="Numerator of the harmonic schedule")
    gamma: float = Field(0.0, ge=0, description="Offset of the harmonic schedule")
    constant_value: Optional[float] = Field(None, gt=0, description="Step used when kind is constant")

    @model_validator(mode="after")
    def check_constant_value(self):
        if self.kind == "constant" and self.constant_value is None:
            raise ValueError("constant schedule needs constant_value")
        return self
