from dataclasses import dataclass

from tsgd.models.core import ParamVector
from tsgd.schemas.schedule import StepSchedule


@dataclass(frozen=True)
class OptimizerState:
    """Iterate w^n together with its step index n (starting at 1)."""

    iterate: ParamVector
    schedule: StepSchedule
    step_index: int = 1
