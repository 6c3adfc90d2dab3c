from dataclasses import dataclass, field
from typing import Optional

import numpy as np

AGGREGATE_COLUMNS = ("n", "alpha", "mean_err_sq", "se_err_sq", "mean_f_gap", "se_f_gap")


@dataclass
class RunTrace:
    """Recorded steps of one sample path, one array entry per recorded n.

    Row n holds alpha_n, ||g_n||, the step length ||w^{n+1} - w^n||, the errors at
    w^{n+1}, and the running sum of min{1, alpha_i ||g_i||} over i <= n.
    err_sq is NaN when no minimizer is known. A path stops early when it diverges
    or, on a problem with a domain radius, when an iterate leaves that ball.
    """

    optimizer: str
    n: np.ndarray
    alpha: np.ndarray
    err_sq: np.ndarray
    f_gap: np.ndarray
    step_length: np.ndarray
    grad_norm: np.ndarray
    cum_tamed: np.ndarray
    init_err_sq: float = float("nan")
    diverged: bool = False
    diverged_at: Optional[int] = None
    exited_domain_at: Optional[int] = None
    iterates: Optional[np.ndarray] = None
    final_iterate: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self) -> int:
        return self.n.size

    @property
    def has_errors(self) -> bool:
        return self.err_sq.size > 0 and bool(np.all(np.isfinite(self.err_sq)))


@dataclass
class AggregateTrace:
    """Per-recorded-n mean and standard error across sample paths."""

    n: np.ndarray
    alpha: np.ndarray
    mean_err_sq: np.ndarray
    se_err_sq: np.ndarray
    mean_f_gap: np.ndarray
    se_f_gap: np.ndarray
    paths: np.ndarray

    def __len__(self) -> int:
        return self.n.size

    def columns(self) -> list[np.ndarray]:
        return [getattr(self, name) for name in AGGREGATE_COLUMNS]

    @classmethod
    def empty(cls) -> "AggregateTrace":
        return cls(*(np.empty(0) for _ in range(6)), paths=np.empty(0, dtype=np.int64))


@dataclass
class ExperimentResult:
    """Everything one `run_paths` call produced, with the reference point it measured against."""

    traces: list[RunTrace]
    aggregate: AggregateTrace
    w1: np.ndarray
    w_star: Optional[np.ndarray] = None
    f_star: Optional[float] = None

    @property
    def diverged_paths(self) -> int:
        return sum(t.diverged for t in self.traces)

    @property
    def exited_paths(self) -> int:
        return sum(t.exited_domain_at is not None for t in self.traces)
