"""
Test configuration and fixtures for the tamed SGD library.
"""
from pathlib import Path
from typing import AsyncGenerator

import numpy as np
import pytest
from httpx import AsyncClient, ASGITransport
from scipy import sparse

from tsgd.config import get_settings
from tsgd.main import app
from tsgd.middleware.rate_limiter import limiter
from tsgd.models.dataset import SparseDataset
from tsgd.models.logistic import LogisticProblem
from tsgd.models.quadratic import QuadraticProblem
from tsgd.schemas.experiment import ExperimentConfig
from tsgd.services import experiment
from tsgd.services.theory import pathwise_bound_check

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session", autouse=True)
def pathwise_bound_on_every_trace():
    """Check every TSGD trace produced anywhere in the suite against the pathwise bound."""
    original = experiment.run_path
    tolerance = get_settings().pathwise_tolerance

    def checked(problem, cfg, path_index, w1, w_star=None, f_star=None):
        trace = original(problem, cfg, path_index, w1, w_star, f_star)
        if cfg.optimizer == "tsgd" and w_star is not None:
            slack = pathwise_bound_check(trace, w_star, w1)
            assert slack <= tolerance, f"pathwise bound violated by {slack:.3e} on path {path_index}"
        return trace

    patch = pytest.MonkeyPatch()
    patch.setattr(experiment, "run_path", checked)
    yield
    patch.undo()


@pytest.fixture(autouse=True)
def no_rate_limit():
    """Disable the request limiter so API tests can call expensive endpoints repeatedly."""
    limiter.enabled = False
    yield
    limiter.enabled = True


@pytest.fixture
async def client() -> AsyncGenerator[AsyncClient, None]:
    """Create an async test client."""
    transport = ASGITransport(app=app)
    async with AsyncClient(transport=transport, base_url="http://test") as ac:
        yield ac


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def toy_dataset() -> SparseDataset:
    """Four separable samples in one feature."""
    matrix = sparse.csr_matrix(np.array([[2.0], [1.0], [-1.0], [-2.0]]))
    return SparseDataset(matrix=matrix, labels=np.array([1.0, 1.0, -1.0, -1.0]))


@pytest.fixture
def toy_logistic(toy_dataset) -> LogisticProblem:
    return LogisticProblem(toy_dataset, reg=0.1, batch_size=1)


@pytest.fixture
def noisy_quadratic() -> QuadraticProblem:
    return QuadraticProblem([1.0, 10.0], [3.0, -1.0], noise_sigma=0.5, seed=1)


@pytest.fixture
def quadratic_config() -> ExperimentConfig:
    """Small noisy quadratic experiment, cheap enough for unit tests."""
    return ExperimentConfig.model_validate({
        "problem": {"kind": "quadratic", "diag": [1.0, 4.0], "target": [1.0, -1.0], "noise_sigma": 0.3},
        "schedule": {"theta": 1.0, "gamma": 1.0},
        "n_steps": 200,
        "n_paths": 5,
        "record_every": 10,
        "seed": 7,
    })


@pytest.fixture
def logistic_config() -> ExperimentConfig:
    return ExperimentConfig.model_validate({
        "problem": {
            "kind": "logistic",
            "synthetic": {"n_samples": 40, "n_features": 5, "seed": 2},
            "reg": 0.1,
            "batch_size": 4,
        },
        "schedule": {"theta": 20.0, "gamma": 10.0},
        "n_steps": 100,
        "n_paths": 3,
        "record_every": 10,
        "seed": 3,
        "reference_method": "scipy",
    })
