import logging

from fastapi import FastAPI
from slowapi import _rate_limit_exceeded_handler
from slowapi.errors import RateLimitExceeded

from tsgd import __version__
from tsgd.config import get_settings
from tsgd.middleware.rate_limiter import limiter
from tsgd.routers import experiment, theory

settings = get_settings()
logger = logging.getLogger(__name__)

app = FastAPI(
    title="Tamed SGD API",
    description="Tamed stochastic gradient descent experiments and convergence bounds",
    version=__version__,
    debug=settings.debug,
)

app.state.limiter = limiter
app.add_exception_handler(RateLimitExceeded, _rate_limit_exceeded_handler)
# Register routers
app.include_router(experiment.router, prefix="/api/v1/experiments", tags=["Experiments"])
app.include_router(theory.router, prefix="/api/v1/theory", tags=["Theory"])


@app.get("/")
async def root():
    return {"message": "Tamed SGD API", "version": __version__, "docs": "/docs"}


@app.get("/health")
async def health_check():
    return {"status": "healthy"}
