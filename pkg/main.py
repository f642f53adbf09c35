#!/usr/bin/env python3

from fastapi import FastAPI, Request, status
from fastapi.responses import JSONResponse
import logging

from api import pages_router, plans_router, simulate_router, sweeps_router
from config import TOOL_VERSION, configure_logging, get_settings
from errors import CostParamError, ProblemError, RedistError

settings = get_settings()

logger = logging.getLogger(__name__)


def create_app(log_level=None):
    """
    Create and configure the FastAPI application

    Parameters:
    - log_level: logging level name, INFO unless given

    Returns:
    - Configured FastAPI app
    """
    configure_logging(log_level or "INFO")
    app = FastAPI(title=settings.APP_NAME, version=TOOL_VERSION)

    setup_error_handlers(app)

    app.include_router(plans_router)
    app.include_router(simulate_router)
    app.include_router(sweeps_router)
    app.include_router(pages_router)

    logger.info(f"{settings.APP_NAME} {TOOL_VERSION} ready, shifts {'on' if settings.ENABLE_SHIFTS else 'off'} by default")
    return app


def setup_error_handlers(app: FastAPI):
    """Map domain failures onto HTTP status codes"""

    @app.exception_handler(ProblemError)
    async def problem_error(request: Request, exc: ProblemError):
        return JSONResponse(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, content={"detail": str(exc)})

    @app.exception_handler(CostParamError)
    async def cost_param_error(request: Request, exc: CostParamError):
        return JSONResponse(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, content={"detail": str(exc)})

    @app.exception_handler(RedistError)
    async def redist_error(request: Request, exc: RedistError):
        logger.error(f"{request.method} {request.url.path} failed: {exc}")
        return JSONResponse(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, content={"detail": str(exc)})


# Create the FastAPI application
app = create_app()

# For local development
if __name__ == "__main__":
    import uvicorn
    uvicorn.run('main:app', host="0.0.0.0", port=8000, reload=True)
