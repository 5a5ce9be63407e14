"""FastAPI service exposing the pipeline stages.

Each endpoint runs one stage against a server-side workspace directory
(config.out) and returns the stage summary. The CLI is a thin client of
this app, either in-process or over HTTP.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ConfigError, DataError
from ..pipeline import STAGES
from .models import ErrorBody, StageRequest, StageSummary


def create_app() -> FastAPI:
    app = FastAPI(title="comfair", version=__version__)

    @app.exception_handler(ConfigError)
    async def _config_error(request, exc):
        return JSONResponse(
            status_code=400,
            content={"error": ErrorBody(type="ConfigError", message=str(exc)).model_dump()},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request, exc):
        # malformed request bodies are configuration errors, not data errors
        return JSONResponse(
            status_code=400,
            content={"error": ErrorBody(type="ConfigError", message=str(exc)).model_dump()},
        )

    @app.exception_handler(DataError)
    async def _data_error(request, exc):
        return JSONResponse(
            status_code=422,
            content={"error": ErrorBody(type="DataError", message=str(exc)).model_dump()},
        )

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    def _register(stage: str, runner):
        @app.post(f"/{stage}", response_model=StageSummary, name=stage)
        def run(req: StageRequest) -> StageSummary:
            summary = runner(req.config.to_stage_dict())
            return StageSummary(**summary)

    for stage, runner in STAGES.items():
        _register(stage, runner)

    return app


app = create_app()
