"""HTTP front of the analysis pipeline.

Template sets are loaded once at startup and shared read-only across
requests; every endpoint is a pure function of its input, so the service
can handle requests concurrently without locks.
"""

from __future__ import annotations

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from hqa.ink import InkFormatError, sample_from_document
from hqa.pipeline import PipelineConfig, TemplateSet, analyze, report_bytes


def create_app(templates: dict[str, TemplateSet], config: PipelineConfig | None = None) -> FastAPI:
    config = config or PipelineConfig()
    app = FastAPI(title="handwriting quality analysis", version="1")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "targets": len(templates)}

    @app.get("/v1/templates")
    def list_templates():
        return [
            {
                "target": ts.target,
                "script": ts.script,
                "guidelines": ts.guidelines,
            }
            for _, ts in sorted(templates.items())
        ]

    @app.post("/v1/analyze")
    async def analyze_sample(request: Request):
        try:
            payload = await request.json()
        except Exception:
            return JSONResponse(status_code=400, content={"detail": "body is not valid JSON"})
        try:
            sample = sample_from_document(payload)
        except InkFormatError as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        ts = templates.get(sample.meta.target)
        if ts is None:
            return JSONResponse(
                status_code=404,
                content={"detail": f"no templates for target {sample.meta.target!r}"},
            )
        try:
            verdict = analyze(sample, ts, config)
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        return Response(content=report_bytes(verdict), media_type="application/json")

    return app
