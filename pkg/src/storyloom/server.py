"""HTTP surface over :class:`storyloom.session.SessionService`."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel, Field

from . import errors
from .prototype import ModificationKind, ModificationRequest
from .scenarios import DecisionAction, ScenarioDecision
from .session import SessionService

_STATUS_BY_ERROR: list[tuple[type[Exception], int]] = [
    (errors.EmptyRequirement, 400),
    (errors.IndexOutOfRange, 400),
    (errors.PathTraversalRejected, 403),
    (errors.UnknownSession, 404),
    (errors.UnknownVersion, 404),
    (errors.PreviewFileNotFound, 404),
    (errors.IllegalState, 409),
    (errors.GatewayError, 502),
    (errors.ExtractionFailed, 502),
    (errors.MalformedGherkin, 502),
    (errors.StoryloomError, 500),
]


def _status_for(exc: Exception) -> int:
    for error_type, status in _STATUS_BY_ERROR:
        if isinstance(exc, error_type):
            return status
    return 500


class RequirementBody(BaseModel):
    text: str


class DecisionBody(BaseModel):
    action: str
    index: int | None = None
    text: str | None = None


class ModifyBody(BaseModel):
    kind: str = Field(pattern="^(design|function)$")
    text: str


def create_app(service: SessionService, ui_dir: Path | str | None = None) -> FastAPI:
    app = FastAPI(title="storyloom", docs_url=None, redoc_url=None)

    @app.exception_handler(errors.StoryloomError)
    async def on_error(_request: Request, exc: errors.StoryloomError) -> JSONResponse:
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": {"type": type(exc).__name__, "message": str(exc)}},
        )

    @app.post("/api/sessions")
    def create_session() -> dict:
        return {"id": service.create_session()}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return service.session_view(session_id)

    @app.post("/api/sessions/{session_id}/requirement")
    def submit_requirement(session_id: str, body: RequirementBody) -> dict:
        scenarios = service.submit_requirement(session_id, body.text)
        return {"scenarios": [{"index": s.index, "text": s.text} for s in scenarios]}

    @app.patch("/api/sessions/{session_id}/scenarios")
    def decide(session_id: str, body: DecisionBody) -> dict:
        try:
            action = DecisionAction(body.action)
        except ValueError:
            return JSONResponse(
                status_code=400,
                content={"error": {"type": "ValueError", "message": f"unknown action {body.action!r}"}},
            )
        decision = ScenarioDecision(action=action, index=body.index, text=body.text)
        try:
            scenarios = service.decide_scenarios(session_id, [decision])
        except ValueError as exc:
            return JSONResponse(
                status_code=400,
                content={"error": {"type": "ValueError", "message": str(exc)}},
            )
        return {"scenarios": [{"index": s.index, "text": s.text} for s in scenarios]}

    @app.post("/api/sessions/{session_id}/generate")
    def generate(session_id: str) -> dict:
        version, preview_url = service.generate_prototype(session_id)
        return {"version": version, "preview_url": preview_url}

    @app.post("/api/sessions/{session_id}/modify")
    def modify(session_id: str, body: ModifyBody) -> dict:
        try:
            request = ModificationRequest(kind=ModificationKind(body.kind), text=body.text)
        except ValueError as exc:
            return JSONResponse(
                status_code=400,
                content={"error": {"type": "ValueError", "message": str(exc)}},
            )
        version, preview_url = service.request_modification(session_id, request)
        return {"version": version, "preview_url": preview_url}

    @app.post("/api/sessions/{session_id}/accept")
    def accept(session_id: str) -> dict:
        return {"version": service.accept(session_id)}

    @app.get("/api/sessions/{session_id}/log")
    def get_log(session_id: str, after: int = 0) -> dict:
        events = service.get_log(session_id, after)
        return {"events": [e.to_dict() for e in events]}

    @app.get("/api/sessions/{session_id}/download/{version}")
    def download(session_id: str, version: int) -> Response:
        payload = service.package_download(session_id, version)
        return Response(
            content=payload,
            media_type="application/zip",
            headers={
                "Content-Disposition": f'attachment; filename="{session_id}-v{version}.zip"'
            },
        )

    @app.get("/preview/{session_id}/{version}/{path:path}")
    def preview(session_id: str, version: int, path: str) -> Response:
        payload, content_type = service.preview_file(session_id, version, path)
        return Response(content=payload, media_type=content_type)

    if ui_dir is not None:
        ui_path = Path(ui_dir)

        @app.get("/")
        def ui_index() -> FileResponse:
            return FileResponse(ui_path / "index.html")

        @app.get("/ui/{path:path}")
        def ui_asset(path: str) -> FileResponse:
            candidate = (ui_path / path).resolve()
            if not candidate.is_relative_to(ui_path.resolve()) or not candidate.is_file():
                raise errors.PreviewFileNotFound(path)
            return FileResponse(candidate)

    return app
