"""HTTP JSON API over the annotation service.

Routes:
  GET  /api/next?annotator=ID   -> next claimable pair (or {"pair": null})
  POST /api/submit              -> record a decision {annotator, pair_id, decision}
  GET  /api/progress            -> queue counters per status and scenario
  GET  /api/pair/{id}/image     -> the pair's image; coordinates in headers

All responses are JSON except the image; errors carry a machine-readable
`code` field.
"""

from __future__ import annotations

import mimetypes
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .annotation import AnnotationService, Decision
from .errors import DuplicateSubmission, LeaseExpired, UnknownAnnotator


class SubmitBody(BaseModel):
    annotator: str
    pair_id: str
    decision: str


def create_app(
    service: AnnotationService,
    image_paths: dict | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    """Wrap a service in the HTTP API.  `image_paths` maps image_id -> file."""
    app = FastAPI(title="depthlab annotation service")
    image_paths = image_paths or {}

    @app.exception_handler(UnknownAnnotator)
    async def _unknown_annotator(request: Request, exc: UnknownAnnotator):
        return JSONResponse(status_code=400, content={"code": "unknown_annotator", "detail": str(exc)})

    @app.exception_handler(LeaseExpired)
    async def _lease_expired(request: Request, exc: LeaseExpired):
        return JSONResponse(status_code=409, content={"code": "lease_expired", "detail": str(exc)})

    @app.exception_handler(DuplicateSubmission)
    async def _duplicate(request: Request, exc: DuplicateSubmission):
        return JSONResponse(status_code=409, content={"code": "duplicate_submission", "detail": str(exc)})

    @app.get("/api/next")
    def next_pair(annotator: str):
        claim = service.claim_next(annotator)
        if claim is None:
            return {"pair": None}
        record = claim.pair.to_record()
        record["role"] = claim.role.value
        record["lease_expiry"] = claim.lease_expiry
        return {"pair": record}

    @app.post("/api/submit")
    def submit(body: SubmitBody):
        try:
            decision = Decision(body.decision)
        except ValueError:
            return JSONResponse(
                status_code=422,
                content={"code": "bad_decision", "detail": f"unknown decision {body.decision!r}"},
            )
        state = service.submit(body.annotator, body.pair_id, decision)
        return {
            "pair_id": body.pair_id,
            "status": state.status.value,
            "discard_reason": state.discard_reason.value if state.discard_reason else None,
            "final_label": state.final_label.value if state.final_label else None,
        }

    @app.get("/api/progress")
    def progress():
        return service.progress()

    @app.get("/api/pair/{pair_id}/image")
    def pair_image(pair_id: str):
        try:
            st = service.pair_state(pair_id)
        except KeyError:
            return JSONResponse(status_code=404, content={"code": "unknown_pair", "detail": pair_id})
        path = image_paths.get(st.pair.image_id)
        if path is None or not Path(path).exists():
            return JSONResponse(
                status_code=404,
                content={"code": "image_missing", "detail": st.pair.image_id},
            )
        media_type = mimetypes.guess_type(str(path))[0] or "application/octet-stream"
        return FileResponse(
            path,
            media_type=media_type,
            headers={
                "X-Pair-Id": pair_id,
                "X-Pair-P1": f"{st.pair.p1[0]},{st.pair.p1[1]}",
                "X-Pair-P2": f"{st.pair.p2[0]},{st.pair.p2[1]}",
                "X-Pair-Scenario": st.pair.scenario,
            },
        )

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
