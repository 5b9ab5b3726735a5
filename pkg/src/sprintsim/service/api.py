"""HTTP interface for live sessions.

Facilitators create a session, spin the wheels, and close sprints;
teams post board commands with their token. Reads are open. Every
mutation returns the new log version so clients can send
expected_version on the next write and get a clean conflict instead of
a double apply. /stream pushes version bumps over server-sent events.
"""
from __future__ import annotations

import asyncio
import json
from typing import Any, Mapping

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse

from ..engine import EngineError, UNKNOWN_ID, command_from_payload
from ..metrics import metrics_document
from ..serialize import config_document_errors, state_to_jsonable
from .exports import burndown_csv, leaderboard_csv, log_csv, log_jsonl
from .store import SessionStore, StoreError, UNKNOWN_SESSION, VERSION_CONFLICT

STREAM_POLL_SECONDS = 0.2
STREAM_KEEPALIVE_SECONDS = 15.0

_HTTP_STATUS = {
    UNKNOWN_SESSION: 404,
    UNKNOWN_ID: 404,
    VERSION_CONFLICT: 409,
    "VALIDATION_ERROR": 422,
    "INTEGRITY_ERROR": 500,
    "FORBIDDEN": 403,
    "UNAUTHORIZED": 401,
}


def _error(code: str, message: str, **extra: Any) -> JSONResponse:
    body = {"code": code, "message": message}
    body.update(extra)
    return JSONResponse(body, status_code=_HTTP_STATUS.get(code, 409))


def _bearer_token(request: Request) -> str | None:
    header = request.headers.get("authorization", "")
    if header.lower().startswith("bearer "):
        return header[7:].strip()
    return None


def _session_view(session) -> dict[str, Any]:
    return {
        "session_id": session.session_id,
        "version": session.version,
        "state": state_to_jsonable(session.state),
    }


def create_app(store: SessionStore) -> FastAPI:
    app = FastAPI(title="sprintsim", docs_url=None, redoc_url=None)
    app.state.store = store

    def _get_session(session_id: str):
        return store.get(session_id)

    @app.exception_handler(StoreError)
    async def _store_error(_request, exc: StoreError):
        return _error(exc.code, exc.message)

    @app.exception_handler(EngineError)
    async def _engine_error(_request, exc: EngineError):
        return _error(exc.code, exc.message)

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.json()
        doc = body.get("config") if isinstance(body, dict) else None
        if doc is None:
            return _error("VALIDATION_ERROR", "body must carry a config object")
        problems = config_document_errors(doc)
        if problems:
            return _error(
                "VALIDATION_ERROR", "config rejected", violations=problems
            )
        session = store.create(doc)
        return {
            "session_id": session.session_id,
            "facilitator_token": session.meta["facilitator_token"],
            "team_token": session.meta["team_token"],
            **_session_view(session),
        }

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return _session_view(_get_session(session_id))

    @app.post("/sessions/{session_id}/teams/{team_id}/commands")
    async def post_command(session_id: str, team_id: str, request: Request):
        session = _get_session(session_id)
        role = session.role_for(_bearer_token(request))
        if role is None:
            return _error("UNAUTHORIZED", "a facilitator or team token is required")
        body = await request.json()
        payload = body.get("command") if isinstance(body, dict) else None
        if not isinstance(payload, Mapping):
            return _error("VALIDATION_ERROR", "body must carry a command object")
        try:
            command = command_from_payload(payload)
        except (EngineError, KeyError, TypeError, ValueError) as exc:
            return _error("VALIDATION_ERROR", f"bad command payload: {exc}")
        record = session.submit(
            team_id, command, actor=role,
            expected_version=body.get("expected_version"),
        )
        return {"record": record, **_session_view(session)}

    @app.post("/sessions/{session_id}/spin")
    async def spin(session_id: str, request: Request):
        session = _get_session(session_id)
        if session.role_for(_bearer_token(request)) != "facilitator":
            return _error("FORBIDDEN", "spinning the wheels takes the facilitator token")
        body: Mapping[str, Any] = {}
        if int(request.headers.get("content-length") or 0) > 0:
            parsed = await request.json()
            if isinstance(parsed, Mapping):
                body = parsed
        record, draws = session.spin(
            expected_day=body.get("expected_day"),
            expected_version=body.get("expected_version"),
        )
        return {"record": record, "draws": draws, **_session_view(session)}

    @app.post("/sessions/{session_id}/close-sprint")
    async def close_sprint(session_id: str, request: Request):
        session = _get_session(session_id)
        if session.role_for(_bearer_token(request)) != "facilitator":
            return _error("FORBIDDEN", "closing a sprint takes the facilitator token")
        body: Mapping[str, Any] = {}
        if int(request.headers.get("content-length") or 0) > 0:
            parsed = await request.json()
            if isinstance(parsed, Mapping):
                body = parsed
        record = session.close_sprint(expected_version=body.get("expected_version"))
        return {"record": record, **_session_view(session)}

    @app.get("/sessions/{session_id}/metrics")
    async def metrics(session_id: str):
        session = _get_session(session_id)
        with session.lock:
            doc = metrics_document(session.state)
            doc["version"] = session.version
        return doc

    @app.get("/sessions/{session_id}/export")
    async def export(session_id: str, what: str = "log", format: str = "jsonl"):
        session = _get_session(session_id)
        with session.lock:
            records = [dict(r) for r in session.records]
            state = session.state
        if what == "log" and format == "jsonl":
            return PlainTextResponse(
                log_jsonl(records), media_type="application/x-ndjson"
            )
        if what == "log" and format == "csv":
            return PlainTextResponse(log_csv(records), media_type="text/csv")
        if what == "burndown" and format == "csv":
            return PlainTextResponse(burndown_csv(state), media_type="text/csv")
        if what == "leaderboard" and format == "csv":
            return PlainTextResponse(leaderboard_csv(state), media_type="text/csv")
        return _error(
            "VALIDATION_ERROR",
            "export takes what=log|burndown|leaderboard and format=jsonl|csv",
        )

    @app.get("/sessions/{session_id}/stream")
    async def stream(session_id: str, request: Request):
        session = _get_session(session_id)

        def event_payload() -> str:
            body = json.dumps(
                {
                    "version": session.version,
                    "absolute_day": session.state.absolute_day,
                    "phase": session.state.phase.value,
                },
                sort_keys=True,
            )
            return f"event: update\ndata: {body}\n\n"

        async def generate():
            yield "retry: 2000\n\n"
            last_version = session.version
            yield event_payload()
            idle = 0.0
            while True:
                if await request.is_disconnected():
                    return
                await asyncio.sleep(STREAM_POLL_SECONDS)
                idle += STREAM_POLL_SECONDS
                if session.version != last_version:
                    last_version = session.version
                    idle = 0.0
                    yield event_payload()
                elif idle >= STREAM_KEEPALIVE_SECONDS:
                    idle = 0.0
                    yield ": keepalive\n\n"

        return StreamingResponse(generate(), media_type="text/event-stream")

    return app
