"""HTTP facade over the runtime.

Endpoints that take a request body are async and read it raw, so clients may
send any content-type (browsers send application/json).  The rest are sync
and run on FastAPI's worker threadpool.  Session locks are plain
threading.Locks held only across a pure-CPU transition, which is safe from
either context.  Responses are encoded by hand with sorted keys so two
servers over the same story emit identical bytes.

Sessions live in memory and expire after `expiry_seconds` without a touch;
expiry is lazy, checked on access, with a sweep on every store operation.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request, Response

from .errors import (
    HashMismatchError,
    MalformedInputError,
    MalformedSaveError,
    SessionFinishedError,
    UnsupportedVersionError,
)
from .model import StoryGraph
from .runtime import (
    Session,
    apply_event,
    event_from_json,
    new_session,
    restore,
    save,
    view,
)

DEFAULT_EXPIRY_SECONDS = 24 * 60 * 60
MAX_SEED = 2**64


@dataclass
class SessionRecord:
    story_id: str
    session: Session
    last_used: float
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    def __init__(self, expiry_seconds: float) -> None:
        self.expiry_seconds = expiry_seconds
        self._records: dict[str, SessionRecord] = {}
        self._lock = threading.Lock()

    def _sweep(self, now: float) -> None:
        stale = [
            sid
            for sid, rec in self._records.items()
            if now - rec.last_used > self.expiry_seconds
        ]
        for sid in stale:
            del self._records[sid]

    def put(self, story_id: str, session: Session) -> str:
        now = time.monotonic()
        with self._lock:
            self._sweep(now)
            session_id = secrets.token_urlsafe(16)
            self._records[session_id] = SessionRecord(story_id, session, now)
            return session_id

    def get(self, session_id: str) -> SessionRecord | None:
        now = time.monotonic()
        with self._lock:
            self._sweep(now)
            record = self._records.get(session_id)
            if record is not None:
                record.last_used = now
            return record

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)


def _json_response(payload: Any, status: int = 200) -> Response:
    body = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return Response(content=body, status_code=status, media_type="application/json")


def _error(status: int, code: str, message: str, **extra: Any) -> Response:
    return _json_response({"error": {"code": code, "message": message}, **extra}, status)


def create_app(
    stories: dict[str, StoryGraph],
    ui_dir: Path | None = None,
    expiry_seconds: float = DEFAULT_EXPIRY_SECONDS,
) -> FastAPI:
    app = FastAPI(title="fuselage", docs_url=None, redoc_url=None, openapi_url=None)
    store = SessionStore(expiry_seconds)
    app.state.stories = dict(stories)
    app.state.store = store

    def _story_or_none(story_id: str) -> StoryGraph | None:
        return app.state.stories.get(story_id)

    @app.get("/api/stories")
    def list_stories() -> Response:
        payload = [
            {
                "id": story_id,
                "title": graph.title,
                "endings_count": len(graph.ending_ids()),
            }
            for story_id, graph in sorted(app.state.stories.items())
        ]
        return _json_response(payload)

    @app.post("/api/stories/{story_id}/sessions")
    async def create_session(story_id: str, request: Request) -> Response:
        body = await request.body()
        graph = _story_or_none(story_id)
        if graph is None:
            return _error(404, "unknown-story", f"no story {story_id!r}")
        if body.strip():
            try:
                doc = json.loads(body)
            except ValueError:
                return _error(400, "malformed-body", "body must be JSON")
            if not isinstance(doc, dict):
                return _error(400, "malformed-body", "body must be a JSON object")
        else:
            doc = {}
        seed = doc.get("seed")
        if seed is None:
            seed = secrets.randbits(64)
        elif isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < MAX_SEED:
            return _error(400, "bad-seed", "seed must be an integer in [0, 2^64)")
        session = new_session(graph, seed=seed)
        session_id = store.put(story_id, session)
        return _json_response(
            {"session_id": session_id, "view": view(session).to_json()}, status=201
        )

    @app.post("/api/stories/{story_id}/sessions:restore")
    async def restore_session(story_id: str, request: Request) -> Response:
        body = await request.body()
        graph = _story_or_none(story_id)
        if graph is None:
            return _error(404, "unknown-story", f"no story {story_id!r}")
        try:
            session = restore(graph, body)
        except UnsupportedVersionError as exc:
            return _error(400, "unsupported-version", str(exc))
        except HashMismatchError as exc:
            return _error(400, "hash-mismatch", str(exc))
        except MalformedSaveError as exc:
            return _error(400, "malformed-save", str(exc))
        session_id = store.put(story_id, session)
        return _json_response(
            {"session_id": session_id, "view": view(session).to_json()}, status=201
        )

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str) -> Response:
        record = store.get(session_id)
        if record is None:
            return _error(404, "unknown-session", "no such session")
        with record.lock:
            return _json_response({"view": view(record.session).to_json()})

    @app.post("/api/sessions/{session_id}/events")
    async def post_event(session_id: str, request: Request) -> Response:
        body = await request.body()
        record = store.get(session_id)
        if record is None:
            return _error(404, "unknown-session", "no such session")
        try:
            doc = json.loads(body)
        except ValueError:
            return _error(400, "malformed-event", "body must be JSON")
        try:
            event = event_from_json(doc)
        except MalformedInputError as exc:
            return _error(400, "malformed-event", str(exc))
        with record.lock:
            try:
                session, notes = apply_event(record.session, event)
            except SessionFinishedError:
                return _error(
                    409,
                    "session-finished",
                    "the session has ended",
                    view=view(record.session).to_json(),
                )
            record.session = session
            return _json_response(
                {
                    "view": view(session).to_json(),
                    "notes": [{"code": n.code, "message": n.message} for n in notes],
                }
            )

    @app.get("/api/sessions/{session_id}/save")
    def get_save(session_id: str) -> Response:
        record = store.get(session_id)
        if record is None:
            return _error(404, "unknown-session", "no such session")
        with record.lock:
            data = save(record.session)
        return Response(content=data, media_type="application/json")

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
