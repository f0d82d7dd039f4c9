"""HTTP annotation service: session building, labeling, export, agreement.

Sessions live on disk as single JSON documents. Writes go through one lock
per session, so two annotators can label the same session concurrently
(their responses are keyed separately) while each document stays
consistent. The wire format never includes predictor labels.
"""

from __future__ import annotations

import io
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from slangtriage.annotation import (
    AnnotationSession,
    SamplingPolicy,
    build_session,
    load_session,
    save_session,
    write_gold_csv,
)
from slangtriage.corpus import ingest
from slangtriage.labels import PredictionSet


class SessionStore:
    """Directory of session documents with per-session write locks."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._cache: dict[str, AnnotationSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _path(self, session_id: str) -> Path:
        if not session_id.isalnum():
            raise KeyError(session_id)
        return self.root / f"{session_id}.json"

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.json"))

    def get(self, session_id: str) -> AnnotationSession:
        with self._registry_lock:
            cached = self._cache.get(session_id)
        if cached is not None:
            return cached
        path = self._path(session_id)
        if not path.exists():
            raise KeyError(session_id)
        session = load_session(str(path))
        with self._registry_lock:
            self._cache[session_id] = session
        return session

    def put(self, session: AnnotationSession) -> None:
        with self._lock_for(session.session_id):
            save_session(session, str(self._path(session.session_id)))
            with self._registry_lock:
                self._cache[session.session_id] = session

    def mutate(self, session_id: str, fn) -> object:
        """Apply fn(session) under the session's write lock, then persist."""
        lock = self._lock_for(session_id)
        with lock:
            session = self.get(session_id)
            outcome = fn(session)
            save_session(session, str(self._path(session_id)))
            return outcome


class PolicyBody(BaseModel):
    take_all_of: list[str] | None = None
    negative_fraction: float | None = None
    negative_count: int | None = None
    seed: int = 0


class CreateSessionBody(BaseModel):
    predictions_file: str
    corpus_file: str
    policy: PolicyBody


class LabelBody(BaseModel):
    post_id: str
    annotator: str
    label: str


def create_app(store: SessionStore | str | Path, static_dir: str | Path | None = None) -> FastAPI:
    if not isinstance(store, SessionStore):
        store = SessionStore(store)
    app = FastAPI(title="annotation service")

    def session_or_404(session_id: str) -> AnnotationSession:
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no session {session_id!r}")

    @app.get("/sessions")
    def list_sessions() -> list[dict]:
        return [store.get(sid).summary() for sid in store.list_ids()]

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        try:
            policy = SamplingPolicy.from_dict(body.policy.model_dump())
            with open(body.predictions_file, "r", encoding="utf-8") as fh:
                predictions = PredictionSet.from_jsonl(fh)
            with open(body.corpus_file, "rb") as fh:
                corpus = ingest(fh)
            session = build_session(predictions, corpus, policy)
        except (OSError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        store.put(session)
        return {"session_id": session.session_id, "n_items": len(session.items)}

    @app.get("/sessions/{session_id}/next")
    def next_item(session_id: str, annotator: str = Query(min_length=1)):
        session = session_or_404(session_id)
        item = session.next_pending(annotator)
        if item is None:
            return Response(status_code=204)
        labeled, total = session.progress(annotator)
        return {
            "post_id": item.post_id,
            "text": item.text,
            "position": session.items.index(item),
            "labeled": labeled,
            "total": total,
        }

    @app.post("/sessions/{session_id}/labels")
    def record_label(session_id: str, body: LabelBody) -> dict:
        session_or_404(session_id)

        def apply(session: AnnotationSession):
            session.record_label(body.post_id, body.annotator, body.label)
            return session.progress(body.annotator)

        try:
            labeled, total = store.mutate(session_id, apply)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"status": "ok", "labeled": labeled, "total": total}

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str, annotator: str = Query(min_length=1)) -> PlainTextResponse:
        session = session_or_404(session_id)
        try:
            rows = session.export_gold(annotator)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        buf = io.StringIO()
        write_gold_csv(rows, buf)
        return PlainTextResponse(buf.getvalue(), media_type="text/csv")

    @app.get("/sessions/{session_id}/agreement")
    def agreement_endpoint(session_id: str, a: str = Query(min_length=1), b: str = Query(min_length=1)) -> dict:
        session = session_or_404(session_id)
        try:
            report = session.agreement_between(a, b)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return report.as_dict()

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
