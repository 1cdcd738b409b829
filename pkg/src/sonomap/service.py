"""HTTP rating service for subjective listening sessions.

Serves (frame, audio) pairs to raters in seeded-shuffled order, enforces
strictly sequential rating, and persists every acknowledged judgment
before replying. Persistence is two append-only files:

  * the ratings CSV (the evaluation harness format), and
  * a session journal (JSONL) from which sessions and cursors are
    replayed after a restart.

The service layer (RatingService) is plain Python; create_app wraps it in
a FastAPI application implementing:

  POST /sessions                    create a session (pairs or pair_set)
  GET  /sessions/{id}/next          current item or done marker
  POST /sessions/{id}/ratings       submit MOS for the current item
  GET  /ratings/export?rater=...    ratings CSV, optionally filtered
  GET  /media/{path}                static assets under the media root

Errors come back as {"code": ..., "message": ...} with a matching HTTP
status.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from random import Random
from typing import Mapping, Sequence

from pydantic import BaseModel

from .core import Modality
from .errors import (
    EmptyPairList,
    InvalidMos,
    OutOfOrder,
    SonomapError,
    UnknownAsset,
    UnknownSession,
)
from .evaluate import RATINGS_FIELDS, RatingRecord, format_rating_row
from .store import AssetRecord, read_manifest


@dataclass(frozen=True)
class SessionItem:
    frame_id: str
    audio_id: str
    frame_uri: str
    audio_uri: str
    reference_audio_uri: str


@dataclass
class Session:
    session_id: str
    rater_id: str
    items: tuple[SessionItem, ...]
    cursor: int
    created: datetime


def _media_url(uri: str) -> str:
    if "://" in uri or uri.startswith("/"):
        return uri
    return f"/media/{uri}"


class RatingService:
    """Session bookkeeping and durable rating storage."""

    def __init__(
        self,
        assets: Sequence[AssetRecord],
        ratings_path,
        journal_path,
        pair_sets: Mapping[str, Sequence[tuple[str, str]]] | None = None,
        reference_audio: Mapping[str, str] | None = None,
    ):
        self._assets = {rec.id: rec for rec in assets}
        self._ratings_path = Path(ratings_path)
        self._journal_path = Path(journal_path)
        self._pair_sets = {name: [tuple(p) for p in pairs] for name, pairs in (pair_sets or {}).items()}
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._reference_audio = dict(reference_audio or {})
        self._replay_journal()
        self._ratings_fh = self._open_ratings()
        self._journal_fh = open(self._journal_path, "a", encoding="utf-8")

    # -- persistence ----------------------------------------------------

    def _open_ratings(self):
        fresh = not self._ratings_path.exists() or self._ratings_path.stat().st_size == 0
        fh = open(self._ratings_path, "a", encoding="utf-8", newline="")
        if fresh:
            fh.write(",".join(RATINGS_FIELDS) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        return fh

    def _replay_journal(self):
        if not self._journal_path.exists():
            return
        with open(self._journal_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                if event["type"] == "session":
                    items = tuple(SessionItem(**item) for item in event["items"])
                    self._sessions[event["session_id"]] = Session(
                        session_id=event["session_id"],
                        rater_id=event["rater_id"],
                        items=items,
                        cursor=0,
                        created=datetime.fromisoformat(event["created"]),
                    )
                elif event["type"] == "rating":
                    session = self._sessions.get(event["session_id"])
                    if session is not None and session.cursor < len(session.items):
                        session.cursor += 1

    def _append_journal(self, event: dict) -> None:
        self._journal_fh.write(json.dumps(event, sort_keys=True) + "\n")
        self._journal_fh.flush()
        os.fsync(self._journal_fh.fileno())

    def _append_rating(self, record: RatingRecord) -> None:
        self._ratings_fh.write(format_rating_row(record))
        self._ratings_fh.flush()
        os.fsync(self._ratings_fh.fileno())

    def close(self) -> None:
        self._ratings_fh.close()
        self._journal_fh.close()

    # -- asset helpers ----------------------------------------------------

    def _asset(self, asset_id: str) -> AssetRecord:
        try:
            return self._assets[asset_id]
        except KeyError:
            raise UnknownAsset(f"asset {asset_id!r} not in manifest") from None

    def _reference_audio_uri(self, scene: str) -> str:
        ref_id = self._reference_audio.get(scene)
        if ref_id is not None:
            return self._asset(ref_id).uri
        for rec in self._assets.values():
            if rec.scene == scene and rec.modality is Modality.AUDIO:
                return rec.uri
        return ""

    # -- operations -------------------------------------------------------

    def resolve_pair_set(self, name: str) -> list[tuple[str, str]]:
        try:
            return list(self._pair_sets[name])
        except KeyError:
            raise UnknownAsset(f"unknown pair set {name!r}") from None

    def create_session(self, rater_id: str, pair_list, seed: int = 0) -> Session:
        """Create a session with a seeded shuffle of the given pairs."""
        if not rater_id:
            raise EmptyPairList("rater_id must be non-empty")
        pairs = [tuple(p) for p in pair_list]
        if not pairs:
            raise EmptyPairList("session needs at least one (frame, audio) pair")
        items = []
        for frame_id, audio_id in pairs:
            frame = self._asset(frame_id)
            audio = self._asset(audio_id)
            items.append(
                SessionItem(
                    frame_id=frame_id,
                    audio_id=audio_id,
                    frame_uri=frame.uri,
                    audio_uri=audio.uri,
                    reference_audio_uri=self._reference_audio_uri(frame.scene),
                )
            )
        Random(seed).shuffle(items)
        session = Session(
            session_id=uuid.uuid4().hex,
            rater_id=rater_id,
            items=tuple(items),
            cursor=0,
            created=datetime.now(timezone.utc),
        )
        with self._lock:
            self._sessions[session.session_id] = session
            self._append_journal(
                {
                    "type": "session",
                    "session_id": session.session_id,
                    "rater_id": session.rater_id,
                    "created": session.created.isoformat(),
                    "items": [item.__dict__ for item in session.items],
                }
            )
        return session

    def _session(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSession(f"unknown session {session_id!r}") from None

    def next_item(self, session_id: str) -> SessionItem | None:
        """Item at the cursor, or None once the session is complete."""
        with self._lock:
            session = self._session(session_id)
            if session.cursor >= len(session.items):
                return None
            return session.items[session.cursor]

    def progress(self, session_id: str) -> tuple[int, int]:
        with self._lock:
            session = self._session(session_id)
            return session.cursor, len(session.items)

    def submit_rating(self, session_id: str, frame_id: str, audio_id: str, mos: int) -> int:
        """Record a MOS for the current item; returns ratings so far.

        The rating is durable (journal + ratings file fsynced) before
        this returns. Submitting anything but the current item, or the
        same item twice, raises OutOfOrder.
        """
        if not isinstance(mos, int) or isinstance(mos, bool) or not 1 <= mos <= 5:
            raise InvalidMos(f"mos must be an integer in 1..5, got {mos!r}")
        with self._lock:
            session = self._session(session_id)
            if session.cursor >= len(session.items):
                raise OutOfOrder("session already complete")
            current = session.items[session.cursor]
            if (frame_id, audio_id) != (current.frame_id, current.audio_id):
                raise OutOfOrder(
                    f"current item is ({current.frame_id!r}, {current.audio_id!r}), "
                    f"got ({frame_id!r}, {audio_id!r})"
                )
            record = RatingRecord(
                rater_id=session.rater_id,
                frame_id=frame_id,
                audio_id=audio_id,
                mos=mos,
                timestamp=datetime.now(timezone.utc),
            )
            self._append_rating(record)
            self._append_journal(
                {
                    "type": "rating",
                    "session_id": session_id,
                    "frame_id": frame_id,
                    "audio_id": audio_id,
                    "mos": mos,
                }
            )
            session.cursor += 1
            return session.cursor

    def export_ratings(self, rater: str | None = None) -> str:
        """Ratings CSV text, append-order stable, optionally per rater."""
        with self._lock:
            if not self._ratings_path.exists():
                return ",".join(RATINGS_FIELDS) + "\n"
            lines = self._ratings_path.read_text(encoding="utf-8").splitlines(keepends=True)
        if not lines:
            return ",".join(RATINGS_FIELDS) + "\n"
        if rater is None:
            return "".join(lines)
        kept = [lines[0]]
        prefix = rater + ","
        kept.extend(line for line in lines[1:] if line.startswith(prefix))
        return "".join(kept)


# -- HTTP layer ---------------------------------------------------------------

_ERROR_STATUS = {
    UnknownSession: 404,
    UnknownAsset: 404,
    OutOfOrder: 409,
    InvalidMos: 422,
    EmptyPairList: 422,
}


class CreateSessionBody(BaseModel):
    rater_id: str
    pairs: list[tuple[str, str]] | None = None
    pair_set: str | None = None
    seed: int = 0


class RatingBody(BaseModel):
    frame_id: str
    audio_id: str
    mos: int


def create_app(
    manifest_path,
    ratings_path,
    journal_path,
    media_root=None,
    pair_sets: Mapping[str, Sequence[tuple[str, str]]] | None = None,
    reference_audio: Mapping[str, str] | None = None,
    ui_dist=None,
):
    """Build the FastAPI application around a RatingService."""
    from fastapi import FastAPI, Request
    from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse

    assets = read_manifest(manifest_path)
    service = RatingService(assets, ratings_path, journal_path, pair_sets, reference_audio)
    media_base = Path(media_root).resolve() if media_root else None

    app = FastAPI(title="sonomap rating service")
    app.state.service = service

    @app.exception_handler(SonomapError)
    async def _sonomap_error(request: Request, exc: SonomapError):
        status = _ERROR_STATUS.get(type(exc), 400)
        return JSONResponse(
            status_code=status,
            content={"code": type(exc).__name__, "message": str(exc)},
        )

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        if body.pairs is not None:
            pairs = body.pairs
        elif body.pair_set is not None:
            pairs = service.resolve_pair_set(body.pair_set)
        else:
            raise EmptyPairList("provide pairs or pair_set")
        session = service.create_session(body.rater_id, pairs, body.seed)
        return {"session_id": session.session_id, "total": len(session.items)}

    @app.get("/sessions/{session_id}/next")
    def next_item(session_id: str):
        item = service.next_item(session_id)
        done, total = service.progress(session_id)
        if item is None:
            return {"done": True, "total": total, "index": done}
        return {
            "done": False,
            "index": done,
            "total": total,
            "item": {
                "frame_id": item.frame_id,
                "audio_id": item.audio_id,
                "frame_url": _media_url(item.frame_uri),
                "audio_url": _media_url(item.audio_uri),
                "reference_audio_url": _media_url(item.reference_audio_uri)
                if item.reference_audio_uri
                else "",
            },
        }

    @app.post("/sessions/{session_id}/ratings", status_code=201)
    def submit_rating(session_id: str, body: RatingBody):
        recorded = service.submit_rating(session_id, body.frame_id, body.audio_id, body.mos)
        return {"status": "ok", "recorded": recorded}

    @app.get("/ratings/export")
    def export_ratings(rater: str | None = None):
        return PlainTextResponse(service.export_ratings(rater), media_type="text/csv")

    @app.get("/media/{rel_path:path}")
    def media(rel_path: str):
        if media_base is None:
            return JSONResponse(
                status_code=404, content={"code": "NoMediaRoot", "message": "no media root configured"}
            )
        target = (media_base / rel_path).resolve()
        if media_base not in target.parents and target != media_base:
            return JSONResponse(
                status_code=403, content={"code": "Forbidden", "message": "path escapes media root"}
            )
        if not target.is_file():
            return JSONResponse(
                status_code=404, content={"code": "NotFound", "message": f"no such file {rel_path!r}"}
            )
        return FileResponse(target)

    if ui_dist:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dist), html=True), name="ui")

    return app
