"""HTTP service exposing the pipeline: artwork generation, retrieval, style
catalog, and feedback persistence.

Persistence is a single sqlite file for records plus flat PNGs on disk, so a
deployment is one directory. Generation is synchronous; at desk scale one
request takes seconds.
"""

from __future__ import annotations

import io
import json
import sqlite3
import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image

from .pipeline import GenerationRequest, Studio, ValidationError

_SCHEMA = """
CREATE TABLE IF NOT EXISTS artworks (
    id TEXT PRIMARY KEY,
    created_at TEXT NOT NULL,
    request_json TEXT NOT NULL,
    metadata_json TEXT NOT NULL,
    scores_json TEXT NOT NULL,
    image_path TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS feedback (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    artwork_id TEXT NOT NULL REFERENCES artworks(id),
    rating INTEGER NOT NULL,
    comment TEXT,
    created_at TEXT NOT NULL
);
"""


class ArtworkStore:
    """sqlite-backed record store; writes serialized by a process-wide lock."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.images_dir = self.root / "images"
        self.images_dir.mkdir(exist_ok=True)
        self._lock = threading.Lock()
        self._db_path = self.root / "artworks.sqlite"
        with self._connect() as con:
            con.executescript(_SCHEMA)

    def _connect(self) -> sqlite3.Connection:
        con = sqlite3.connect(self._db_path)
        con.row_factory = sqlite3.Row
        return con

    def create(self, request_dict: dict, metadata: dict, scores: list[float],
               png_bytes: bytes) -> dict:
        record_id = uuid.uuid4().hex
        created_at = datetime.now(timezone.utc).isoformat()
        image_path = self.images_dir / f"{record_id}.png"
        with self._lock:
            image_path.write_bytes(png_bytes)
            with self._connect() as con:
                con.execute(
                    "INSERT INTO artworks VALUES (?, ?, ?, ?, ?, ?)",
                    (record_id, created_at, json.dumps(request_dict),
                     json.dumps(metadata), json.dumps(scores), str(image_path)))
        return self.get(record_id)

    def get(self, record_id: str) -> dict | None:
        with self._connect() as con:
            row = con.execute(
                "SELECT * FROM artworks WHERE id = ?", (record_id,)).fetchone()
            if row is None:
                return None
            feedback = con.execute(
                "SELECT rating, comment, created_at FROM feedback "
                "WHERE artwork_id = ? ORDER BY seq", (record_id,)).fetchall()
        return {
            "id": row["id"],
            "created_at": row["created_at"],
            "request": json.loads(row["request_json"]),
            "metadata": json.loads(row["metadata_json"]),
            "scores": json.loads(row["scores_json"]),
            "feedback": [dict(f) for f in feedback],
        }

    def list(self, offset: int = 0, limit: int = 20) -> list[dict]:
        with self._connect() as con:
            rows = con.execute(
                "SELECT id FROM artworks ORDER BY created_at, id LIMIT ? OFFSET ?",
                (limit, offset)).fetchall()
        return [self.get(r["id"]) for r in rows]

    def image_path(self, record_id: str) -> Path | None:
        with self._connect() as con:
            row = con.execute(
                "SELECT image_path FROM artworks WHERE id = ?", (record_id,)).fetchone()
        return Path(row["image_path"]) if row else None

    def add_feedback(self, record_id: str, rating: int, comment: str) -> bool:
        with self._lock, self._connect() as con:
            exists = con.execute(
                "SELECT 1 FROM artworks WHERE id = ?", (record_id,)).fetchone()
            if not exists:
                return False
            con.execute(
                "INSERT INTO feedback (artwork_id, rating, comment, created_at) "
                "VALUES (?, ?, ?, ?)",
                (record_id, rating, comment, datetime.now(timezone.utc).isoformat()))
        return True


def _error(status: int, field: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"field": field, "message": message}})


def _parse_request(payload: dict, dish_image: np.ndarray | None) -> GenerationRequest:
    known = {"text", "palette_k", "whitespace_ratio", "style_id", "style_strength",
             "weights", "seed", "caption", "logo_id"}
    unknown = set(payload) - known
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown field")
    try:
        req = GenerationRequest(
            text=payload.get("text", ""),
            dish_image=dish_image,
            palette_k=int(payload.get("palette_k", 5)),
            whitespace_ratio=float(payload.get("whitespace_ratio", 0.3)),
            style_id=payload.get("style_id"),
            style_strength=float(payload.get("style_strength", 0.7)),
            weights=[float(w) for w in payload["weights"]]
            if payload.get("weights") is not None else None,
            seed=payload.get("seed"),
            caption=payload.get("caption"),
            logo_id=payload.get("logo_id"),
        )
    except ValidationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ValidationError("request", f"malformed field value: {exc}") from exc
    req.validate()
    return req


def create_app(studio: Studio | None, store: ArtworkStore,
               static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="calligart")

    @app.post("/api/artworks", status_code=201)
    async def create_artwork(request: Request):
        if studio is None:
            return _error(503, "service", "model not loaded")
        content_type = request.headers.get("content-type", "")
        dish_image = None
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            payload = json.loads(form.get("request", "{}"))
            upload = form.get("dish_image")
            if upload is not None:
                blob = await upload.read()
                if len(blob) > studio.config.max_upload_bytes:
                    return _error(413, "dish_image", "upload exceeds size limit")
                try:
                    with Image.open(io.BytesIO(blob)) as im:
                        dish_image = np.asarray(im.convert("RGB"))
                except Exception:
                    return _error(422, "dish_image", "not a decodable image")
        else:
            body = await request.body()
            if len(body) > studio.config.max_upload_bytes:
                return _error(413, "body", "request exceeds size limit")
            try:
                payload = json.loads(body or b"{}")
            except json.JSONDecodeError:
                return _error(422, "body", "invalid JSON")

        try:
            req = _parse_request(payload, dish_image)
            if req.style_id and req.style_id not in {
                    s.style_id for s in studio.styles.list()}:
                return _error(422, "style_id", f"unknown style {req.style_id!r}")
            result = studio.run(req)
        except ValidationError as exc:
            return _error(422, exc.field, exc.message)

        buf = io.BytesIO()
        Image.fromarray(result.composition.rendered).save(buf, format="PNG")
        record = store.create(
            request_dict={**req.to_dict(), "seed": result.seed},
            metadata=result.composition.metadata,
            scores=result.scores,
            png_bytes=buf.getvalue(),
        )
        return JSONResponse(status_code=201, content=record)

    @app.get("/api/artworks")
    def list_artworks(offset: int = 0, limit: int = 20):
        return {"artworks": store.list(offset=offset, limit=limit)}

    @app.get("/api/artworks/{artwork_id}")
    def get_artwork(artwork_id: str):
        record = store.get(artwork_id)
        if record is None:
            return _error(404, "id", f"unknown artwork {artwork_id}")
        return record

    @app.get("/api/artworks/{artwork_id}/image")
    def get_artwork_image(artwork_id: str):
        path = store.image_path(artwork_id)
        if path is None or not path.exists():
            return _error(404, "id", f"unknown artwork {artwork_id}")
        return Response(content=path.read_bytes(), media_type="image/png")

    @app.post("/api/artworks/{artwork_id}/feedback", status_code=204)
    async def add_feedback(artwork_id: str, request: Request):
        try:
            payload = json.loads(await request.body() or b"{}")
        except json.JSONDecodeError:
            return _error(422, "body", "invalid JSON")
        rating = payload.get("rating")
        if not isinstance(rating, int) or not 1 <= rating <= 5:
            return _error(422, "rating", "must be an integer in 1..5")
        comment = payload.get("comment", "")
        if not isinstance(comment, str):
            return _error(422, "comment", "must be a string")
        if not store.add_feedback(artwork_id, rating, comment):
            return _error(404, "id", f"unknown artwork {artwork_id}")
        return Response(status_code=204)

    @app.get("/api/styles")
    def list_styles():
        styles = studio.styles.list() if studio is not None else []
        return {"styles": [
            {"style_id": s.style_id, "display_name": s.display_name,
             "preview_url": f"/api/styles/{s.style_id}/preview"} for s in styles]}

    @app.get("/api/styles/{style_id}/preview")
    def style_preview(style_id: str):
        if studio is None:
            return _error(503, "service", "model not loaded")
        try:
            style = studio.styles.get(style_id)
        except Exception:
            return _error(404, "style_id", f"unknown style {style_id}")
        buf = io.BytesIO()
        Image.fromarray(style.reference_image).save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
