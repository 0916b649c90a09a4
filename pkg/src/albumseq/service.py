"""HTTP API for the sequencing workflow, plus static serving of the web UI.

Sessions are in-memory only and expire after an idle TTL: uploaded music
data never persists server-side.  The model checkpoint is loaded once and
shared read-only across requests; swapping it takes an exclusive gate.

Responses are built from explicitly ordered dicts and rendered with a fixed
JSON encoding, so identical requests (including seeds) produce byte-identical
bodies.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response
from fastapi.staticfiles import StaticFiles

from . import __version__
from .domain import Album
from .errors import CorpusFormatError, ValidationError
from .ingest import Corpus, parse_corpus_text
from .nn import OrderingModel, load_checkpoint
from .sequencer import (
    builtin_templates,
    extract_essence,
    fit_to_template,
    propose_direct,
    template_by_name,
)

DEFAULT_TTL_SECONDS = 3600.0
DEFAULT_MAX_UPLOAD = 32 * 1024 * 1024
MIN_INFERENCE_TRACKS = 2


def canonical_json(payload, status_code: int = 200) -> Response:
    body = json.dumps(payload, separators=(",", ":"), allow_nan=False)
    return Response(content=body, status_code=status_code, media_type="application/json")


def api_error(status_code: int, message: str, **extra) -> Response:
    payload = {"error": message}
    payload.update(extra)
    return canonical_json(payload, status_code=status_code)


def round_sig(x: float, digits: int = 6) -> float:
    """Round to ``digits`` significant digits (narrative values in responses)."""
    return float(f"{float(x):.{digits}g}")


@dataclass
class Session:
    corpus: Corpus
    created: float
    last_access: float
    essence_cache: dict[str, list[float]] = field(default_factory=dict)


class SessionStore:
    """Expiring in-memory map from unguessable tokens to uploaded corpora."""

    def __init__(self, ttl_seconds: float = DEFAULT_TTL_SECONDS, clock=time.monotonic):
        self.ttl = ttl_seconds
        self.clock = clock
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}

    def sweep(self) -> None:
        now = self.clock()
        with self._lock:
            dead = [k for k, s in self._sessions.items() if now - s.last_access > self.ttl]
            for k in dead:
                del self._sessions[k]

    def create(self, corpus: Corpus) -> str:
        self.sweep()
        token = secrets.token_urlsafe(32)  # 256 bits
        now = self.clock()
        with self._lock:
            self._sessions[token] = Session(corpus=corpus, created=now, last_access=now)
        return token

    def get(self, session_id: str) -> Session | None:
        self.sweep()
        with self._lock:
            s = self._sessions.get(session_id)
            if s is not None:
                s.last_access = self.clock()
            return s

    def __len__(self):
        with self._lock:
            return len(self._sessions)


class ModelGate:
    """Holds the loaded model; swapping takes the exclusive lock."""

    def __init__(self, model: OrderingModel | None = None):
        self._lock = threading.Lock()
        self._model = model

    def get(self) -> OrderingModel | None:
        with self._lock:
            return self._model

    def swap(self, model: OrderingModel | None) -> None:
        with self._lock:
            self._model = model


def _sniff_format(filename: str | None, text: str) -> str:
    if filename and filename.lower().endswith(".json"):
        return "json"
    stripped = text.lstrip()
    return "json" if stripped.startswith(("[", "{")) else "csv"


def create_app(
    model: OrderingModel | str | None = None,
    static_dir: str | None = None,
    ttl_seconds: float = DEFAULT_TTL_SECONDS,
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD,
    cors_origins=("*",),
    session_clock=time.monotonic,
) -> FastAPI:
    if isinstance(model, str):
        model = load_checkpoint(model)

    app = FastAPI(title="albumseq", version=__version__, docs_url=None, redoc_url=None)
    app.state.sessions = SessionStore(ttl_seconds=ttl_seconds, clock=session_clock)
    app.state.model_gate = ModelGate(model)
    app.state.max_upload_bytes = max_upload_bytes

    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.middleware("http")
    async def reject_oversized(request: Request, call_next):
        length = request.headers.get("content-length")
        if length is not None and length.isdigit() and int(length) > app.state.max_upload_bytes:
            return api_error(413, f"request exceeds upload limit of {app.state.max_upload_bytes} bytes")
        return await call_next(request)

    @app.get("/healthz")
    async def healthz():
        return canonical_json(
            {
                "status": "ok",
                "version": __version__,
                "model_loaded": app.state.model_gate.get() is not None,
            }
        )

    @app.get("/api/templates")
    async def templates():
        items = []
        for t in builtin_templates():
            pts = [[round_sig(x), round_sig(y)] for x, y in t.polyline(64)]
            items.append({"name": t.name, "points": pts})
        return canonical_json({"templates": items})

    @app.post("/api/albums")
    async def upload_albums(request: Request):
        content_type = request.headers.get("content-type", "")
        body = await request.body()
        if len(body) > app.state.max_upload_bytes:
            return api_error(413, f"request exceeds upload limit of {app.state.max_upload_bytes} bytes")
        filename = None
        if content_type.startswith("multipart/"):
            form = await request.form()
            upload = form.get("file")
            if upload is None:
                return api_error(400, "multipart upload must contain a 'file' field")
            filename = upload.filename
            raw = await upload.read()
            if len(raw) > app.state.max_upload_bytes:
                return api_error(413, "uploaded file exceeds the size limit")
            text = raw.decode("utf-8", errors="strict")
        else:
            try:
                text = body.decode("utf-8")
            except UnicodeDecodeError:
                return api_error(400, "body is not valid UTF-8")
        if not text.strip():
            return api_error(400, "empty upload")

        current = app.state.model_gate.get()
        max_len = current.cfg.max_len if current is not None else 20
        try:
            corpus = parse_corpus_text(
                text,
                fmt=_sniff_format(filename, text),
                m_min=1,
                m_max=10**9,
                provenance=filename or "upload",
            )
        except CorpusFormatError as e:
            return api_error(400, str(e), line=e.line)

        bad = [
            {"album_id": a.album_id, "n_tracks": a.n_tracks}
            for a in corpus.albums
            if not (MIN_INFERENCE_TRACKS <= a.n_tracks <= max_len)
        ]
        if bad:
            return api_error(
                400,
                f"albums must have between {MIN_INFERENCE_TRACKS} and {max_len} tracks",
                albums=bad,
            )
        if corpus.n_albums == 0:
            return api_error(400, "upload contains no albums")

        session_id = app.state.sessions.create(corpus)
        return canonical_json(
            {
                "session_id": session_id,
                "dimension": corpus.dimension,
                "albums": [
                    {
                        "album_id": a.album_id,
                        "n_tracks": a.n_tracks,
                        "tracks": [
                            {"track_id": t.track_id, "title": t.title} for t in a.tracks
                        ],
                    }
                    for a in corpus.albums
                ],
            }
        )

    def _order_payload(album: Album, proposal) -> dict:
        item = {
            "order": list(proposal.order.mapping),
            "track_ids": [album.tracks[j].track_id for j in proposal.order],
        }
        if proposal.template_name is not None:
            item["template"] = proposal.template_name
        if proposal.log_likelihood is not None:
            item["log_likelihood"] = proposal.log_likelihood
        if proposal.fit_cost is not None:
            item["fit_cost"] = round_sig(proposal.fit_cost)
        if proposal.narrative_values is not None:
            item["narrative_values"] = [round_sig(v) for v in proposal.narrative_values]
        return item

    @app.post("/api/sequence")
    async def sequence(request: Request):
        try:
            req = json.loads(await request.body())
        except json.JSONDecodeError:
            return api_error(400, "request body is not valid JSON")
        session_id = req.get("session_id", "")
        album_id = req.get("album_id", "")
        method = req.get("method", "")
        session = app.state.sessions.get(session_id)
        if session is None:
            return api_error(404, "unknown or expired session")
        try:
            album = session.corpus.album(album_id)
        except KeyError:
            return api_error(404, f"unknown album {album_id!r}")
        if method not in ("direct", "template"):
            return api_error(422, f"method must be 'direct' or 'template', got {method!r}")
        current = app.state.model_gate.get()
        if current is None:
            return api_error(409, "no model checkpoint loaded; start the server with --model")
        if current.cfg.feature_dim != session.corpus.dimension:
            return api_error(
                409,
                f"model expects dimension {current.cfg.feature_dim}, "
                f"corpus has {session.corpus.dimension}",
            )

        try:
            if method == "direct":
                n = int(req.get("n", 3))
                seed = int(req.get("seed", 0))
                temperature = float(req.get("temperature", 1.0))
                if n < 1:
                    return api_error(422, "n must be >= 1")
                proposals, shortfall = propose_direct(
                    current, album, n, temperature=temperature, rng=seed
                )
                payload = {
                    "session_id": session_id,
                    "album_id": album_id,
                    "method": "direct",
                    "seed": seed,
                    "orders": [_order_payload(album, p) for p in proposals],
                    "shortfall": shortfall,
                }
            else:
                name = req.get("template_name")
                if name is not None:
                    try:
                        chosen = [template_by_name(str(name))]
                    except ValidationError:
                        return api_error(
                            422,
                            f"unknown template {name!r}",
                            valid_templates=[t.name for t in builtin_templates()],
                        )
                else:
                    chosen = builtin_templates()
                essence = extract_essence(current, album)
                proposals = [fit_to_template(essence, t) for t in chosen]
                payload = {
                    "session_id": session_id,
                    "album_id": album_id,
                    "method": "template",
                    "orders": [_order_payload(album, p) for p in proposals],
                }
        except ValidationError as e:
            return api_error(422, str(e))
        return canonical_json(payload)

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    else:

        @app.get("/")
        async def index():
            return canonical_json(
                {"service": "albumseq", "version": __version__, "ui": "not bundled"}
            )

    return app
