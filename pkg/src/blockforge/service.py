"""HTTP service tying the pipeline together and serving the editor UI.

All JSON bodies are validated by the same validators the library uses;
failures return 400 with a path-addressed error list.  Session state is
in-memory with TTL eviction, one lock per session so concurrent edits of
the same session serialize while different sessions proceed in parallel.
"""
from __future__ import annotations

import base64
import hashlib
import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.responses import HTMLResponse, JSONResponse, Response

from .errors import ParseError
from .layout import (
    BoxLayout,
    DEFAULT_TAXONOMY,
    layout_from_record,
    layout_to_json,
)
from .rules import (
    expand_to_rules,
    get_style_oracle,
    infer_attachments,
    parse_rule_layout,
    resolve_styles,
    rule_layout_to_json,
    validate_rule_layout,
)

import json

SESSION_TTL_SECONDS = 3600.0

_PLACEHOLDER_PAGE = """<!doctype html>
<html><head><title>blockforge</title></head>
<body><h1>blockforge service is running</h1>
<p>No UI bundle configured. Build the frontend and pass --ui-dir, or use
the JSON API under /api/.</p></body></html>
"""


@dataclass
class Session:
    layout: BoxLayout
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_access: float = field(default_factory=time.monotonic)
    last_digest: str = ""


class SessionStore:
    def __init__(self, ttl: float = SESSION_TTL_SECONDS):
        self.ttl = ttl
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}

    def _evict(self) -> None:
        now = time.monotonic()
        dead = [k for k, s in self._sessions.items()
                if now - s.last_access > self.ttl]
        for k in dead:
            del self._sessions[k]

    def create(self) -> str:
        with self._lock:
            self._evict()
            session_id = uuid.uuid4().hex[:16]
            self._sessions[session_id] = Session(layout=BoxLayout(()))
            return session_id

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            self._evict()
            session = self._sessions.get(session_id)
            if session is not None:
                session.last_access = time.monotonic()
            return session


def _error_response(errors, status: int = 400) -> JSONResponse:
    if isinstance(errors, str):
        errors = [errors]
    return JSONResponse({"errors": list(errors)}, status_code=status)


async def _read_json(request: Request):
    try:
        body = await request.json()
    except Exception:
        return None, _error_response("(root): request body is not valid JSON")
    if not isinstance(body, dict):
        return None, _error_response("(root): expected JSON object")
    return body, None


def _parse_layout_record(record):
    if not isinstance(record, dict):
        return None, ["layout: expected object"]
    try:
        return layout_from_record(record, 1, DEFAULT_TAXONOMY), None
    except ParseError as exc:
        return None, [str(exc).replace("line 1: ", "layout: ")]


def _expand(layout: BoxLayout, prompt: str, oracle):
    rules = infer_attachments(expand_to_rules(layout))
    rules, _warnings = resolve_styles(rules, prompt, oracle)
    return rules


def _build_payload(rules):
    from .pcg.assemble import assemble
    from .pcg.objio import export_obj, scene_manifest

    scene = assemble(rules)
    obj = export_obj(scene)
    return obj, {
        "obj": base64.b64encode(obj).decode("ascii"),
        "manifest": scene_manifest(scene),
        "rule": json.loads(rule_layout_to_json(rules)),
    }


def create_app(model_path: str | None = None, ui_dir: str | None = None,
               oracle_url: str | None = None) -> FastAPI:
    app = FastAPI(title="blockforge", docs_url=None, redoc_url=None)
    sessions = SessionStore()
    oracle = get_style_oracle(oracle_url)

    model = None
    model_cfg = None
    sched = None
    model_lock = threading.Lock()
    if model_path:
        from .diffusion.checkpoint import load_model
        from .diffusion.schedule import make_linear_schedule

        model, model_cfg = load_model(model_path)
        sched = make_linear_schedule(model_cfg.T)

    @app.get("/api/categories")
    async def categories():
        return {"categories": list(DEFAULT_TAXONOMY.names),
                "empty_index": DEFAULT_TAXONOMY.empty_index}

    @app.post("/api/sample")
    async def api_sample(request: Request):
        if model is None:
            return _error_response("no model loaded (service started "
                                   "without --model)", status=503)
        body, err = await _read_json(request)
        if err:
            return err
        errors = []
        prompt = body.get("prompt", "")
        count = body.get("count", 1)
        seed = body.get("seed", 0)
        if not isinstance(prompt, str):
            errors.append("prompt: expected string")
        if not isinstance(count, int) or isinstance(count, bool) \
                or not 1 <= count <= 64:
            errors.append("count: expected integer in [1, 64]")
        if not isinstance(seed, int) or isinstance(seed, bool):
            errors.append("seed: expected integer")
        steps = body.get("steps", 100)
        if not isinstance(steps, int) or isinstance(steps, bool) or steps < 1:
            errors.append("steps: expected positive integer")
        if errors:
            return _error_response(errors)
        import torch

        from .diffusion.sampling import sample

        with model_lock:
            layouts = sample(model, sched, prompt, count,
                             torch.Generator().manual_seed(seed),
                             max_boxes=model_cfg.N, steps=steps)
        return {"layouts": [json.loads(layout_to_json(l)) for l in layouts]}

    @app.post("/api/expand")
    async def api_expand(request: Request):
        body, err = await _read_json(request)
        if err:
            return err
        layout, errors = _parse_layout_record(body.get("layout"))
        if errors:
            return _error_response(errors)
        prompt = body.get("prompt", layout.prompt)
        if not isinstance(prompt, str):
            return _error_response("prompt: expected string")
        rules = _expand(layout, prompt, oracle)
        return {"rule": json.loads(rule_layout_to_json(rules))}

    @app.post("/api/build")
    async def api_build(request: Request):
        body, err = await _read_json(request)
        if err:
            return err
        rules, errors = validate_rule_layout(body.get("rule"))
        if rules is None:
            return _error_response(errors)
        _obj, payload = _build_payload(rules)
        return payload

    @app.post("/api/session")
    async def create_session():
        return {"id": sessions.create()}

    @app.get("/api/session/{session_id}/layout")
    async def get_layout(session_id: str):
        session = sessions.get(session_id)
        if session is None:
            return _error_response(f"unknown session {session_id!r}", 404)
        with session.lock:
            return JSONResponse(json.loads(layout_to_json(session.layout)))

    @app.put("/api/session/{session_id}/layout")
    async def put_layout(session_id: str, request: Request):
        session = sessions.get(session_id)
        if session is None:
            return _error_response(f"unknown session {session_id!r}", 404)
        body, err = await _read_json(request)
        if err:
            return err
        layout, errors = _parse_layout_record(body)
        if errors:
            return _error_response(errors)
        with session.lock:
            session.layout = layout
        return {"ok": True}

    @app.post("/api/session/{session_id}/build")
    async def build_session(session_id: str, request: Request):
        session = sessions.get(session_id)
        if session is None:
            return _error_response(f"unknown session {session_id!r}", 404)
        body = {}
        if (await request.body()):
            body, err = await _read_json(request)
            if err:
                return err
        with session.lock:
            layout = session.layout
            if not layout.boxes:
                return _error_response("session layout is empty")
            prompt = body.get("prompt", layout.prompt)
            rules = _expand(layout, prompt, oracle)
            obj, payload = _build_payload(rules)
            session.last_digest = hashlib.sha256(obj).hexdigest()
            payload["digest"] = session.last_digest
            return payload

    @app.get("/api/session/{session_id}/mesh.obj")
    async def session_mesh(session_id: str):
        session = sessions.get(session_id)
        if session is None:
            return _error_response(f"unknown session {session_id!r}", 404)
        with session.lock:
            if not session.layout.boxes:
                return _error_response("session layout is empty")
            rules = _expand(session.layout, session.layout.prompt, oracle)
            obj, _payload = _build_payload(rules)
        return Response(content=obj, media_type="text/plain")

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:
        @app.get("/", response_class=HTMLResponse)
        async def index():
            return _PLACEHOLDER_PAGE

    return app
