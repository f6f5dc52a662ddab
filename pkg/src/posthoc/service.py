"""Local JSON-over-HTTP service for interactive bound exploration.

Sessions hold an immutable p-value vector (optionally the raw observation
matrix it came from) plus an append-only map of calibrations. Bound queries
are pure functions of (session, calibration, set), so the explorer UI can
hammer them while the user toggles selections.

Calibrations whose cost m*B exceeds the synchronous limit run on a worker
thread: the POST returns 202 with a polling URL instead of blocking.

This is a local analysis tool: in-memory store, 24 h session TTL, no auth.
An optional JSON snapshot of the store can be written on shutdown and read
back on the next launch.
"""
from __future__ import annotations

import json
import os
import threading
import time
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .bounds import bound_detail, sbar_topk_curve
from .calibration import Calibration
from .cli import calibrate_core
from .models import pvalues as _pvalues, test_statistics as _test_statistics

SYNC_LIMIT = 10_000_000  # m * B at or below this runs in-request
TTL_SECONDS = 24 * 3600
MAX_M = 1_000_000
MAX_CELLS = 10_000_000  # data matrix entries

ENDPOINTS = [
    {"method": "GET", "path": "/",
     "summary": "this endpoint listing"},
    {"method": "POST", "path": "/sessions",
     "summary": "create a session from {pvalues: [...]} or "
                "{data: {matrix: [[...]], n}}"},
    {"method": "GET", "path": "/sessions/{sid}",
     "summary": "session p-values and calibration ids"},
    {"method": "POST", "path": "/sessions/{sid}/calibrations",
     "summary": "calibrate thresholds; 202 + polling URL when m*B is large"},
    {"method": "GET", "path": "/sessions/{sid}/calibrations/{cid}",
     "summary": "calibration status/result"},
    {"method": "POST", "path": "/sessions/{sid}/bound",
     "summary": "bounds for {calibration_id, set: [...]} or "
                "{calibration_id, top_k: N}"},
]


@dataclass
class SessionState:
    id: str
    pvalues: np.ndarray
    data: np.ndarray | None
    created_at: float
    calibrations: dict = field(default_factory=dict)  # cid -> Calibration
    pending: dict = field(default_factory=dict)       # cid -> "pending"|error
    counter: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)

    def next_cid(self) -> str:
        with self.lock:
            self.counter += 1
            return f"c{self.counter}"


class SessionStore:
    def __init__(self, ttl_seconds: float = TTL_SECONDS):
        self.ttl = ttl_seconds
        self._sessions: dict[str, SessionState] = {}
        self._lock = threading.Lock()

    def purge(self, now: float | None = None) -> None:
        now = time.time() if now is None else now
        with self._lock:
            dead = [sid for sid, s in self._sessions.items()
                    if now - s.created_at > self.ttl]
            for sid in dead:
                del self._sessions[sid]

    def add(self, session: SessionState) -> None:
        with self._lock:
            self._sessions[session.id] = session

    def get(self, sid: str) -> SessionState:
        self.purge()
        with self._lock:
            session = self._sessions.get(sid)
        if session is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown session {sid!r}")
        return session

    def snapshot(self) -> dict:
        with self._lock:
            sessions = list(self._sessions.values())
        out = {}
        for s in sessions:
            out[s.id] = {
                "pvalues": [float(v) for v in s.pvalues],
                "data": (None if s.data is None
                         else [[float(v) for v in row] for row in s.data]),
                "created_at": s.created_at,
                "counter": s.counter,
                "calibrations": {cid: cal.to_json()
                                 for cid, cal in s.calibrations.items()},
            }
        return {"sessions": out}

    def restore(self, obj: dict) -> None:
        for sid, rec in obj.get("sessions", {}).items():
            session = SessionState(
                id=sid,
                pvalues=np.asarray(rec["pvalues"], dtype=np.float64),
                data=(None if rec.get("data") is None
                      else np.asarray(rec["data"], dtype=np.float64)),
                created_at=float(rec["created_at"]),
                counter=int(rec.get("counter", 0)),
            )
            session.calibrations = {
                cid: Calibration.from_json(c)
                for cid, c in rec.get("calibrations", {}).items()}
            self.add(session)


def _bad(detail: str, code: int = 400):
    raise HTTPException(status_code=code, detail=detail)


def _parse_session_body(body) -> tuple:
    if not isinstance(body, dict):
        _bad("body must be a JSON object")
    has_p = "pvalues" in body
    has_d = "data" in body
    if has_p == has_d:
        _bad("provide exactly one of 'pvalues' or 'data'")
    if has_p:
        raw = body["pvalues"]
        if not isinstance(raw, list) or not raw:
            _bad("'pvalues' must be a non-empty list")
        if len(raw) > MAX_M:
            _bad(f"too many p-values (max {MAX_M})", 413)
        try:
            p = np.asarray(raw, dtype=np.float64)
        except (TypeError, ValueError):
            _bad("'pvalues' must be numbers")
        if p.ndim != 1 or not np.all(np.isfinite(p)) \
                or np.any(p < 0) or np.any(p > 1):
            _bad("p-values must be finite numbers in [0, 1]")
        return p, None
    spec = body["data"]
    if not isinstance(spec, dict) or "matrix" not in spec:
        _bad("'data' must be {matrix: [[...]], n?}")
    try:
        X = np.asarray(spec["matrix"], dtype=np.float64)
    except (TypeError, ValueError):
        _bad("'matrix' must be a rectangular array of numbers")
    if X.ndim != 2 or X.size == 0:
        _bad("'matrix' must be a non-empty 2-d array")
    if not np.all(np.isfinite(X)):
        _bad("'matrix' entries must be finite")
    if X.shape[0] > MAX_M or X.size > MAX_CELLS:
        _bad(f"matrix too large (max {MAX_M} rows, {MAX_CELLS} cells)", 413)
    if "n" in spec and int(spec["n"]) != X.shape[1]:
        _bad(f"'n'={spec['n']} does not match matrix columns {X.shape[1]}")
    return None, X


def _calibration_params(body) -> dict:
    if not isinstance(body, dict):
        _bad("body must be a JSON object")
    method = body.get("method")
    if method not in ("simes-fixed", "mc-known", "sign-flip"):
        _bad("'method' must be simes-fixed, mc-known or sign-flip")
    out = {"method": method}
    try:
        out["template"] = str(body.get("template", "linear"))
        k = body.get("K")
        out["K"] = None if k is None else int(k)
        out["alpha"] = float(body.get("alpha", 0.25))
        out["B"] = int(body.get("B", 1000))
        out["seed"] = int(body.get("seed", 0))
        out["sided"] = str(body.get("sided", "two"))
        out["cov"] = str(body.get("cov", "indep"))
        out["use_step_down"] = bool(body.get("step_down", False))
    except (TypeError, ValueError):
        _bad("malformed calibration parameters")
    if out["B"] < 1:
        _bad("B must be >= 1")
    if out["template"] not in ("linear", "balanced"):
        _bad(f"unknown template {out['template']!r}")
    if not 0.0 < out["alpha"] < 1.0:
        _bad("alpha must be in (0, 1)")
    if out["sided"] not in ("one", "two"):
        _bad("sided must be 'one' or 'two'")
    return out


def create_app(sync_limit: int = SYNC_LIMIT, ttl_seconds: float = TTL_SECONDS,
               snapshot_path: str | None = None,
               ui_dir: str | None = None) -> FastAPI:
    """Build the application; state is local to the instance."""
    store = SessionStore(ttl_seconds=ttl_seconds)

    @asynccontextmanager
    async def lifespan(_app):
        yield
        if snapshot_path:
            with open(snapshot_path, "w") as fh:
                json.dump(store.snapshot(), fh)

    app = FastAPI(title="posthoc service", docs_url=None, redoc_url=None,
                  openapi_url=None, lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware,
        allow_origin_regex=r"https?://(localhost|127\.0\.0\.1)(:\d+)?",
        allow_methods=["*"], allow_headers=["*"])
    app.state.store = store

    if snapshot_path and os.path.exists(snapshot_path):
        with open(snapshot_path) as fh:
            store.restore(json.load(fh))

    @app.get("/")
    def index():
        return {"service": "posthoc", "endpoints": ENDPOINTS}

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        store.purge()
        try:
            body = await request.json()
        except Exception:
            _bad("body must be valid JSON")
        p, X = _parse_session_body(body)
        if p is None:
            p = _pvalues(_test_statistics(X),
                         sided=str(body.get("sided", "two")))
        session = SessionState(id=uuid.uuid4().hex[:12], pvalues=p, data=X,
                               created_at=time.time())
        store.add(session)
        return {"session_id": session.id, "m": int(p.size),
                "n": (0 if X is None else int(X.shape[1]))}

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        session = store.get(sid)
        return {
            "session_id": session.id,
            "m": int(session.pvalues.size),
            "n": (0 if session.data is None else int(session.data.shape[1])),
            "has_data": session.data is not None,
            "pvalues": [float(v) for v in session.pvalues],
            "calibrations": sorted(session.calibrations),
            "pending": dict(session.pending),
        }

    def _run_calibration(session: SessionState, cid: str, params: dict):
        kwargs = dict(params)
        method = kwargs.pop("method")
        if method == "sign-flip":
            inputs = {"X": session.data}
        else:
            inputs = {"p": session.pvalues}
        try:
            cal = calibrate_core(method, **inputs, **kwargs)
        except Exception as exc:  # surfaced via the polling endpoint
            with session.lock:
                session.pending[cid] = f"error: {exc}"
            return
        with session.lock:
            session.calibrations[cid] = cal
            session.pending.pop(cid, None)

    @app.post("/sessions/{sid}/calibrations")
    async def create_calibration(sid: str, request: Request):
        session = store.get(sid)
        try:
            body = await request.json()
        except Exception:
            _bad("body must be valid JSON")
        params = _calibration_params(body)
        if params["method"] == "sign-flip" and session.data is None:
            _bad("method sign-flip requires the session's raw data matrix, "
                 "but this session has only p-values", 422)
        cid = session.next_cid()
        cost = int(session.pvalues.size) * params["B"]
        if cost <= sync_limit:
            _run_calibration(session, cid, params)
            err = session.pending.pop(cid, None)
            if err is not None:
                _bad(err.removeprefix("error: "))
            return {"calibration_id": cid, "status": "done",
                    "calibration": session.calibrations[cid].to_json()}
        with session.lock:
            session.pending[cid] = "pending"
        worker = threading.Thread(target=_run_calibration,
                                  args=(session, cid, params), daemon=True)
        worker.start()
        return JSONResponse(
            status_code=202,
            content={"calibration_id": cid, "status": "pending",
                     "poll": f"/sessions/{sid}/calibrations/{cid}"})

    @app.get("/sessions/{sid}/calibrations/{cid}")
    def get_calibration(sid: str, cid: str):
        session = store.get(sid)
        with session.lock:
            cal = session.calibrations.get(cid)
            state = session.pending.get(cid)
        if cal is not None:
            return {"calibration_id": cid, "status": "done",
                    "calibration": cal.to_json()}
        if state == "pending":
            return {"calibration_id": cid, "status": "pending"}
        if state is not None:
            return {"calibration_id": cid, "status": "error",
                    "detail": state.removeprefix("error: ")}
        raise HTTPException(status_code=404,
                            detail=f"unknown calibration {cid!r}")

    def _resolve_calibration(session: SessionState, body: dict) -> Calibration:
        cid = body.get("calibration_id")
        if cid is None:
            _bad("'calibration_id' is required")
        with session.lock:
            cal = session.calibrations.get(cid)
            state = session.pending.get(cid)
        if cal is None:
            if state == "pending":
                _bad(f"calibration {cid!r} is still running", 409)
            raise HTTPException(status_code=404,
                                detail=f"unknown calibration {cid!r}")
        return cal

    @app.post("/sessions/{sid}/bound")
    async def bound(sid: str, request: Request):
        session = store.get(sid)
        try:
            body = await request.json()
        except Exception:
            _bad("body must be valid JSON")
        if not isinstance(body, dict):
            _bad("body must be a JSON object")
        cal = _resolve_calibration(session, body)
        fam = cal.family()
        p = session.pvalues
        m = int(p.size)
        has_set = "set" in body
        has_topk = "top_k" in body
        if has_set == has_topk:
            _bad("provide exactly one of 'set' or 'top_k'")
        if has_topk:
            try:
                n_max = int(body["top_k"])
            except (TypeError, ValueError):
                _bad("'top_k' must be an integer")
            if not 1 <= n_max <= m:
                _bad(f"'top_k' must be in 1..{m}")
            curve = sbar_topk_curve(fam, p, n_max)
            order = np.argsort(p, kind="stable")[:n_max]
            detail = bound_detail(order, fam, p)
            return {"vbar": detail.vbar, "sbar": detail.sbar,
                    "k_argmin": detail.k_argmin,
                    "curve": [int(s) for s in curve]}
        raw = body["set"]
        if not isinstance(raw, list):
            _bad("'set' must be a list of 0-based indices")
        try:
            R = tuple(sorted({int(i) for i in raw}))
        except (TypeError, ValueError):
            _bad("'set' must contain integers")
        if R and (R[0] < 0 or R[-1] >= m):
            _bad(f"'set' indices must be in 0..{m - 1}")
        detail = bound_detail(R, fam, p)
        return {"vbar": detail.vbar, "sbar": detail.sbar,
                "k_argmin": detail.k_argmin}

    if ui_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
