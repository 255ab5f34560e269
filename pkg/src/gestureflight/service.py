"""Ground-control HTTP service: live gesture sessions, missions, and replays.

Sessions run the closed loop as an asyncio task and fan telemetry out to
WebSocket subscribers. Mission runs execute on a fresh simulated world,
so their persisted logs are byte-identical to the library's.
"""

from __future__ import annotations

import asyncio
import re
import time
import uuid
from collections import deque
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, WebSocket, WebSocketDisconnect

from . import sim
from .config import PipelineConfig, from_dict
from .control import QUARTILES, map_gesture_to_command
from .gestures import read_pgm
from .sim import FlightLog, MissionSpec, run_mission, track_displacement, write_log

PROTOCOL_VERSION = 1
LOG_ID_RE = re.compile(r"^[A-Za-z0-9_-]+$")
MODES = ("realtime", "accelerated")


def _floats(v) -> list:
    return [float(x) for x in v]


def tick_frame(row: sim.LogRow, debug: bool) -> dict:
    """Stream frame for one control tick; true state only in debug mode."""
    frame = {
        "v": PROTOCOL_VERSION,
        "type": "tick",
        "tick": row.tick,
        "t": row.t,
        "command": row.command,
        "speed": row.speed,
        "confidence": row.confidence,
        "quartile": row.quartile,
        "cell": None if row.cell is None else list(row.cell),
        "segment": row.segment,
        "event": row.event,
        "airborne": row.airborne,
        "setpoint_p": _floats(row.setpoint_p),
        "setpoint_v": _floats(row.setpoint_v),
        "setpoint_yaw": row.setpoint_yaw,
        "est_p": _floats(row.est_p),
        "est_v": _floats(row.est_v),
        "est_yaw": row.est_yaw,
    }
    if debug:
        frame["true_p"] = _floats(row.true_p)
        frame["true_v"] = _floats(row.true_v)
        frame["true_yaw"] = row.true_yaw
    return frame


class Subscriber:
    """Bounded per-client buffer; overflow drops the oldest frames and
    surfaces the hole as a single gap notice."""

    def __init__(self, maxsize: int):
        self.maxsize = maxsize
        self.frames: deque = deque()
        self.gap = None           # (first dropped tick, last dropped tick)
        self.event = asyncio.Event()
        self.closed = False

    def push(self, frame: dict) -> None:
        if len(self.frames) >= self.maxsize:
            old = self.frames.popleft()
            lo = self.gap[0] if self.gap else old["tick"]
            self.gap = (lo, old["tick"])
        self.frames.append(frame)
        self.event.set()

    def close(self) -> None:
        self.closed = True
        self.event.set()

    async def pop(self):
        """Next message to send: a pending gap notice, a frame, or None on close."""
        while True:
            if self.gap is not None:
                lo, hi = self.gap
                self.gap = None
                return {"v": PROTOCOL_VERSION, "type": "gap", "from": lo, "to": hi}
            if self.frames:
                return self.frames.popleft()
            if self.closed:
                return None
            self.event.clear()
            await self.event.wait()


class Session:
    def __init__(self, session_id: str, cfg: PipelineConfig, seed: int,
                 mode: str, subscriber_queue: int):
        self.id = session_id
        self.cfg = cfg
        self.seed = seed
        self.mode = mode
        self.subscriber_queue = subscriber_queue
        self.loop = sim.FlightLoop(cfg, seed=seed)
        self.queue: deque = deque()
        self.frames: list = []
        self.subscribers: set[Subscriber] = set()
        self.closed = False
        self._wake = asyncio.Event()
        self._classifier = None
        self.task: asyncio.Task | None = None

    def start(self) -> None:
        self.task = asyncio.get_running_loop().create_task(self._run())

    @property
    def busy(self) -> bool:
        return bool(self.queue) or not self.loop.idle

    def classifier(self):
        if self._classifier is None:
            self._classifier = sim.build_classifier(self.cfg)
        return self._classifier

    def enqueue(self, outcome) -> int:
        self.queue.append(outcome)
        self._wake.set()
        return len(self.queue)

    def subscribe(self) -> Subscriber:
        sub = Subscriber(self.subscriber_queue)
        self.subscribers.add(sub)
        return sub

    def unsubscribe(self, sub: Subscriber) -> None:
        self.subscribers.discard(sub)

    def close(self) -> None:
        self.closed = True
        self._wake.set()
        for sub in list(self.subscribers):
            sub.close()

    async def _run(self) -> None:
        dt = self.loop.params.dt
        while True:
            await self._wake.wait()
            if self.closed:
                return
            while not self.closed and (self.queue or not self.loop.idle):
                if self.loop.idle:
                    self.loop.begin(self.queue.popleft())
                row = self.loop.step()
                frame = tick_frame(row, self.cfg.debug)
                self.frames.append(frame)
                for sub in self.subscribers:
                    sub.push(frame)
                await asyncio.sleep(dt if self.mode == "realtime" else 0)
            if self.closed:
                return
            self._wake.clear()


def _bad_request(status: int, message: str):
    raise HTTPException(status_code=status, detail=message)


def _session_or_404(app: FastAPI, session_id: str) -> Session:
    session = app.state.sessions.get(session_id)
    if session is None:
        _bad_request(404, f"unknown session {session_id}")
    return session


def _mapped(payload: dict, cfg: PipelineConfig):
    try:
        class_id = int(payload["class_id"])
        confidence = float(payload["confidence"])
    except (KeyError, TypeError, ValueError):
        _bad_request(422, "gesture needs integer class_id and numeric confidence")
    quartile = payload.get("quartile", "TL")
    if quartile not in QUARTILES:
        _bad_request(422, f"quartile: must be one of {list(QUARTILES)}")
    if not 0.0 <= confidence <= 1.0:
        _bad_request(422, "confidence: must be in [0, 1]")
    try:
        return map_gesture_to_command(class_id, confidence, quartile,
                                      grid=cfg.grid, class_commands=cfg.command_table)
    except ValueError as e:
        _bad_request(422, str(e))


def create_app(data_dir=None, subscriber_queue: int = 256) -> FastAPI:
    data_path = Path(data_dir) if data_dir is not None else Path("gcs-data")

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        data_path.mkdir(parents=True, exist_ok=True)
        yield
        for session in list(app.state.sessions.values()):
            session.close()
            if session.task is not None:
                session.task.cancel()

    app = FastAPI(title="gestureflight ground control", lifespan=lifespan)
    app.state.sessions = {}
    app.state.data_dir = data_path

    # -- sessions ----------------------------------------------------------

    @app.post("/v1/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.json() if await request.body() else {}
        if not isinstance(body, dict):
            _bad_request(422, "body must be a JSON object")
        mode = body.get("mode", "realtime")
        if mode not in MODES:
            _bad_request(422, f"mode: must be one of {list(MODES)}")
        try:
            seed = int(body.get("seed", 0))
        except (TypeError, ValueError):
            _bad_request(422, "seed: must be an integer")
        try:
            cfg = from_dict(body.get("config", {}) or {})
        except ValueError as e:
            _bad_request(422, str(e))
        session_id = uuid.uuid4().hex[:12]
        session = Session(session_id, cfg, seed, mode, subscriber_queue)
        app.state.sessions[session_id] = session
        session.start()
        return {"v": PROTOCOL_VERSION, "session_id": session_id,
                "seed": seed, "mode": mode,
                "threshold": cfg.grid.threshold}

    @app.get("/v1/sessions/{session_id}")
    async def session_status(session_id: str):
        session = _session_or_404(app, session_id)
        est = session.loop.belief.x
        return {
            "v": PROTOCOL_VERSION,
            "session_id": session.id,
            "mode": session.mode,
            "tick": session.loop.tick,
            "idle": session.loop.idle,
            "queue_length": len(session.queue),
            "airborne": session.loop.world.airborne,
            "est_p": _floats(est[:3]),
            "est_yaw": float(est[6]),
            "segments": session.loop.segment_count,
        }

    @app.delete("/v1/sessions/{session_id}")
    async def delete_session(session_id: str):
        session = _session_or_404(app, session_id)
        session.close()
        if session.task is not None:
            await session.task
        del app.state.sessions[session_id]
        log_id = None
        if session.loop.rows:
            log_id = f"{session.id}-{int(time.time() * 1000)}"
            write_log(FlightLog(rows=session.loop.rows),
                      data_path / f"{log_id}.ndjson")
        return {"v": PROTOCOL_VERSION, "session_id": session_id,
                "ticks": session.loop.tick, "log_id": log_id}

    # -- gestures ----------------------------------------------------------

    @app.post("/v1/sessions/{session_id}/gestures")
    async def submit_gesture(session_id: str, request: Request):
        session = _session_or_404(app, session_id)
        ctype = request.headers.get("content-type", "")
        if ctype.startswith("application/json"):
            payload = await request.json()
            if not isinstance(payload, dict):
                _bad_request(422, "body must be a JSON object")
            outcome = _mapped(payload, session.cfg)
            frame_meta = {}
        elif "json" not in ctype:
            data = await request.body()
            try:
                frame = read_pgm(data)
            except ValueError as e:
                _bad_request(422, f"frame: {e}")
            if session.cfg.classifier == "scripted":
                _bad_request(422, "session classifier does not accept frames")
            quartile = sim.frame_quartile(frame)
            crop = sim.crop_quartile(frame, quartile)
            try:
                class_id, confidence = session.classifier()(crop)
            except ValueError as e:
                _bad_request(422, str(e))
            try:
                outcome = map_gesture_to_command(
                    class_id, confidence, quartile,
                    grid=session.cfg.grid,
                    class_commands=session.cfg.command_table)
            except ValueError as e:
                _bad_request(422, str(e))
            frame_meta = {"frame_shape": list(frame.shape)}
        else:
            _bad_request(415, "send JSON or raw PGM bytes")

        common = {
            "v": PROTOCOL_VERSION,
            "class_id": outcome.class_id,
            "confidence": outcome.confidence,
            "quartile": outcome.quartile,
            **frame_meta,
        }
        if isinstance(outcome, sim.RejectedGesture):
            return {**common, "status": "rejected", "reason": outcome.reason}
        position = session.enqueue(outcome)
        return {**common, "status": "accepted", "queue_position": position,
                "command": outcome.kind, "speed": outcome.speed,
                "cell": list(outcome.cell)}

    # -- streaming ---------------------------------------------------------

    @app.websocket("/v1/sessions/{session_id}/stream")
    async def stream(ws: WebSocket, session_id: str, last_tick: int = 0):
        session = app.state.sessions.get(session_id)
        if session is None:
            await ws.close(code=4404)
            return
        await ws.accept()
        sub = session.subscribe()
        history = list(session.frames)  # no await between these two lines
        sent = last_tick
        try:
            for frame in history:
                if frame["tick"] > sent:
                    await ws.send_json(frame)
                    sent = frame["tick"]
            while True:
                msg = await sub.pop()
                if msg is None:
                    await ws.close(code=1000)
                    return
                if msg["type"] == "tick":
                    if msg["tick"] <= sent:
                        continue
                    sent = msg["tick"]
                else:  # gap notice; drop the part already replayed
                    if msg["to"] <= sent:
                        continue
                    if msg["from"] <= sent:
                        msg = {**msg, "from": sent + 1}
                    sent = msg["to"]
                await ws.send_json(msg)
        except WebSocketDisconnect:
            pass
        finally:
            session.unsubscribe(sub)

    # -- missions and logs ---------------------------------------------------

    @app.post("/v1/sessions/{session_id}/mission")
    async def fly_mission(session_id: str, request: Request):
        session = _session_or_404(app, session_id)
        if session.busy:
            _bad_request(409, "session busy: a segment is active or gestures are queued")
        body = await request.json() if await request.body() else {}
        try:
            spec = MissionSpec(
                kind=body.get("kind", "rectangle"),
                width=float(body.get("width", 8.0)),
                height=float(body.get("height", 4.0)),
                altitude=float(body.get("altitude", 1.5)))
            seed = int(body.get("seed", session.seed))
        except (TypeError, ValueError) as e:
            _bad_request(422, str(e))
        try:
            log = await asyncio.to_thread(run_mission, spec, session.cfg, seed)
        except (ValueError, RuntimeError) as e:
            _bad_request(422, str(e))
        log_id = f"{session.id}-{int(time.time() * 1000)}"
        write_log(log, data_path / f"{log_id}.ndjson")
        report = track_displacement(log, sim.mission_reference(
            spec, sim.mission_params(session.cfg, spec)))
        return {
            "v": PROTOCOL_VERSION,
            "log_id": log_id,
            "rows": len(log.rows),
            "seed": seed,
            "max_abs_error": _floats(report.max_abs_error),
            "rmse": _floats(report.rmse),
            "path_length": report.path_length,
        }

    def _log_path(log_id: str) -> Path:
        if not LOG_ID_RE.match(log_id):
            _bad_request(422, "log_id: letters, digits, - and _ only")
        path = data_path / f"{log_id}.ndjson"
        if not path.is_file():
            _bad_request(404, f"unknown log {log_id}")
        return path

    @app.get("/v1/logs/{log_id}")
    async def get_log(log_id: str):
        from fastapi.responses import Response
        return Response(content=_log_path(log_id).read_bytes(),
                        media_type="application/x-ndjson")

    @app.websocket("/v1/logs/{log_id}/replay")
    async def replay(ws: WebSocket, log_id: str):
        if not LOG_ID_RE.match(log_id):
            await ws.close(code=4422)
            return
        path = data_path / f"{log_id}.ndjson"
        if not path.is_file():
            await ws.close(code=4404)
            return
        log = sim.read_log(path)
        await ws.accept()
        try:
            for row in log.rows:
                await ws.send_json(tick_frame(row, debug=True))
            await ws.close(code=1000)
        except WebSocketDisconnect:
            pass

    return app
