"""Session-oriented control surface over the engine.

A session owns one engine state and moves through configuring -> ready ->
{running, paused} -> finished. Control actions are serialized through a
per-session lock, so every snapshot and delta sits on an event boundary.
Sessions are in-memory only and expire after 30 idle minutes; the durable
artifact is the exported report, which is byte-identical to a headless CLI
run of the same inputs.
"""

from __future__ import annotations

import json
import queue
import secrets
import threading
import time as wall
from dataclasses import dataclass, field
from typing import Mapping

import anyio
from fastapi import FastAPI, File, Request, Response, UploadFile, WebSocket
from fastapi.responses import JSONResponse
from starlette.websockets import WebSocketDisconnect

from . import engine, metrics, policies, workload
from .model import EETMatrix, SimulationConfig, SimulatorError
from .workload import NonPositiveCell, TraceRow, ValidationFailed

DEFAULT_TTL_SECONDS = 1800.0

CONFIGURING = "configuring"
READY = "ready"
RUNNING = "running"
PAUSED = "paused"
FINISHED = "finished"


class UnknownSession(SimulatorError):
    pass


class WrongSessionState(SimulatorError):
    pass


class UnknownAction(SimulatorError):
    pass


class InvalidConfig(SimulatorError):
    pass


@dataclass
class Session:
    id: str
    config: SimulationConfig
    lock: threading.RLock = field(default_factory=threading.RLock)
    status: str = CONFIGURING
    eet: EETMatrix | None = None
    trace: tuple[TraceRow, ...] = ()
    state: engine.SimulationState | None = None
    subscribers: list[queue.SimpleQueue] = field(default_factory=list)
    last_touch: float = field(default_factory=wall.monotonic)
    _runner: threading.Thread | None = None
    _stop: threading.Event = field(default_factory=threading.Event)


def _delta(outcome: engine.StepOutcome) -> str:
    body: dict = {
        "event_no": outcome.event_no,
        "time": outcome.event.time,
        "kind": outcome.event.kind,
    }
    if outcome.event.task_id is not None:
        body["task"] = outcome.event.task_id
    if outcome.event.machine_id is not None:
        body["machine"] = outcome.event.machine_id
    body["counters"] = outcome.counters._asdict()
    return json.dumps(body, separators=(",", ":"))


class SessionManager:
    """All session bookkeeping; safe to call from any thread."""

    def __init__(self, ttl_seconds: float = DEFAULT_TTL_SECONDS):
        self.ttl = ttl_seconds
        self._sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()

    # -- lookup / lifecycle ---------------------------------------------------

    def _sweep(self) -> None:
        now = wall.monotonic()
        with self._registry_lock:
            stale = [
                sid for sid, s in self._sessions.items()
                if s.status != RUNNING and now - s.last_touch > self.ttl
            ]
            for sid in stale:
                del self._sessions[sid]

    def _get(self, session_id: str) -> Session:
        self._sweep()
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        session.last_touch = wall.monotonic()
        return session

    def create(self, config_data: Mapping) -> str:
        try:
            config = SimulationConfig.from_dict(config_data)
            entry = policies.get_policy(config.scheduler_policy)
            if entry.descriptor.requires_queue_size and config.machine_queue_size is None:
                raise policies.MissingQueueSize(
                    f"policy {config.scheduler_policy!r} needs machine_queue_size"
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfig(f"bad config: {exc}") from exc
        except (policies.UnknownPolicy, policies.MissingQueueSize) as exc:
            raise InvalidConfig(str(exc)) from exc
        session = Session(id=secrets.token_hex(8), config=config)
        with self._registry_lock:
            self._sessions[session.id] = session
        return session.id

    def drop(self, session_id: str) -> None:
        session = self._get(session_id)
        self._halt_runner(session)
        with self._registry_lock:
            self._sessions.pop(session_id, None)

    # -- configuration --------------------------------------------------------

    def load_workload(self, session_id: str, eet_bytes: bytes, trace_bytes: bytes) -> None:
        session = self._get(session_id)
        with session.lock:
            if not (
                session.status in (CONFIGURING, READY)
                or (session.status == PAUSED and session.state
                    and session.state.event_no == 0)
            ):
                raise WrongSessionState(f"cannot load workload while {session.status}")
            eet = workload.parse_eet_csv(eet_bytes)
            trace = workload.parse_trace_csv(trace_bytes)
            state = engine.SimulationState(session.config, eet, trace)
            session.eet = eet
            session.trace = tuple(trace)
            session.state = state
            session.status = READY

    def update_eet_cell(self, session_id: str, task_type: str,
                        machine_type: str, value: float) -> None:
        session = self._get(session_id)
        with session.lock:
            if session.status != READY or session.state is None:
                raise WrongSessionState(
                    f"EET edits need a loaded, unstarted session (now {session.status})"
                )
            if session.state.event_no != 0:
                raise WrongSessionState("EET edits are only allowed at t=0; reset first")
            if not (value > 0):
                raise NonPositiveCell(f"EET({task_type},{machine_type}) = {value} must be > 0")
            edited = session.eet.with_cell(task_type, machine_type, float(value))
            session.state = engine.SimulationState(session.config, edited, session.trace)
            session.eet = edited

    # -- control --------------------------------------------------------------

    def _broadcast(self, session: Session, outcome: engine.StepOutcome) -> None:
        payload = _delta(outcome)
        for q in list(session.subscribers):
            q.put(payload)

    def _step_once(self, session: Session) -> engine.StepOutcome:
        outcome = session.state.step()
        self._broadcast(session, outcome)
        if outcome.finished:
            session.status = FINISHED
        return outcome

    def _halt_runner(self, session: Session) -> None:
        runner = session._runner
        if runner is None:
            return
        session._stop.set()
        runner.join()
        session._runner = None

    def _paced_loop(self, session: Session, period: float) -> None:
        while not session._stop.is_set():
            with session.lock:
                if session.status != RUNNING:
                    return
                self._step_once(session)
                if session.status == FINISHED:
                    return
            if period > 0:
                wall.sleep(period)

    def control(self, session_id: str, action: str, speed=None) -> dict:
        session = self._get(session_id)
        action = str(action).lower()
        if action == "pause":
            with session.lock:
                if session.status != RUNNING:
                    raise WrongSessionState(f"pause needs a running session, not {session.status}")
                session.status = PAUSED
            self._halt_runner(session)
            return {"status": session.status}
        if action == "reset":
            self._halt_runner(session)
            with session.lock:
                if session.state is None:
                    raise WrongSessionState("nothing to reset: no workload loaded")
                session.state = session.state.reset()
                session.status = READY
            return {"status": session.status}
        if action == "step":
            with session.lock:
                if session.status not in (READY, PAUSED):
                    raise WrongSessionState(f"step needs ready/paused, not {session.status}")
                outcome = self._step_once(session)
                if session.status != FINISHED:
                    session.status = PAUSED
            return {"status": session.status, "event_no": outcome.event_no}
        if action == "run":
            if speed is None or (isinstance(speed, str) and speed.lower() == "max"):
                with session.lock:
                    if session.status not in (READY, PAUSED):
                        raise WrongSessionState(f"run needs ready/paused, not {session.status}")
                    session.status = RUNNING
                    while session.state.pending_events > 0 and session.status == RUNNING:
                        self._step_once(session)
                    session.status = FINISHED
                return {"status": session.status}
            try:
                events_per_second = float(speed)
            except (TypeError, ValueError) as exc:
                raise UnknownAction(f"bad speed {speed!r}") from exc
            if events_per_second <= 0:
                raise UnknownAction(f"speed must be > 0, got {speed!r}")
            with session.lock:
                if session.status not in (READY, PAUSED):
                    raise WrongSessionState(f"run needs ready/paused, not {session.status}")
                if session.state.pending_events == 0:
                    session.status = FINISHED
                    return {"status": session.status}
                session.status = RUNNING
                session._stop = threading.Event()
                runner = threading.Thread(
                    target=self._paced_loop,
                    args=(session, 1.0 / events_per_second),
                    daemon=True,
                )
                session._runner = runner
            runner.start()
            return {"status": RUNNING}
        raise UnknownAction(f"unknown action {action!r}")

    # -- observation ------------------------------------------------------------

    def snapshot(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            if session.state is None:
                body = {
                    "now": 0.0,
                    "event_no": 0,
                    "batch_queue": [],
                    "machines": [
                        {"id": m.id, "type": m.type_id, "running": None, "local_queue": []}
                        for m in session.config.machines
                    ],
                    "bins": {"completed": [], "missed": [], "cancelled": []},
                    "counters": {"arrived": 0, "completed": 0, "missed": 0,
                                 "cancelled": 0, "in_system": 0},
                }
                report = metrics.summary(metrics.EnergyLedger(session.config), {})
            else:
                body = session.state.snapshot()
                report = session.state.report()
            body["status"] = session.status
            body["report"] = json.loads(metrics.export_json(report))
            return body

    def report_bytes(self, session_id: str) -> bytes:
        session = self._get(session_id)
        with session.lock:
            if session.state is None:
                raise WrongSessionState("no workload loaded, nothing to report")
            return metrics.export_json(session.state.report())

    def subscribe(self, session_id: str) -> queue.SimpleQueue:
        session = self._get(session_id)
        q: queue.SimpleQueue = queue.SimpleQueue()
        with session.lock:
            session.subscribers.append(q)
        return q

    def unsubscribe(self, session_id: str, q: queue.SimpleQueue) -> None:
        try:
            session = self._get(session_id)
        except UnknownSession:
            return
        with session.lock:
            if q in session.subscribers:
                session.subscribers.remove(q)


def _error_body(exc: Exception) -> dict:
    return {"error": type(exc).__name__, "detail": str(exc)}


_NOTHING = object()


def _poll(q: queue.SimpleQueue):
    try:
        return q.get(timeout=0.2)
    except queue.Empty:
        return _NOTHING


def create_app(manager: SessionManager | None = None) -> FastAPI:
    mgr = manager if manager is not None else SessionManager()
    app = FastAPI(title="hetsim session service")
    app.state.manager = mgr

    @app.exception_handler(SimulatorError)
    async def _simulator_error(request: Request, exc: SimulatorError):
        if isinstance(exc, UnknownSession):
            status = 404
        elif isinstance(exc, WrongSessionState):
            status = 409
        else:
            status = 400
        body = _error_body(exc)
        if isinstance(exc, ValidationFailed):
            body["issues"] = [
                {"code": i.code, "message": i.message, "row": i.row} for i in exc.issues
            ]
        return JSONResponse(body, status_code=status)

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        data = await request.json()
        sid = await anyio.to_thread.run_sync(mgr.create, data)
        return {"id": sid}

    @app.put("/sessions/{session_id}/workload")
    async def load_workload(
        session_id: str,
        eet: UploadFile = File(...),
        trace: UploadFile = File(...),
    ):
        eet_bytes = await eet.read()
        trace_bytes = await trace.read()
        await anyio.to_thread.run_sync(
            mgr.load_workload, session_id, eet_bytes, trace_bytes
        )
        return {"status": READY}

    @app.post("/sessions/{session_id}/control")
    async def control(session_id: str, request: Request):
        data = await request.json()
        if "action" not in data:
            raise UnknownAction("control body needs an 'action'")
        ack = await anyio.to_thread.run_sync(
            mgr.control, session_id, data["action"], data.get("speed")
        )
        return ack

    @app.patch("/sessions/{session_id}/eet")
    async def update_eet(session_id: str, request: Request):
        data = await request.json()
        try:
            task_type = str(data["task_type"])
            machine_type = str(data["machine_type"])
            value = float(data["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfig(f"bad EET patch: {exc}") from exc
        await anyio.to_thread.run_sync(
            mgr.update_eet_cell, session_id, task_type, machine_type, value
        )
        return {"status": READY}

    @app.get("/sessions/{session_id}/snapshot")
    async def snapshot(session_id: str):
        return await anyio.to_thread.run_sync(mgr.snapshot, session_id)

    @app.get("/sessions/{session_id}/report")
    async def report(session_id: str):
        payload = await anyio.to_thread.run_sync(mgr.report_bytes, session_id)
        return Response(content=payload, media_type="application/json")

    @app.websocket("/sessions/{session_id}/events")
    async def events(websocket: WebSocket, session_id: str):
        try:
            q = mgr.subscribe(session_id)
        except UnknownSession:
            await websocket.close(code=4404)
            return
        await websocket.accept()
        try:
            async with anyio.create_task_group() as tg:

                async def sender():
                    while True:
                        item = await anyio.to_thread.run_sync(_poll, q)
                        if item is not _NOTHING:
                            await websocket.send_text(item)

                async def receiver():
                    # client hang-up surfaces here; tear the pair down
                    while True:
                        message = await websocket.receive()
                        if message["type"] == "websocket.disconnect":
                            tg.cancel_scope.cancel()
                            return

                tg.start_soon(sender)
                tg.start_soon(receiver)
        except WebSocketDisconnect:
            pass
        finally:
            mgr.unsubscribe(session_id, q)

    return app


def main() -> None:  # pragma: no cover - manual entry point
    import uvicorn

    uvicorn.run(create_app(), host="127.0.0.1", port=8000)


if __name__ == "__main__":  # pragma: no cover
    main()
