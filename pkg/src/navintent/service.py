"""Real-time bridge: one interactive simulation session over a WebSocket.

The browser console connects to `/session`, receives one MapSnapshot, then a
TickState per simulation tick; it sends Command, AirmClick, and Reset
frames.  A single writer (the tick loop) owns all simulation and estimator
state; the receive loop only enqueues messages, which are drained at tick
boundaries - the latest Command wins within a tick and clicks apply at the
next boundary.  The tick pipeline is the same TrialEngine used by batch
trials, so a recorded command stream replays to identical beliefs.
"""

from __future__ import annotations

import asyncio
import json
import math
import time
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .baselines import EcfParams, RbiiParams
from .estimator import EstimatorParams, belief_snapshot
from .methods import METHOD_IDS
from .simulator import IDLE, OperatorCommand, SimParams, TrialEngine
from .world import Scenario


class ProtocolError(ValueError):
    def __init__(self, code: str, detail: str):
        super().__init__(detail)
        self.code = code
        self.detail = detail


def encode_message(message: dict) -> str:
    """One frame per message; key order fixed for stable wire bytes."""
    return json.dumps(message, sort_keys=True, separators=(",", ":"))


def _require_number(obj: dict, key: str) -> float:
    value = obj.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ProtocolError("invalid_field", f"field {key!r} must be a finite number")
    return float(value)


def decode_client_message(text: str) -> dict:
    """Parse and validate one client frame; raises ProtocolError otherwise."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError("malformed", f"frame is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or not isinstance(obj.get("type"), str):
        raise ProtocolError("malformed", "frame must be an object with a 'type' tag")
    kind = obj["type"]
    if kind == "command":
        return {
            "type": "command",
            "linear": _require_number(obj, "linear"),
            "angular": _require_number(obj, "angular"),
        }
    if kind == "airm_click":
        goal = obj.get("goal")
        if isinstance(goal, bool) or not isinstance(goal, int):
            raise ProtocolError("invalid_field", "field 'goal' must be a goal id")
        return {"type": "airm_click", "goal": goal}
    if kind == "reset":
        return {"type": "reset"}
    raise ProtocolError("unknown_type", f"unknown message type {kind!r}")


def error_frame(exc: ProtocolError) -> str:
    return encode_message({"type": "error", "code": exc.code, "detail": exc.detail})


def map_snapshot(engine: TrialEngine) -> dict:
    scenario = engine.scenario
    grid = scenario.grid
    rows = []
    for world_row in range(grid.height - 1, -1, -1):
        rows.append("".join("#" if c else "." for c in grid.occupied[world_row]))
    return {
        "type": "map",
        "scenario": scenario.id,
        "grid": {
            "width": grid.width,
            "height": grid.height,
            "resolution": grid.resolution,
            "rows": rows,
        },
        "goals": [{"id": g.id, "label": g.label, "x": g.x, "y": g.y} for g in scenario.goals],
        "start": {
            "x": scenario.start.x,
            "y": scenario.start.y,
            "heading": scenario.start.heading,
        },
        "methods": list(engine.methods),
        "tick_rate": engine.est_params.tick_rate,
        "limits": {"v_max": engine.sim_params.v_max, "w_max": engine.sim_params.w_max},
        "capture_radius": engine.sim_params.capture_radius,
    }


def tick_state(engine: TrialEngine, record) -> dict:
    goals = engine.scenario.goals
    return {
        "type": "tick",
        "tick": record.tick,
        "pose": {"x": record.pose.x, "y": record.pose.y, "heading": record.pose.heading},
        "true_goal": record.true_goal,
        "beliefs": {
            mid: belief_snapshot(belief, goals) for mid, belief in record.beliefs.items()
        },
        "predictions": record.predictions,
        "airm": engine.airm_status(record.tick),
        "command": {"linear": record.command[0], "angular": record.command[1]},
        "click": record.click,
    }


def trial_end(engine: TrialEngine) -> dict:
    from .metrics import accuracy, log_loss

    scores = {}
    if engine.log.records:
        for mid in engine.log.methods:
            scores[mid] = {
                "accuracy": accuracy(engine.log, mid),
                "log_loss": log_loss(engine.log, mid),
            }
    return {
        "type": "trial_end",
        "complete": engine.complete,
        "ticks": engine.tick_index,
        "scores": scores,
    }


def drain_inbox(messages: list[dict], command: OperatorCommand) -> tuple[OperatorCommand, bool]:
    """Fold queued client messages into the next tick's inputs.

    The latest Command wins; the latest AirmClick applies this tick (a new
    activation replaces the previous episode anyway); Reset short-circuits.
    Returns (command for this tick, reset requested).
    """
    click = None
    linear, angular = command.linear, command.angular
    for msg in messages:
        if msg["type"] == "command":
            linear, angular = msg["linear"], msg["angular"]
        elif msg["type"] == "airm_click":
            click = msg["goal"]
        elif msg["type"] == "reset":
            return OperatorCommand(linear, angular), True
    return OperatorCommand(linear, angular, airm_click=click), False


class SessionRunner:
    """Owns one live session: engine state, inbox, pacing, and log flushing."""

    def __init__(self, app_state, websocket: WebSocket):
        self.state = app_state
        self.ws = websocket
        self.inbox: asyncio.Queue = asyncio.Queue()
        self.engine = self._fresh_engine()
        self.command = IDLE
        self.closed = False

    def _fresh_engine(self) -> TrialEngine:
        seed = self.state.seed + self.state.session_count
        self.state.session_count += 1
        return TrialEngine(
            self.state.scenario,
            self.state.methods,
            seed,
            est_params=self.state.est_params,
            sim_params=self.state.sim_params,
            rbii_params=self.state.rbii_params,
            ecf_params=self.state.ecf_params,
        )

    async def receive_loop(self):
        while True:
            try:
                text = await self.ws.receive_text()
            except WebSocketDisconnect:
                self.closed = True
                return
            try:
                self.inbox.put_nowait(decode_client_message(text))
            except ProtocolError as exc:
                await self.ws.send_text(error_frame(exc))

    async def tick_loop(self):
        per_tick = self.engine.dt * self.state.time_scale
        deadline = time.monotonic()
        await self.ws.send_text(encode_message(map_snapshot(self.engine)))
        while not self.closed:
            pending = []
            while not self.inbox.empty():
                pending.append(self.inbox.get_nowait())
            command, reset = drain_inbox(pending, self.command)
            if reset:
                self._flush_log()
                self.engine = self._fresh_engine()
                self.command = IDLE
                await self.ws.send_text(encode_message(map_snapshot(self.engine)))
                continue
            self.command = OperatorCommand(command.linear, command.angular)
            record = self.engine.tick(command)
            await self.ws.send_text(encode_message(tick_state(self.engine, record)))
            if self.engine.done:
                await self.ws.send_text(encode_message(trial_end(self.engine)))
                self._flush_log()
                self.engine = self._fresh_engine()
                self.command = IDLE
                await self.ws.send_text(encode_message(map_snapshot(self.engine)))
                deadline = time.monotonic()
                continue
            if per_tick > 0:
                deadline += per_tick
                delay = deadline - time.monotonic()
                if delay > 0:
                    await asyncio.sleep(delay)
                elif delay < -5 * per_tick:
                    deadline = time.monotonic()  # fell far behind: resync, never reorder
            else:
                await asyncio.sleep(0)

    def _flush_log(self):
        if self.state.log_dir is None or not self.engine.log.records:
            return
        self.state.log_dir.mkdir(parents=True, exist_ok=True)
        name = f"session_{self.engine.log.scenario_id}_{self.engine.log.seed:05d}.jsonl"
        self.engine.log.write(self.state.log_dir / name)

    async def run(self):
        receiver = asyncio.create_task(self.receive_loop())
        try:
            await self.tick_loop()
        except WebSocketDisconnect:
            pass
        finally:
            receiver.cancel()
            self._flush_log()


def create_app(
    scenario: Scenario,
    est_params: EstimatorParams | None = None,
    sim_params: SimParams | None = None,
    rbii_params: RbiiParams | None = None,
    ecf_params: EcfParams | None = None,
    methods=METHOD_IDS,
    seed: int = 0,
    log_dir: Path | None = None,
    assets_dir: Path | None = None,
    time_scale: float = 1.0,
) -> FastAPI:
    """Build the session app. `time_scale` stretches wall-clock pacing
    (1.0 = real time, 0 = as fast as the event loop allows, for tests)."""
    app = FastAPI()
    app.state.scenario = scenario
    app.state.est_params = est_params or EstimatorParams()
    app.state.sim_params = sim_params or SimParams()
    app.state.rbii_params = rbii_params or RbiiParams()
    app.state.ecf_params = ecf_params or EcfParams()
    app.state.methods = list(methods)
    app.state.seed = seed
    app.state.session_count = 0
    app.state.log_dir = log_dir
    app.state.time_scale = time_scale
    app.state.active = False

    @app.websocket("/session")
    async def session(websocket: WebSocket):
        await websocket.accept()
        if app.state.active:
            await websocket.send_text(
                encode_message(
                    {"type": "error", "code": "busy", "detail": "a session is already active"}
                )
            )
            await websocket.close()
            return
        app.state.active = True
        try:
            await SessionRunner(app.state, websocket).run()
        finally:
            app.state.active = False

    if assets_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=assets_dir, html=True), name="console")

    return app
