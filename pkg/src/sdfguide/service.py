"""Interactive session host: a websocket front door on the simulation loop.

One asyncio loop owns everything. The simulation advances inside a single
"sim" task; connection handlers never touch session state directly, they
post commands onto a bounded queue (plus a latest-wins slot for the held
hand force) and the sim task applies them between ticks. Snapshots are
immutable dicts fanned out through small per-client queues that drop stale
frames instead of ever stalling the tick loop.

Protocol (JSON text frames). Client -> server:

    {"type": "hand_force", "f": [x, y, z]}      held force, zero-order hold
    {"type": "toggle_vf", "on": true}
    {"type": "set_drill_power", "on": true}
    {"type": "reset"}
    {"type": "load_scenario", "scenario": {...}}
    {"type": "scene"}                            request scene metadata
    {"type": "advance", "ticks": n}              lockstep mode only
    {"type": "finish"}                           write trace/metrics files

Server -> client: {"type": "scene", ...}, {"type": "snapshot", ...},
{"type": "ack", ...}, {"type": "finished", ...} and {"type": "error",
"msg": ...}. The first client to connect steers; later clients are
read-only observers. A steering disconnect zeroes the held force before
the next tick.

The default mode paces the simulation against the wall clock at the
scenario's tick rate. ``lockstep=True`` disables the pacer: the simulation
advances only on explicit ``advance`` commands, which makes scripted
replays deterministic enough to compare traces byte-for-byte against the
offline runner.
"""

from __future__ import annotations

import asyncio
import base64
import json
import threading

import numpy as np

from .scenario import ScenarioError, build_session, load_scenario, trace_meta
from .simulation import Metrics, Session, write_trace
from .volume import SegmentTable

SNAPSHOT_HZ = 30.0
COMMAND_QUEUE_SIZE = 256
CLIENT_QUEUE_SIZE = 4
MAX_CATCHUP_TICKS = 512

_PALETTE = [(0.86, 0.17, 0.15), (0.17, 0.45, 0.86), (0.20, 0.69, 0.29),
            (0.89, 0.61, 0.11), (0.55, 0.24, 0.72), (0.10, 0.68, 0.66)]


def scene_message(scn: dict, session: Session, segments: SegmentTable | None) -> dict:
    """Static scenario metadata, including the label grid for slice views."""
    labels = session._pristine_labels
    by_label = segments.by_label() if segments else {}
    anatomies = []
    for i, c in enumerate(scn["constraints"]):
        seg = by_label.get(c["label"])
        color = list(seg.color) if seg and seg.color else list(_PALETTE[i % len(_PALETTE)])
        anatomies.append({
            "label": c["label"],
            "name": seg.name if seg else f"label_{c['label']}",
            "color": color,
            "tau0_mm": c["tau0_mm"],
            "tauf_mm": c["tauf_mm"],
            "lambda_per_mm": c["lambda_per_mm"],
        })
    return {
        "type": "scene",
        "name": scn["name"],
        "dims": list(session.volume.dims),
        "spacing_mm": [float(s) for s in session.volume.spacing],
        "origin_mm": [float(o) for o in session.volume.origin],
        "matrix_label": scn["matrix_label"],
        "label_dtype": str(labels.dtype),
        "labels_b64": base64.b64encode(
            np.ascontiguousarray(labels).ravel(order="F").tobytes()).decode("ascii"),
        "anatomies": anatomies,
        "dt_s": scn["dt_s"],
        "max_force_n": scn["max_force_n"],
        "burr_radius_mm": float(session.tool.burr_radius),
        "tip_mm": [float(v) for v in session.tip_position()],
    }


class SessionService:
    def __init__(self, scn: dict, *, host: str = "127.0.0.1", port: int = 0,
                 lockstep: bool = False, snapshot_hz: float = SNAPSHOT_HZ,
                 trace_out=None, metrics_out=None, workers: int | None = None):
        self.scn = scn
        self.host = host
        self.port = port
        self.lockstep = lockstep
        self.snapshot_hz = snapshot_hz
        self.trace_out = trace_out
        self.metrics_out = metrics_out
        self.workers = workers
        self.bound_port: int | None = None
        self.ready = threading.Event()
        self._loop: asyncio.AbstractEventLoop | None = None
        self._stop: asyncio.Event | None = None
        self._session: Session | None = None
        self._segments: SegmentTable | None = None
        self._scene: dict | None = None
        self._held_force = np.zeros(3)
        self._commands: asyncio.Queue | None = None
        self._clients: dict = {}  # connection -> send queue
        self._steering = None

    # -- command application (sim task only) ----------------------------------

    def _apply_command(self, cmd: dict) -> dict | None:
        session = self._session
        kind = cmd.get("type")
        if kind == "hand_force":
            self._held_force = np.asarray(cmd["f"], dtype=float).reshape(3)
            return None
        if kind == "toggle_vf":
            session.vf_enabled = bool(cmd["on"])
            return None
        if kind == "set_drill_power":
            session.drill_on = bool(cmd["on"])
            return None
        if kind == "reset":
            session.reset()
            self._held_force = np.zeros(3)
            return None
        if kind == "load_scenario":
            scn = load_scenario(cmd["scenario"])
            self._load(scn)
            return {"type": "ack", "loaded": scn["name"]}
        if kind == "advance":
            if not self.lockstep:
                return {"type": "error", "msg": "advance requires lockstep mode"}
            ticks = int(cmd["ticks"])
            if ticks < 0:
                return {"type": "error", "msg": "ticks must be >= 0"}
            for _ in range(ticks):
                session.step(self._held_force)
            return {"type": "ack", "tick": session.tick_index,
                    "time_s": float(session.time)}
        if kind == "finish":
            metrics = self._write_outputs()
            return {"type": "finished", "metrics": metrics.to_json_obj()}
        if kind == "scene":
            return self._scene
        return {"type": "error", "msg": f"unknown command type {kind!r}"}

    def _write_outputs(self) -> Metrics:
        metrics = self._session.metrics()
        if self.trace_out:
            write_trace(self.trace_out, self._session.trace())
        if self.metrics_out:
            with open(self.metrics_out, "w") as f:
                json.dump(metrics.to_json_obj(), f, sort_keys=True,
                          separators=(",", ":"))
                f.write("\n")
        return metrics

    def _load(self, scn: dict) -> None:
        from .scenario import resolve_volume
        _, segments = resolve_volume(scn)
        self.scn = scn
        self._session = build_session(scn, workers=self.workers)
        self._segments = segments
        self._scene = scene_message(scn, self._session, segments)
        self._held_force = np.zeros(3)

    # -- validation at the network edge ---------------------------------------

    def _validate(self, cmd) -> str | None:
        if not isinstance(cmd, dict) or "type" not in cmd:
            return "message must be an object with a 'type' field"
        kind = cmd["type"]
        if kind == "hand_force":
            f = cmd.get("f")
            if (not isinstance(f, (list, tuple)) or len(f) != 3
                    or not all(isinstance(v, (int, float)) for v in f)):
                return "hand_force needs f: [x, y, z]"
            arr = np.asarray(f, dtype=float)
            if not np.all(np.isfinite(arr)):
                return "hand_force components must be finite"
            if float(np.linalg.norm(arr)) > self.scn["max_force_n"]:
                return f"hand_force exceeds max {self.scn['max_force_n']} N"
        elif kind in ("toggle_vf", "set_drill_power"):
            if not isinstance(cmd.get("on"), bool):
                return f"{kind} needs a boolean 'on'"
        elif kind == "advance":
            if not isinstance(cmd.get("ticks"), int):
                return "advance needs integer 'ticks'"
        elif kind == "load_scenario":
            if not isinstance(cmd.get("scenario"), dict):
                return "load_scenario needs a 'scenario' object"
        elif kind not in ("reset", "finish", "scene"):
            return f"unknown command type {kind!r}"
        return None

    # -- tasks -----------------------------------------------------------------

    async def _sim_task(self):
        loop = asyncio.get_running_loop()
        dt = self.scn["dt_s"]
        start = loop.time()
        done = 0
        while not self._stop.is_set():
            if self.lockstep:
                cmd, fut = await self._commands.get()
                self._dispatch(cmd, fut)
                continue
            self._drain_commands()
            target = int((loop.time() - start) / dt)
            if target > done + MAX_CATCHUP_TICKS:  # stall forgiveness, no spiral
                start = loop.time() - (done + MAX_CATCHUP_TICKS) * dt
                target = done + MAX_CATCHUP_TICKS
            while done < target:
                self._drain_commands()
                self._session.step(self._held_force)
                done += 1
            await asyncio.sleep(max(dt, 0.002))

    def _drain_commands(self) -> None:
        while True:
            try:
                cmd, fut = self._commands.get_nowait()
            except asyncio.QueueEmpty:
                return
            self._dispatch(cmd, fut)

    def _dispatch(self, cmd: dict, fut: asyncio.Future | None) -> None:
        try:
            reply = self._apply_command(cmd)
        except (ScenarioError, ValueError, KeyError) as exc:
            reply = {"type": "error", "msg": str(exc)}
        if fut is not None and not fut.done():
            fut.set_result(reply)

    async def _snapshot_task(self):
        period = 1.0 / self.snapshot_hz
        while not self._stop.is_set():
            await asyncio.sleep(period)
            if not self._clients:
                continue
            snap = json.dumps(self._session.snapshot(), sort_keys=True,
                              separators=(",", ":"))
            for q in list(self._clients.values()):
                if q.full():  # slow client: drop the stale frame, keep latest
                    try:
                        q.get_nowait()
                    except asyncio.QueueEmpty:
                        pass
                q.put_nowait(snap)

    async def _sender(self, ws, queue: asyncio.Queue):
        while True:
            msg = await queue.get()
            await ws.send(msg)

    async def _handler(self, ws):
        queue: asyncio.Queue = asyncio.Queue(maxsize=CLIENT_QUEUE_SIZE)
        self._clients[ws] = queue
        steering = self._steering is None
        if steering:
            self._steering = ws
        sender = asyncio.create_task(self._sender(ws, queue))
        try:
            await ws.send(json.dumps(self._scene, sort_keys=True, separators=(",", ":")))
            async for raw in ws:
                try:
                    cmd = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send(json.dumps({"type": "error", "msg": "invalid JSON"}))
                    continue
                problem = self._validate(cmd)
                if problem is not None:
                    await ws.send(json.dumps({"type": "error", "msg": problem}))
                    continue
                if cmd["type"] == "scene":
                    pass  # read-only, any client may ask
                elif not steering:
                    await ws.send(json.dumps(
                        {"type": "error", "msg": "read-only client: steering is taken"}))
                    continue
                needs_reply = cmd["type"] in ("advance", "finish", "scene", "load_scenario")
                fut = asyncio.get_running_loop().create_future() if needs_reply else None
                try:
                    self._commands.put_nowait((cmd, fut))
                except asyncio.QueueFull:
                    await ws.send(json.dumps({"type": "error", "msg": "command queue full"}))
                    continue
                if fut is not None:
                    reply = await fut
                    if reply is not None:
                        await ws.send(json.dumps(reply, sort_keys=True,
                                                 separators=(",", ":")))
        finally:
            sender.cancel()
            self._clients.pop(ws, None)
            if self._steering is ws:
                self._steering = None
                # safety stop: zero the held force before the next tick
                try:
                    self._commands.put_nowait(({"type": "hand_force", "f": [0, 0, 0]}, None))
                except asyncio.QueueFull:
                    self._held_force = np.zeros(3)

    # -- entry points ------------------------------------------------------------

    async def run_async(self):
        from websockets.asyncio.server import serve

        self._loop = asyncio.get_running_loop()
        self._stop = asyncio.Event()
        self._commands = asyncio.Queue(maxsize=COMMAND_QUEUE_SIZE)
        self._load(self.scn)
        async with serve(self._handler, self.host, self.port) as server:
            self.bound_port = server.sockets[0].getsockname()[1]
            self.ready.set()
            tasks = [asyncio.create_task(self._sim_task()),
                     asyncio.create_task(self._snapshot_task())]
            try:
                await self._stop.wait()
            finally:
                for t in tasks:
                    t.cancel()
                await asyncio.gather(*tasks, return_exceptions=True)

    def run(self):
        try:
            asyncio.run(self.run_async())
        except KeyboardInterrupt:
            pass

    def stop(self):
        if self._loop is not None and self._stop is not None:
            self._loop.call_soon_threadsafe(self._stop.set)

    def start_in_thread(self) -> threading.Thread:
        thread = threading.Thread(target=self.run, daemon=True)
        thread.start()
        if not self.ready.wait(timeout=30):
            raise RuntimeError("service failed to start")
        return thread
