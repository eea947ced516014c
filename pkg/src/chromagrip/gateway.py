"""Service shell: session persistence and the operator-facing WebSocket.

One process owns one live catch session.  Connected operators submit JSON
messages (``glove_sample``, ``gesture``, ``config_update``); inputs are
queued and applied in arrival order, at most one per simulation tick, and
every input is answered with an ``ack`` or an ``err`` frame.  Telemetry
snapshots fan out identically to all connections; frames ride along as
base64 PPM at a reduced rate.

Sessions persist to flat files: ``<id>.jsonl`` (one step per line) plus a
``<id>.record.json`` with the config snapshot and summary.  The summary is
always recomputable from the step log alone.
"""

from __future__ import annotations

import asyncio
import base64
import csv
import io
import json
import logging
from collections import deque
from contextlib import asynccontextmanager
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import framegen, gesturenet, gripsim, ppm
from .config import AppConfig
from .errors import SessionNotFound, ValidationError
from .gesturenet import GestureLabel, MlpModel
from .teleop import CatchLoop, Phase, SessionLog, summarize_steps

log = logging.getLogger(__name__)

SUMMARY_FIELDS = ["session_id", "steps", "outcome", "fault_occurred",
                  "mean_hold_force", "mean_estimate_error", "estimate_count",
                  "partial"]


@dataclass
class SessionRecord:
    session_id: str
    config: dict
    summary: dict
    log_file: str
    partial: bool = False
    notes: list[str] = field(default_factory=list)


class SessionStore:
    """Flat-file session log store."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _log_path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.jsonl"

    def _record_path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.record.json"

    def unique_id(self, base: str) -> str:
        if not self._record_path(base).exists():
            return base
        n = 2
        while self._record_path(f"{base}-{n}").exists():
            n += 1
        return f"{base}-{n}"

    def persist(self, session_id: str, session_log: SessionLog, config: AppConfig,
                *, partial: bool = False, notes: list[str] | None = None,
                overwrite: bool = False) -> SessionRecord:
        if not overwrite and self._record_path(session_id).exists():
            raise ValidationError(f"session id already exists: {session_id}")
        record = SessionRecord(
            session_id=session_id,
            config=config.to_dict(),
            summary={"session_id": session_id, **session_log.summary(),
                     "partial": partial},
            log_file=self._log_path(session_id).name,
            partial=partial,
            notes=list(notes or []),
        )
        self._log_path(session_id).write_text(session_log.to_jsonl())
        self._record_path(session_id).write_text(
            json.dumps(asdict(record), indent=2, sort_keys=True))
        return record

    def load(self, session_id: str) -> SessionRecord:
        path = self._record_path(session_id)
        if not path.exists():
            raise SessionNotFound(session_id)
        data = json.loads(path.read_text())
        return SessionRecord(**data)

    def steps(self, session_id: str) -> list[dict]:
        path = self._log_path(session_id)
        if not path.exists():
            raise SessionNotFound(session_id)
        return SessionLog.steps_from_jsonl(path.read_text())

    def recompute_summary(self, session_id: str) -> dict:
        record = self.load(session_id)
        return {"session_id": session_id, **summarize_steps(self.steps(session_id)),
                "partial": record.partial}

    def list_ids(self) -> list[str]:
        return sorted(p.name[:-len(".record.json")]
                      for p in self.root.glob("*.record.json"))

    def export(self, session_id: str,
               out_dir: str | Path | None = None) -> tuple[Path, Path]:
        """Write the step log and a one-row CSV summary; returns both paths."""
        record = self.load(session_id)
        out = Path(out_dir) if out_dir is not None else self.root
        out.mkdir(parents=True, exist_ok=True)
        jsonl_path = out / f"{session_id}.jsonl"
        src = self._log_path(session_id)
        if jsonl_path.resolve() != src.resolve():
            jsonl_path.write_bytes(src.read_bytes())
        csv_path = out / f"{session_id}.summary.csv"
        csv_path.write_text(summary_csv(record.summary))
        return jsonl_path, csv_path


def summary_csv(summary: dict) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
    writer.writeheader()
    row = {k: summary.get(k) for k in SUMMARY_FIELDS}
    if row["mean_estimate_error"] is None:
        row["mean_estimate_error"] = ""
    writer.writerow(row)
    return buf.getvalue()


def default_model(config: AppConfig) -> MlpModel:
    """Load the configured gesture model, or quick-train one from the
    synthetic dataset (deterministic, a couple of seconds)."""
    if config.serve.model_path:
        return MlpModel.load(config.serve.model_path)
    gt = config.gesture_train
    angles, labels = gesturenet.synthetic_dataset(
        users=gt.users, repetitions=gt.repetitions,
        spread_deg=gt.cluster_spread_deg, seed=7)
    model, _ = gesturenet.train(angles, labels, loops=config.serve.quick_train_loops,
                                learning_rate=0.05, seed=7,
                                hidden_units=gt.hidden_units)
    return model


class GatewaySession:
    """Ordered input queue around a CatchLoop, plus telemetry snapshots."""

    def __init__(self, config: AppConfig, *, seed: int = 0,
                 session_id: str = "live", model: MlpModel | None = None,
                 target_kind: str = "soft", start_phase: Phase = Phase.PRE_GRASP):
        self.config = config
        self.session_id = session_id
        self.model = model if model is not None else default_model(config)
        target = gripsim.default_target(target_kind, config.targets)
        self.loop = CatchLoop(config, target=target, model=self.model,
                              seed=seed, start_phase=start_phase)
        self.inputs: deque[tuple[int, dict, object]] = deque()
        self.notes: list[str] = []
        self.telemetry_verbose = True
        self._seq = 0
        self._telemetry_count = 0

    def submit(self, message: dict, client: object = None) -> dict | None:
        """Queue one operator message; returns an immediate err frame for
        malformed input, otherwise None (the ack comes when applied)."""
        self._seq += 1
        seq = message.get("seq", self._seq)
        kind = message.get("type")
        try:
            if kind == "gesture":
                GestureLabel.from_key(str(message.get("label", "")))
            elif kind == "glove_sample":
                angles = message.get("angles")
                if (not isinstance(angles, (list, tuple)) or len(angles) != 5
                        or not all(isinstance(a, (int, float)) for a in angles)):
                    raise ValidationError("glove_sample needs five numeric angles")
            elif kind == "config_update":
                allowed = {"type", "seq", "safety_limit", "cv_interval_ticks",
                           "telemetry_verbose"}
                unknown = set(message) - allowed
                if unknown:
                    raise ValidationError(f"unknown config keys: {sorted(unknown)}")
            else:
                raise ValidationError(f"unknown message type: {kind!r}")
        except ValidationError as exc:
            return {"type": "err", "seq": seq, "reason": str(exc)}
        self.inputs.append((seq, message, client))
        return None

    def _apply(self, seq: int, message: dict) -> tuple[object, dict]:
        kind = message["type"]
        if kind == "gesture":
            label = GestureLabel.from_key(message["label"])
            action = self.config.teleop.gesture_table.get(label.key)
            if action == "toggle_telemetry":
                self.telemetry_verbose = not self.telemetry_verbose
            return label, {"type": "ack", "seq": seq, "input": "gesture"}
        if kind == "glove_sample":
            return list(message["angles"]), {"type": "ack", "seq": seq,
                                             "input": "glove_sample"}
        # config_update
        if "safety_limit" in message:
            limit = float(message["safety_limit"])
            if not 0.0 < limit <= 4.0:
                return None, {"type": "err", "seq": seq,
                              "reason": "safety_limit must lie in (0, 4]"}
            self.loop.state = replace(self.loop.state, safety_limit=limit)
        if "cv_interval_ticks" in message:
            self.config.teleop.cv_interval_ticks = max(
                1, int(message["cv_interval_ticks"]))
        if "telemetry_verbose" in message:
            self.telemetry_verbose = bool(message["telemetry_verbose"])
        return None, {"type": "ack", "seq": seq, "input": "config_update"}

    def tick_once(self) -> tuple[dict, list[tuple[object, dict]]]:
        """Advance one tick, applying at most one queued input."""
        entry = None
        replies: list[tuple[object, dict]] = []
        if self.inputs:
            seq, message, client = self.inputs.popleft()
            entry, reply = self._apply(seq, message)
            replies.append((client, reply))
        record = self.loop.advance(entry)
        for _, reply in replies:
            if reply["type"] == "ack":
                reply["step"] = record["step"]
                reply["gesture"] = record["gesture"]
                reply["command"] = record["command"]
        return record, replies

    def telemetry(self, record: dict, with_frame: bool) -> dict:
        message = {
            "type": "telemetry",
            "step": record["step"],
            "t": record["t"],
            "phase": record["phase"],
            "gesture": record["gesture"],
            "command": record["command"],
            "hue": record["hue"],
            "hue_rgb": list(framegen.byte_hue_to_rgb(record["hue"])),
            "force_estimate": {
                "force": record["force_estimate"],
                "camera_hue": record["camera_hue"],
                "valid": record["estimate_valid"],
            },
            "safety_limit": record["safety_limit"],
            "arm_pose": record["arm_pose"],
        }
        if self.telemetry_verbose:
            for key in ("pressures", "fsr", "fsl", "contact_forces", "emergency"):
                message[key] = record[key]
        if with_frame and self.loop.last_frame is not None:
            scale = max(1, self.config.serve.frame_scale)
            frame = np.ascontiguousarray(self.loop.last_frame[::scale, ::scale])
            message["frame_b64"] = base64.b64encode(
                ppm.encode_ppm(frame)).decode("ascii")
        return message

    def next_telemetry(self) -> tuple[dict, list[tuple[object, dict]]]:
        record, replies = self.tick_once()
        with_frame = (self._telemetry_count
                      % max(1, self.config.serve.frame_divisor) == 0)
        self._telemetry_count += 1
        return self.telemetry(record, with_frame), replies


def create_app(config: AppConfig | None = None, *, seed: int = 0,
               log_dir: str | Path = "sessions",
               session: GatewaySession | None = None) -> FastAPI:
    config = config or AppConfig()
    store = SessionStore(log_dir)
    if session is None:
        session = GatewaySession(config, seed=seed,
                                 session_id=store.unique_id("live"))

    async def run_loop():
        dt = 1.0 / config.serve.tick_rate_hz
        divisor = max(1, config.serve.telemetry_divisor)
        try:
            while True:
                message, replies = session.next_telemetry()
                for client, reply in replies:
                    if client is not None:
                        try:
                            await client.send_text(json.dumps(reply, sort_keys=True))
                        except Exception:  # client vanished between queue and ack
                            pass
                if session.loop.step_index % divisor == 0:
                    text = json.dumps(message, sort_keys=True)
                    for ws in list(app.state.connections):
                        try:
                            await ws.send_text(text)
                        except Exception:
                            pass
                await asyncio.sleep(dt)
        except asyncio.CancelledError:
            pass

    @asynccontextmanager
    async def lifespan(app_: FastAPI):
        task = asyncio.create_task(run_loop())
        yield
        task.cancel()
        store.persist(session.session_id, session.loop.log, config,
                      partial=True, notes=session.notes, overwrite=True)

    app = FastAPI(title="chromagrip gateway", lifespan=lifespan)
    app.state.session = session
    app.state.store = store
    app.state.connections = []

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        app.state.connections.append(websocket)
        log.info("operator connected (%d total)", len(app.state.connections))
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    message = json.loads(raw)
                    if not isinstance(message, dict):
                        raise ValueError("message must be a JSON object")
                except ValueError as exc:
                    await websocket.send_text(json.dumps(
                        {"type": "err", "reason": f"bad JSON: {exc}"},
                        sort_keys=True))
                    continue
                err = session.submit(message, client=websocket)
                if err is not None:
                    await websocket.send_text(json.dumps(err, sort_keys=True))
        except WebSocketDisconnect:
            if websocket in app.state.connections:
                app.state.connections.remove(websocket)
            session.notes.append(
                f"client disconnected at step {session.loop.step_index}")
            log.info("operator disconnected (%d left)", len(app.state.connections))

    @app.get("/session")
    async def session_info():
        return {"session_id": session.session_id,
                "summary": session.loop.log.summary(),
                "notes": session.notes}

    return app


def serve(config: AppConfig, *, seed: int = 0,
          log_dir: str | Path = "sessions") -> None:
    """Run the gateway until interrupted; the port must be free."""
    import uvicorn

    app = create_app(config, seed=seed, log_dir=log_dir)
    uvicorn.run(app, host=config.serve.host, port=config.serve.port,
                log_level="warning")
