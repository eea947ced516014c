"""Teleoperation state machine and the closed-loop catch scenario.

Phase graph (command-driven edges; every other combination keeps the
current phase):

    Idle       --ArmMove-->      Approach
    Approach   --Advance-->      PreGrasp
    PreGrasp   --GraspStart-->   Grasping      (inflate)
    PreGrasp   --Release-->      Idle          (abort)
    Grasping   --GraspHold-->    Holding       (hold pressure)
    Grasping   --Release-->      Releasing
    Holding    --Release-->      Releasing     (vent)
    Releasing  --Advance-->      Idle
    Fault      --Release-->      Releasing     (operator recovery)
    any        --EmergencyVent-> Fault

The loop injects GraspHold automatically once the grasp is established and
Advance once venting completes, so a scripted operator only supplies intent
gestures.  The safety interlock dominates everything: a valid force
estimate above the limit turns the tick's actuation into an emergency vent
and the phase into Fault, in that same tick.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import cvforce, framegen, gesturenet, gripsim, huecode
from .config import DEFAULT_GESTURE_TABLE, AppConfig
from .errors import ValidationError
from .gesturenet import GestureLabel, MlpModel
from .gripsim import GraspTarget, PneumaticState, Valve

log = logging.getLogger(__name__)


class Phase(Enum):
    IDLE = "idle"
    APPROACH = "approach"
    PRE_GRASP = "pre_grasp"
    GRASPING = "grasping"
    HOLDING = "holding"
    RELEASING = "releasing"
    FAULT = "fault"


class CommandKind(Enum):
    ARM_MOVE = "arm_move"
    GRASP_START = "grasp_start"
    GRASP_HOLD = "grasp_hold"
    RELEASE = "release"
    ADVANCE = "advance"
    EMERGENCY_VENT = "emergency_vent"
    NO_OP = "noop"


@dataclass(frozen=True)
class Command:
    kind: CommandKind
    direction: tuple[float, float, float] | None = None  # ArmMove only

    NOOP = None  # set below


Command.NOOP = Command(CommandKind.NO_OP)


@dataclass(frozen=True)
class TeleopState:
    phase: Phase = Phase.IDLE
    arm_pose: tuple[float, float, float] = (0.0, 0.0, 0.0)
    last_force_estimate: cvforce.ForceEstimate | None = None
    safety_limit: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.safety_limit <= 4.0:
            raise ValidationError("safety_limit must lie in (0, 4]")


@dataclass(frozen=True)
class Actuation:
    valves: tuple[Valve, Valve, Valve]
    arm_delta: tuple[float, float, float] = (0.0, 0.0, 0.0)
    emergency: bool = False


# Phases in which each command kind is accepted.
_ALLOWED: dict[CommandKind, set[Phase]] = {
    CommandKind.ARM_MOVE: {Phase.IDLE, Phase.APPROACH, Phase.PRE_GRASP},
    CommandKind.GRASP_START: {Phase.PRE_GRASP},
    CommandKind.GRASP_HOLD: {Phase.GRASPING, Phase.HOLDING},
    CommandKind.RELEASE: {Phase.PRE_GRASP, Phase.GRASPING, Phase.HOLDING,
                          Phase.FAULT},
    CommandKind.ADVANCE: {Phase.APPROACH, Phase.RELEASING},
    CommandKind.EMERGENCY_VENT: set(Phase),
    CommandKind.NO_OP: set(Phase),
}

_TRANSITIONS: dict[tuple[Phase, CommandKind], Phase] = {
    (Phase.IDLE, CommandKind.ARM_MOVE): Phase.APPROACH,
    (Phase.APPROACH, CommandKind.ADVANCE): Phase.PRE_GRASP,
    (Phase.PRE_GRASP, CommandKind.GRASP_START): Phase.GRASPING,
    (Phase.PRE_GRASP, CommandKind.RELEASE): Phase.IDLE,
    (Phase.GRASPING, CommandKind.GRASP_HOLD): Phase.HOLDING,
    (Phase.GRASPING, CommandKind.RELEASE): Phase.RELEASING,
    (Phase.HOLDING, CommandKind.RELEASE): Phase.RELEASING,
    (Phase.RELEASING, CommandKind.ADVANCE): Phase.IDLE,
    (Phase.FAULT, CommandKind.RELEASE): Phase.RELEASING,
}

_PHASE_VALVES: dict[Phase, Valve] = {
    Phase.IDLE: Valve.VENT,
    Phase.APPROACH: Valve.VENT,
    Phase.PRE_GRASP: Valve.VENT,
    Phase.GRASPING: Valve.INFLATE,
    Phase.HOLDING: Valve.HOLD,
    Phase.RELEASING: Valve.VENT,
    Phase.FAULT: Valve.VENT,
}


def parse_action(action: str) -> Command:
    """Parse a gesture-table action string into a Command."""
    if action.startswith("arm_move"):
        direction = (0.0, 0.0, 1.0)
        if ":" in action:
            parts = action.split(":", 1)[1].split(",")
            if len(parts) != 3:
                raise ValidationError(f"bad arm_move direction in {action!r}")
            direction = tuple(float(p) for p in parts)
        return Command(CommandKind.ARM_MOVE, direction)
    if action == "toggle_telemetry":
        # Meta action: handled by the session layer, invisible to the FSM.
        return Command.NOOP
    try:
        return Command(CommandKind(action))
    except ValueError:
        raise ValidationError(f"unknown gesture action: {action!r}") from None


def gesture_to_command(label: GestureLabel, phase: Phase,
                       table: dict[str, str] | None = None) -> Command:
    """Phase-gated lookup in the gesture table; rejected gestures are NoOp."""
    table = table if table is not None else DEFAULT_GESTURE_TABLE
    action = table.get(label.key)
    if action is None:
        log.debug("gesture %s not bound, ignoring", label.key)
        return Command.NOOP
    command = parse_action(action)
    if phase not in _ALLOWED[command.kind]:
        log.debug("gesture %s -> %s rejected in phase %s",
                  label.key, command.kind.value, phase.value)
        return Command.NOOP
    return command


def tick(state: TeleopState, command: Command,
         force: cvforce.ForceEstimate | None,
         arm_step: float = 0.005) -> tuple[TeleopState, Actuation]:
    """Advance one control step; the safety interlock overrides the command."""
    estimate = force if (force is not None and force.valid) else None
    latched = estimate if estimate is not None else state.last_force_estimate

    if latched is not None and latched.valid and latched.force > state.safety_limit:
        faulted = replace(state, phase=Phase.FAULT, last_force_estimate=latched)
        return faulted, Actuation((Valve.VENT,) * 3, emergency=True)

    if command.kind is CommandKind.EMERGENCY_VENT:
        return (replace(state, phase=Phase.FAULT, last_force_estimate=latched),
                Actuation((Valve.VENT,) * 3, emergency=True))

    next_phase = _TRANSITIONS.get((state.phase, command.kind), state.phase)
    arm_pose = state.arm_pose
    arm_delta = (0.0, 0.0, 0.0)
    if (command.kind is CommandKind.ARM_MOVE
            and state.phase in _ALLOWED[CommandKind.ARM_MOVE]):
        d = np.asarray(command.direction, dtype=np.float64)
        norm = float(np.linalg.norm(d))
        if norm > 0:
            arm_delta = tuple(arm_step * d / norm)
            arm_pose = tuple(np.asarray(arm_pose) + arm_delta)

    new_state = replace(state, phase=next_phase, arm_pose=arm_pose,
                        last_force_estimate=latched)
    return new_state, Actuation((_PHASE_VALVES[next_phase],) * 3,
                                arm_delta=arm_delta)


# --- closed-loop catch sessions --------------------------------------------


@dataclass
class SessionLog:
    """Append-only per-tick record of the full loop, JSON-lines exportable."""

    steps: list[dict] = field(default_factory=list)
    catch_failed: bool = True
    fault_occurred: bool = False

    def append(self, record: dict) -> None:
        self.steps.append(record)
        if record["phase"] == Phase.HOLDING.value:
            self.catch_failed = False
        if record["phase"] == Phase.FAULT.value:
            self.fault_occurred = True

    def summary(self) -> dict:
        return summarize_steps(self.steps)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s, sort_keys=True) + "\n" for s in self.steps)

    @staticmethod
    def steps_from_jsonl(text: str) -> list[dict]:
        return [json.loads(line) for line in text.splitlines() if line.strip()]


def summarize_steps(steps: list[dict]) -> dict:
    """Session summary, computable from a step log alone."""
    hold_forces = [float(np.mean(s["contact_forces"])) for s in steps
                   if s["phase"] == Phase.HOLDING.value]
    errors = [abs(s["force_estimate"] - s["estimate_truth"]) for s in steps
              if s.get("estimate_fresh") and s.get("estimate_truth") is not None]
    reached_holding = any(s["phase"] == Phase.HOLDING.value for s in steps)
    return {
        "steps": len(steps),
        "outcome": "caught" if reached_holding else "catch_failed",
        "fault_occurred": any(s["phase"] == Phase.FAULT.value for s in steps),
        "mean_hold_force": float(np.mean(hold_forces)) if hold_forces else 0.0,
        "mean_estimate_error": float(np.mean(errors)) if errors else None,
        "estimate_count": len(errors),
    }


class CatchLoop:
    """One live catch session: state machine, pneumatics, LED, camera.

    ``advance`` consumes at most one operator entry per tick (a gesture
    label, five glove angles to classify server-side, or an explicit
    Command) and returns the step record.  The camera pipeline runs every
    ``cv_interval_ticks`` on the previous tick's frame; its estimate is
    latched until the next run.
    """

    def __init__(self, config: AppConfig, *, target: GraspTarget | None = None,
                 model: MlpModel | None = None, seed: int = 0,
                 start_phase: Phase = Phase.IDLE):
        self.config = config
        self.target = target or gripsim.default_target("soft", config.targets)
        self.model = model
        self.seed = seed
        self.state = TeleopState(phase=start_phase,
                                 safety_limit=config.teleop.safety_limit)
        self.pneumatics = PneumaticState.initial(config.gripper.supply_kpa)
        self.rng = np.random.default_rng(seed)
        self.dt = 1.0 / config.gripper.control_rate_hz
        self.log = SessionLog()
        self.step_index = 0
        self.t = 0.0
        self.latched: cvforce.ForceEstimate | None = None
        self.last_frame: np.ndarray | None = None
        self._last_hue_real: float | None = None
        self._pending_auto: Command | None = None

    def classify(self, angles) -> GestureLabel:
        if self.model is None:
            raise ValidationError("glove input needs a gesture model")
        return gesturenet.classify(self.model, angles)

    def advance(self, entry=None) -> dict:
        gesture: GestureLabel | None = None
        if isinstance(entry, GestureLabel):
            gesture = entry
        elif isinstance(entry, (list, tuple, np.ndarray)):
            gesture = self.classify(entry)

        if gesture is not None:
            command = gesture_to_command(gesture, self.state.phase,
                                         self.config.teleop.gesture_table)
        elif isinstance(entry, Command):
            command = entry
        elif self._pending_auto is not None:
            command = self._pending_auto
        else:
            command = Command.NOOP
        self._pending_auto = None

        # Refresh the camera estimate from the previous tick's frame.
        estimate_fresh = False
        estimate_truth = None
        if (self.last_frame is not None
                and self.step_index % self.config.teleop.cv_interval_ticks == 0):
            est = cvforce.estimate(self.last_frame, self.config.decode)
            if est.valid:
                self.latched = est
                estimate_fresh = True
                estimate_truth = huecode.scale_force_from_hue(self._last_hue_real)

        self.state, actuation = tick(self.state, command, self.latched,
                                     arm_step=self.config.teleop.arm_step_m)
        self.pneumatics, frame = gripsim.step(
            self.pneumatics, self.target, actuation.valves, self.dt,
            self.config.gripper, t=self.t, rng=self.rng)
        self.t = frame.t

        hue_cmd = huecode.encode(frame)
        _, _, hue_real = huecode.encode_components(frame)
        spec = framegen.SceneSpec.from_config(
            self.config.scene, hue_cmd.hue,
            occlusion_factor=self.target.occlusion_factor)
        self.last_frame = framegen.render(spec, seed=self.seed + self.step_index)
        self._last_hue_real = hue_real

        if (self.state.phase is Phase.GRASPING
                and self._grasp_established(frame)):
            self._pending_auto = Command(CommandKind.GRASP_HOLD)
        elif (self.state.phase is Phase.RELEASING
                and all(p <= 1e-3 for p in self.pneumatics.pressures)):
            self._pending_auto = Command(CommandKind.ADVANCE)

        record = {
            "step": self.step_index,
            "t": round(self.t, 9),
            "phase": self.state.phase.value,
            "gesture": gesture.key if gesture is not None else None,
            "command": command.kind.value,
            "valves": [v.value for v in actuation.valves],
            "emergency": actuation.emergency,
            "arm_pose": list(self.state.arm_pose),
            "pressures": list(self.pneumatics.pressures),
            "fsr": list(frame.fsr_registers),
            "fsl": list(frame.fsl_registers),
            "contact_forces": list(frame.contact_forces),
            "hue": hue_cmd.hue,
            "hue_real": hue_real,
            "camera_hue": self.latched.camera_hue if self.latched else None,
            "force_estimate": self.latched.force if self.latched else None,
            "estimate_valid": bool(self.latched.valid) if self.latched else False,
            "estimate_fresh": estimate_fresh,
            "estimate_truth": estimate_truth,
            "safety_limit": self.state.safety_limit,
        }
        self.log.append(record)
        self.step_index += 1
        return record

    def _grasp_established(self, frame: gripsim.SensorFrame) -> bool:
        steady = all(p >= 0.95 * self.config.gripper.supply_kpa
                     for p in self.pneumatics.pressures)
        return steady and any(f > 0.0 for f in frame.contact_forces)


def expand_script(script: list) -> list:
    """Flatten scenario script items into one entry per tick.

    Items: {"gesture": name}, {"glove": [5 angles]}, {"wait": n_ticks}.
    Plain strings are shorthand for gestures.
    """
    if not script:
        raise ValidationError("scenario script is empty")
    stream: list = []
    for item in script:
        if isinstance(item, str):
            stream.append(GestureLabel.from_key(item))
        elif "gesture" in item:
            stream.append(GestureLabel.from_key(item["gesture"]))
        elif "glove" in item:
            angles = list(item["glove"])
            if len(angles) != 5:
                raise ValidationError("glove sample needs five angles")
            stream.append(angles)
        elif "wait" in item:
            stream.extend([None] * int(item["wait"]))
        else:
            raise ValidationError(f"bad script item: {item!r}")
    return stream


def run_catch_scenario(script: list, config: AppConfig, *,
                       target: GraspTarget | None = None,
                       model: MlpModel | None = None,
                       seed: int = 0,
                       max_ticks: int | None = None,
                       start_phase: Phase = Phase.IDLE) -> SessionLog:
    """Run the whole loop headlessly and log every stage per tick.

    classify -> gesture_to_command -> tick -> pneumatic step -> hue encode
    -> frame render -> force estimate (latched into the next tick).
    A scenario that never reaches Holding keeps ``catch_failed`` set.
    """
    stream = expand_script(script)
    if max_ticks is None:
        max_ticks = len(stream) + 200
    loop = CatchLoop(config, target=target, model=model, seed=seed,
                     start_phase=start_phase)
    for i in range(max_ticks):
        loop.advance(stream[i] if i < len(stream) else None)
    return loop.log
