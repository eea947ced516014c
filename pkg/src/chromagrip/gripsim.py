"""Three-finger pneumatic soft gripper simulation.

Each finger is driven by a first-order pressure lag toward its valve
command (supply pressure on inflate, atmosphere on vent, unchanged on
hold).  Finger curl is proportional to pressure up to a full-closure
pressure; the fingertip sweeps inward from an open reach toward a closed
reach.  Contact with the grasp target is a linear spring on the kinematic
penetration depth, so force orderings across target stiffnesses are exact
rather than emergent.

Sensor registers are 12-bit: the force-sensitive resistor channel is a
saturating exponential of contact force, the linear flex channel is linear
in curl.  Both maps are monotone so the downstream hue encoding stays
monotone in the physical signals.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import GripperConfig, TargetConfig, TargetsConfig
from .errors import ValidationError

N_FINGERS = 3
REGISTER_MAX = 4096


class Valve(Enum):
    INFLATE = "inflate"
    HOLD = "hold"
    VENT = "vent"


@dataclass(frozen=True)
class PneumaticState:
    """Per-finger pressures (kPa), valve states and the shared supply."""

    pressures: tuple[float, float, float]
    valves: tuple[Valve, Valve, Valve]
    supply_kpa: float

    def __post_init__(self):
        if len(self.pressures) != N_FINGERS or len(self.valves) != N_FINGERS:
            raise ValidationError("pneumatic state needs exactly three fingers")
        if any(not math.isfinite(p) or p < 0 for p in self.pressures):
            raise ValidationError("pressures must be finite and non-negative")
        if any(p > self.supply_kpa + 1e-9 for p in self.pressures):
            raise ValidationError("finger pressure above supply pressure")

    @classmethod
    def initial(cls, supply_kpa: float) -> "PneumaticState":
        return cls((0.0, 0.0, 0.0), (Valve.HOLD,) * 3, supply_kpa)


@dataclass(frozen=True)
class GraspTarget:
    """Object held by the gripper; ``kind`` is derived from the stiffness."""

    stiffness: float            # N/m
    radius: float               # m
    kind: str                   # "soft" | "rigid"
    occlusion_factor: float = 0.0

    def __post_init__(self):
        if self.stiffness <= 0 or self.radius <= 0:
            raise ValidationError("target stiffness and radius must be positive")
        if not 0.0 <= self.occlusion_factor <= 1.0:
            raise ValidationError("occlusion_factor must lie in [0, 1]")
        if self.kind not in ("soft", "rigid"):
            raise ValidationError(f"unknown target kind: {self.kind}")

    @classmethod
    def from_config(cls, tc: TargetConfig, kind: str,
                    rigid_threshold: float) -> "GraspTarget":
        if kind == "rigid" and tc.stiffness_n_per_m < rigid_threshold:
            raise ValidationError("rigid target below the rigid stiffness threshold")
        if kind == "soft" and tc.stiffness_n_per_m >= rigid_threshold:
            raise ValidationError("soft target at or above the rigid stiffness threshold")
        return cls(tc.stiffness_n_per_m, tc.radius_m, kind, tc.occlusion_factor)


@dataclass(frozen=True)
class SensorFrame:
    """Register readings at one control step; contact forces are ground truth."""

    t: float
    fsr_registers: tuple[int, int, int]
    fsl_registers: tuple[int, int, int]
    contact_forces: tuple[float, float, float]

    def __post_init__(self):
        for regs in (self.fsr_registers, self.fsl_registers):
            if any(not 0 <= r <= REGISTER_MAX for r in regs):
                raise ValidationError("register values must lie in [0, 4096]")
        if any(f < 0 for f in self.contact_forces):
            raise ValidationError("contact forces must be non-negative")


def curl_fraction(pressure_kpa: float, config: GripperConfig) -> float:
    """Fraction of full finger curl at a given pressure, in [0, 1]."""
    return min(max(pressure_kpa / config.close_pressure_kpa, 0.0), 1.0)


def fingertip_reach(pressure_kpa: float, config: GripperConfig) -> float:
    frac = curl_fraction(pressure_kpa, config)
    return config.finger_open_reach_m - frac * (
        config.finger_open_reach_m - config.finger_closed_reach_m)


def contact_force(pressure_kpa: float, target: GraspTarget,
                  config: GripperConfig) -> float:
    penetration = target.radius - fingertip_reach(pressure_kpa, config)
    if penetration <= 0.0:
        return 0.0
    return target.stiffness * penetration


def fsr_register(force_n: float, config: GripperConfig) -> int:
    """Saturating force -> register map, rounded to the nearest count."""
    x = REGISTER_MAX * (1.0 - math.exp(-force_n / config.fsr_force_scale_n))
    return int(math.floor(x + 0.5))


def fsl_register(pressure_kpa: float, config: GripperConfig) -> int:
    return int(math.floor(REGISTER_MAX * curl_fraction(pressure_kpa, config) + 0.5))


def _jitter(rng: np.random.Generator | None, amplitude: int) -> int:
    if amplitude <= 0 or rng is None:
        return 0
    return int(rng.integers(-amplitude, amplitude + 1))


def step(state: PneumaticState, target: GraspTarget,
         command: tuple[Valve, Valve, Valve], dt: float,
         config: GripperConfig, t: float = 0.0,
         rng: np.random.Generator | None = None) -> tuple[PneumaticState, SensorFrame]:
    """Advance the pneumatics by ``dt`` and read out the sensor registers."""
    if not (isinstance(dt, (int, float)) and math.isfinite(dt)) or dt <= 0:
        raise ValidationError("dt must be a positive finite number")
    if len(command) != N_FINGERS:
        raise ValidationError("valve command needs exactly three entries")

    # Exact discretization of dp/dt = (p_cmd - p) / tau.
    alpha = 1.0 - math.exp(-dt / config.time_constant_s)
    pressures = []
    for p, valve in zip(state.pressures, command):
        if valve is Valve.INFLATE:
            p_cmd = state.supply_kpa
        elif valve is Valve.VENT:
            p_cmd = 0.0
        else:
            p_cmd = p
        p_next = p + (p_cmd - p) * alpha
        pressures.append(min(max(p_next, 0.0), state.supply_kpa))

    forces = tuple(contact_force(p, target, config) for p in pressures)
    noise = config.register_noise
    fsr = tuple(min(max(fsr_register(f, config) + _jitter(rng, noise), 0),
                    REGISTER_MAX) for f in forces)
    fsl = tuple(min(max(fsl_register(p, config) + _jitter(rng, noise), 0),
                    REGISTER_MAX) for p in pressures)

    new_state = PneumaticState(tuple(pressures), tuple(command), state.supply_kpa)
    frame = SensorFrame(t + dt, fsr, fsl, forces)
    return new_state, frame


@dataclass
class EpisodeRecord:
    """Full grasp episode: inflate -> hold -> vent, with per-step traces."""

    target: GraspTarget
    times: list[float] = field(default_factory=list)
    states: list[PneumaticState] = field(default_factory=list)
    frames: list[SensorFrame] = field(default_factory=list)
    phases: list[str] = field(default_factory=list)
    missed_grasp: bool = False

    @property
    def hold_frames(self) -> list[SensorFrame]:
        return [f for f, ph in zip(self.frames, self.phases) if ph == "hold"]

    def mean_hold_force(self) -> float:
        frames = self.hold_frames
        if not frames:
            return 0.0
        return float(np.mean([np.mean(f.contact_forces) for f in frames]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "p1", "p2", "p3", "fsr1", "fsr2", "fsr3",
                         "fsl1", "fsl2", "fsl3", "f1", "f2", "f3"])
        for st, fr in zip(self.states, self.frames):
            writer.writerow([repr(fr.t)]
                            + [repr(p) for p in st.pressures]
                            + list(fr.fsr_registers) + list(fr.fsl_registers)
                            + [repr(f) for f in fr.contact_forces])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "target": {"stiffness": self.target.stiffness,
                       "radius": self.target.radius,
                       "kind": self.target.kind,
                       "occlusion_factor": self.target.occlusion_factor},
            "missed_grasp": self.missed_grasp,
            "mean_hold_force": self.mean_hold_force(),
            "steps": [{
                "t": fr.t,
                "phase": ph,
                "pressures": list(st.pressures),
                "fsr": list(fr.fsr_registers),
                "fsl": list(fr.fsl_registers),
                "forces": list(fr.contact_forces),
            } for st, fr, ph in zip(self.states, self.frames, self.phases)],
        }, sort_keys=True)


def run_grasp_episode(target: GraspTarget, hold_duration: float,
                      config: GripperConfig,
                      seed: int | None = None) -> EpisodeRecord:
    """Run the grasp protocol: inflate to steady grasp, hold, then vent.

    Inflation ends once all pressures are within 1% of supply (or after
    ``max_inflate_s``); the hold window then spans exactly
    ``hold_duration * control_rate`` steps before venting back to zero.
    A fully curled hand that never touched the target marks the episode
    as a missed grasp instead of raising.
    """
    if not hold_duration > 0:
        raise ValidationError("hold_duration must be positive")

    rng = np.random.default_rng(seed) if seed is not None else None
    dt = 1.0 / config.control_rate_hz
    record = EpisodeRecord(target=target)
    state = PneumaticState.initial(config.supply_kpa)
    t = 0.0

    def advance(command, phase):
        nonlocal state, t
        state, frame = step(state, target, command, dt, config, t=t, rng=rng)
        t = frame.t
        record.times.append(t)
        record.states.append(state)
        record.frames.append(frame)
        record.phases.append(phase)
        return frame

    inflate = (Valve.INFLATE,) * 3
    hold = (Valve.HOLD,) * 3
    vent = (Valve.VENT,) * 3

    max_inflate_steps = int(round(config.max_inflate_s * config.control_rate_hz))
    for _ in range(max_inflate_steps):
        advance(inflate, "inflate")
        if all(p >= 0.99 * config.supply_kpa for p in state.pressures):
            break

    hold_steps = int(round(hold_duration * config.control_rate_hz))
    for _ in range(hold_steps):
        advance(hold, "hold")

    vent_steps = int(round(config.vent_timeout_s * config.control_rate_hz))
    for _ in range(vent_steps):
        advance(vent, "vent")
        if all(p <= 1e-4 for p in state.pressures):
            break

    fully_curled = any(
        all(curl_fraction(p, config) >= 1.0 for p in st.pressures)
        for st in record.states)
    touched = any(f > 0.0 for fr in record.frames for f in fr.contact_forces)
    record.missed_grasp = fully_curled and not touched
    return record


def default_target(kind: str, targets: TargetsConfig) -> GraspTarget:
    tc = targets.rigid if kind == "rigid" else targets.soft
    return GraspTarget.from_config(tc, kind, targets.rigid_stiffness_threshold)
