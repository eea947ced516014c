"""Configuration for the simulator, pipeline and service.

All knobs live in one ``AppConfig`` tree so a single JSON or TOML file can
drive the CLI, the scenario runner and the gateway service.  Unknown keys in
a config file are rejected rather than ignored.
"""

from __future__ import annotations

import json

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

from .errors import ConfigError


@dataclass
class GripperConfig:
    """Pneumatics, finger geometry and sensor transfer curves."""

    control_rate_hz: float = 100.0
    time_constant_s: float = 0.2        # first-order pressure lag
    supply_kpa: float = 1.4
    close_pressure_kpa: float = 1.2     # pressure at which fingers reach full curl
    finger_open_reach_m: float = 0.06   # fingertip distance from grasp axis, open
    finger_closed_reach_m: float = 0.01  # same, fully curled
    fsr_force_scale_n: float = 2.0      # saturation constant of the FSR register map
    register_noise: int = 0             # uniform jitter amplitude, register counts
    contact_damping: float = 0.0
    max_inflate_s: float = 2.0          # give up waiting for steady grasp after this
    vent_timeout_s: float = 2.0


@dataclass
class TargetConfig:
    stiffness_n_per_m: float = 250.0
    radius_m: float = 0.03
    occlusion_factor: float = 0.0


@dataclass
class TargetsConfig:
    """Default grasp targets; soft stiffness comes from the target calibration."""

    rigid_stiffness_threshold: float = 200.0
    rigid: TargetConfig = field(default_factory=lambda: TargetConfig(
        stiffness_n_per_m=250.0, radius_m=0.03, occlusion_factor=0.0))
    soft: TargetConfig = field(default_factory=lambda: TargetConfig(
        stiffness_n_per_m=115.0, radius_m=0.03, occlusion_factor=0.35))


@dataclass
class SceneConfig:
    """Synthetic camera geometry used by the closed loop."""

    width: int = 320
    height: int = 240
    blob_center: tuple[int, int] = (160, 120)
    blob_radius: int = 90
    background_color: tuple[int, int, int] = (12, 12, 12)
    occluder_color: tuple[int, int, int] = (0, 0, 0)
    reflection_color: tuple[int, int, int] = (190, 170, 150)
    reflection_width: int = 8
    noise_amplitude: int = 0


@dataclass
class DecodeConfig:
    """Camera-hue interval mapped onto the [0, 4] force scale.

    The defaults are the output of ``chromagrip calibrate-decoder`` against
    the bundled renderer; rerun it after changing the scene or LED model.
    """

    hue_low: float = 32.0
    hue_high: float = 148.0
    min_contour_area: int = 5000


@dataclass
class GestureTrainConfig:
    hidden_units: int = 20
    loops: int = 100_000
    learning_rate: float = 5.0e-4
    holdout_fraction: float = 0.25
    loop_unit: str = "epoch"            # "epoch" or "sample"
    cluster_spread_deg: float = 5.0
    users: int = 20
    repetitions: int = 3


DEFAULT_GESTURE_TABLE: dict[str, str] = {
    "fist": "grasp_start",
    "palm": "release",
    "ok": "advance",
    "thumb_up": "arm_move:0,0,1",
    "index_up": "arm_move:0,0,-1",
    "gun": "arm_move:1,0,0",
    "call_me": "toggle_telemetry",
    "rock": "emergency_vent",
}


@dataclass
class TeleopConfig:
    safety_limit: float = 2.0           # on the [0, 4] estimate scale
    gesture_table: dict[str, str] = field(
        default_factory=lambda: dict(DEFAULT_GESTURE_TABLE))
    cv_interval_ticks: int = 1          # run the camera pipeline every N ticks
    arm_step_m: float = 0.005           # arm displacement per ArmMove tick


@dataclass
class ServeConfig:
    host: str = "127.0.0.1"
    port: int = 8612
    tick_rate_hz: float = 100.0
    telemetry_divisor: int = 1          # broadcast every N ticks
    frame_divisor: int = 10             # attach a frame every N telemetry messages
    frame_scale: int = 2                # subsample wire frames by this factor
    model_path: str | None = None       # pre-trained gesture model; None = quick-train
    quick_train_loops: int = 2000


@dataclass
class AppConfig:
    gripper: GripperConfig = field(default_factory=GripperConfig)
    targets: TargetsConfig = field(default_factory=TargetsConfig)
    scene: SceneConfig = field(default_factory=SceneConfig)
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    gesture_train: GestureTrainConfig = field(default_factory=GestureTrainConfig)
    teleop: TeleopConfig = field(default_factory=TeleopConfig)
    serve: ServeConfig = field(default_factory=ServeConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))


def _merge_dataclass(obj, data: dict, where: str):
    known = {f.name: f for f in fields(obj)}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown config key {where}.{key}")
        current = getattr(obj, key)
        if is_dataclass(current) and isinstance(value, dict):
            _merge_dataclass(current, value, f"{where}.{key}")
        elif isinstance(current, tuple) and isinstance(value, (list, tuple)):
            setattr(obj, key, tuple(value))
        else:
            setattr(obj, key, value)
    return obj


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> AppConfig:
    """Build an AppConfig from defaults, an optional file and optional overrides."""
    cfg = AppConfig()
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        if p.suffix == ".toml":
            data = tomllib.loads(p.read_text())
        else:
            data = json.loads(p.read_text())
        if not isinstance(data, dict):
            raise ConfigError("config root must be a table/object")
        _merge_dataclass(cfg, data, "config")
    if overrides:
        _merge_dataclass(cfg, overrides, "overrides")
    _validate(cfg)
    return cfg


def _validate(cfg: AppConfig) -> None:
    if cfg.decode.hue_low == cfg.decode.hue_high:
        raise ConfigError("decode.hue_low and decode.hue_high must differ")
    if not 0.0 < cfg.teleop.safety_limit <= 4.0:
        raise ConfigError("teleop.safety_limit must lie in (0, 4]")
    if cfg.gripper.control_rate_hz <= 0:
        raise ConfigError("gripper.control_rate_hz must be positive")
    for name in ("rigid", "soft"):
        tgt = getattr(cfg.targets, name)
        if tgt.stiffness_n_per_m <= 0 or tgt.radius_m <= 0:
            raise ConfigError(f"targets.{name}: stiffness and radius must be positive")
        if not 0.0 <= tgt.occlusion_factor <= 1.0:
            raise ConfigError(f"targets.{name}: occlusion_factor must lie in [0, 1]")
    if cfg.targets.rigid.stiffness_n_per_m < cfg.targets.rigid_stiffness_threshold:
        raise ConfigError("targets.rigid stiffness below the rigid threshold")
    if cfg.targets.soft.stiffness_n_per_m >= cfg.targets.rigid_stiffness_threshold:
        raise ConfigError("targets.soft stiffness at or above the rigid threshold")
