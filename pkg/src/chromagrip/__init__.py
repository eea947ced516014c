"""Soft-gripper teleoperation sandbox with LED color-coded force telemetry.

A simulated pneumatic three-finger gripper encodes its touch and flex
sensors into an LED hue; a synthetic camera watches the LED and a vision
pipeline decodes the applied force back out.  A glove-gesture classifier
drives a phase-gated teleoperation state machine around the loop, and a
WebSocket gateway exposes the whole thing to an operator dashboard.
"""

__version__ = "0.1.0"

from .config import AppConfig, load_config
from .cvforce import ForceEstimate, estimate
from .framegen import SceneSpec, byte_hue_to_rgb, render
from .gesturenet import GestureLabel, MlpModel
from .gripsim import GraspTarget, PneumaticState, SensorFrame, Valve
from .huecode import HueCommand, encode, map_register_to_hue
from .teleop import CatchLoop, Command, Phase, TeleopState, run_catch_scenario

__all__ = [
    "AppConfig", "load_config", "ForceEstimate", "estimate", "SceneSpec",
    "byte_hue_to_rgb", "render", "GestureLabel", "MlpModel", "GraspTarget",
    "PneumaticState", "SensorFrame", "Valve", "HueCommand", "encode",
    "map_register_to_hue", "CatchLoop", "Command", "Phase", "TeleopState",
    "run_catch_scenario", "__version__",
]
