"""Sensor-register to LED-hue encoding.

The one-byte LED hue carries two signals at once: the maximum of the three
force-register readings and the mean of the three flex-register readings,
each mapped affinely from [0, 4096] onto the usable hue band [45, 210]
(orange through purple; the band avoids wheel wrap-around so the decoder
sees a monotone color ramp).  The transmitted hue is the rounded average
of the two components.
"""

from __future__ import annotations

import math

from dataclasses import dataclass

from .errors import ValidationError
from .gripsim import REGISTER_MAX, SensorFrame

HUE_MIN = 45.0
HUE_MAX = 210.0
HUE_SPAN = HUE_MAX - HUE_MIN
FORCE_SCALE_MAX = 4.0


@dataclass(frozen=True)
class HueCommand:
    hue: int            # byte actually sent to the LED
    hue_fsr: float      # force component before averaging
    hue_fsl: float      # flex component before averaging

    def __post_init__(self):
        if not HUE_MIN <= self.hue <= HUE_MAX:
            raise ValidationError("hue outside the [45, 210] band")
        if not (HUE_MIN <= self.hue_fsr <= HUE_MAX
                and HUE_MIN <= self.hue_fsl <= HUE_MAX):
            raise ValidationError("hue components outside the [45, 210] band")


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def map_register_to_hue(r: float) -> float:
    """Affine [0, 4096] -> [45, 210]; rejects out-of-range registers."""
    if not 0 <= r <= REGISTER_MAX:
        raise ValidationError(f"register {r} outside [0, {REGISTER_MAX}]")
    return HUE_MIN + r * HUE_SPAN / REGISTER_MAX


def encode_components(frame: SensorFrame) -> tuple[float, float, float]:
    """Return (hue_fsr, hue_fsl, hue_real) without byte rounding."""
    hue_fsr = map_register_to_hue(max(frame.fsr_registers))
    # Averaging in register space equals averaging in hue space (affine map);
    # one conversion instead of three.
    hue_fsl = map_register_to_hue(sum(frame.fsl_registers) / 3.0)
    return hue_fsr, hue_fsl, (hue_fsr + hue_fsl) / 2.0


def encode(frame: SensorFrame) -> HueCommand:
    hue_fsr, hue_fsl, hue_real = encode_components(frame)
    return HueCommand(round_half_up(hue_real), hue_fsr, hue_fsl)


def scale_force_from_hue(hue: float) -> float:
    """Force on the [0, 4] telemetry scale that a given LED hue encodes.

    This is the forward definition the camera-side decoder inverts; it is
    the ground truth against which round-trip estimates are scored.
    """
    return FORCE_SCALE_MAX * (hue - HUE_MIN) / HUE_SPAN
