"""Synthetic camera frames of the LED-lit gripper.

Renders a colored disc (the LED seen through the silicone finger) on a dark
background, with an optional occluding object rising over the lower part of
the disc and per-channel uniform sensor noise.  The byte-hue convention is
h * 360 / 256 degrees with the standard piecewise-linear HSV->RGB ramp;
everything downstream (decoder calibration, round-trip tests) is defined
against this renderer.

Occlusion has two effects, both mimicking a grasped object in front of the
LED: the covered part of the disc is lost outright, and a thin band of the
still-visible disc just above the occluder edge picks up a reflection tint.
The tint is what degrades hue decoding as occlusion grows; a bare area loss
would leave a uniform blob and hide the effect the camera sees in practice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SceneConfig
from .errors import ValidationError

LED_SATURATION = 255
LED_VALUE = 255


def hsv_degrees_to_rgb(h_deg: float, s: float, v: float) -> tuple[float, float, float]:
    """Piecewise-linear HSV (degrees, unit s/v) -> unit RGB."""
    h = (h_deg % 360.0) / 60.0
    c = v * s
    x = c * (1.0 - abs(h % 2.0 - 1.0))
    m = v - c
    sector = int(h)
    r, g, b = [(c, x, 0.0), (x, c, 0.0), (0.0, c, x),
               (0.0, x, c), (x, 0.0, c), (c, 0.0, x)][sector % 6]
    return r + m, g + m, b + m


def byte_hue_to_rgb(hue: int, saturation: int = LED_SATURATION,
                    value: int = LED_VALUE) -> tuple[int, int, int]:
    """LED color for byte-valued hue/saturation/value."""
    for name, val in (("hue", hue), ("saturation", saturation), ("value", value)):
        if not 0 <= val <= 255:
            raise ValidationError(f"{name} must be a byte, got {val}")
    r, g, b = hsv_degrees_to_rgb(hue * 360.0 / 256.0,
                                 saturation / 255.0, value / 255.0)
    return tuple(int(math.floor(ch * 255.0 + 0.5)) for ch in (r, g, b))


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    blob_center: tuple[int, int]        # (x, y) pixel coordinates
    blob_radius: int
    led_hue: int
    background_color: tuple[int, int, int] = (12, 12, 12)
    occluder_color: tuple[int, int, int] = (0, 0, 0)
    reflection_color: tuple[int, int, int] = (190, 170, 150)
    reflection_width: int = 8
    noise_amplitude: int = 0
    occlusion_factor: float = 0.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0 or self.blob_radius <= 0:
            raise ValidationError("image dimensions and blob radius must be positive")
        if not 45 <= self.led_hue <= 210:
            raise ValidationError("led_hue outside the [45, 210] band")
        if self.noise_amplitude < 0:
            raise ValidationError("noise_amplitude must be non-negative")
        if not 0.0 <= self.occlusion_factor <= 1.0:
            raise ValidationError("occlusion_factor must lie in [0, 1]")
        cx, cy = self.blob_center
        r = self.blob_radius
        if not (r <= cx <= self.width - 1 - r and r <= cy <= self.height - 1 - r):
            raise ValidationError("blob must lie fully inside the image")

    @classmethod
    def from_config(cls, sc: SceneConfig, led_hue: int,
                    occlusion_factor: float = 0.0,
                    noise_amplitude: int | None = None) -> "SceneSpec":
        return cls(width=sc.width, height=sc.height,
                   blob_center=tuple(sc.blob_center), blob_radius=sc.blob_radius,
                   led_hue=led_hue, background_color=tuple(sc.background_color),
                   occluder_color=tuple(sc.occluder_color),
                   reflection_color=tuple(sc.reflection_color),
                   reflection_width=sc.reflection_width,
                   noise_amplitude=(sc.noise_amplitude if noise_amplitude is None
                                    else noise_amplitude),
                   occlusion_factor=occlusion_factor)


def _segment_height(radius: float, area_fraction: float) -> float:
    """Height of the circular segment (from the bottom) holding the given
    fraction of the disc area, by bisection."""
    if area_fraction <= 0.0:
        return 0.0
    if area_fraction >= 1.0:
        return 2.0 * radius
    target = area_fraction * math.pi * radius * radius

    def seg_area(h: float) -> float:
        return (radius * radius * math.acos(1.0 - h / radius)
                - (radius - h) * math.sqrt(max(2.0 * radius * h - h * h, 0.0)))

    lo, hi = 0.0, 2.0 * radius
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if seg_area(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def render(spec: SceneSpec, seed: int = 0) -> np.ndarray:
    """Render the scene to an HxWx3 uint8 image, deterministic in the seed."""
    img = np.empty((spec.height, spec.width, 3), dtype=np.float64)
    img[:] = spec.background_color

    cx, cy = spec.blob_center
    r = spec.blob_radius
    yy, xx = np.mgrid[0:spec.height, 0:spec.width]
    disc = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
    img[disc] = byte_hue_to_rgb(spec.led_hue)

    if spec.occlusion_factor > 0.0:
        h = _segment_height(float(r), spec.occlusion_factor)
        y_top = cy + r - h  # occluder rises from the blob's lower edge
        in_x = (xx >= cx - r) & (xx <= cx + r)
        occluded = in_x & (yy >= y_top)
        img[occluded] = spec.occluder_color
        if spec.reflection_width > 0:
            fringe = disc & in_x & (yy >= y_top - spec.reflection_width) & (yy < y_top)
            img[fringe] = 0.5 * img[fringe] + 0.5 * np.asarray(
                spec.reflection_color, dtype=np.float64)

    img = np.floor(img + 0.5)
    if spec.noise_amplitude > 0:
        rng = np.random.default_rng(seed)
        amp = spec.noise_amplitude
        img += rng.integers(-amp, amp + 1, size=img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)
