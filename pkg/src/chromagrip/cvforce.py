"""Camera-side force estimation.

Pipeline: grayscale -> Otsu threshold -> 8-connected components -> area
filter (> 5000 px) -> circular mean of per-pixel camera hues over the
largest surviving component -> affine hue-to-force inverse onto [0, 4].

Otsu's threshold is computed with exact integer arithmetic (between-class
variance compared by cross-multiplication), so it agrees bin-for-bin with
a brute-force within-class-variance search including tie-breaks; floating
point never reorders near-ties.

Camera hues follow the capture-side convention of half-degree units in
[0, 179], quantized per pixel; aggregation uses the circular mean because
hue is angular and an arithmetic mean would bias near the wheel seam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .config import DecodeConfig
from .errors import ConfigError, ValidationError

CAMERA_HUE_MAX = 179
FORCE_SCALE_MAX = 4.0
MIN_CONTOUR_AREA = 5000


@dataclass(frozen=True)
class BinaryMask:
    bits: np.ndarray  # bool, HxW

    def __post_init__(self):
        if self.bits.ndim != 2 or self.bits.dtype != np.bool_:
            raise ValidationError("mask must be a 2-D boolean array")

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def foreground_count(self) -> int:
        return int(self.bits.sum())


@dataclass
class Contour:
    """One connected foreground region; hue is filled in when measured."""

    pixel_rows: np.ndarray
    pixel_cols: np.ndarray
    area: int
    mean_camera_hue: float | None = None


@dataclass(frozen=True)
class ForceEstimate:
    force: float
    camera_hue: float
    contour_area: int
    valid: bool

    INVALID = None  # set below

    def __post_init__(self):
        if self.valid and not 0.0 <= self.force <= FORCE_SCALE_MAX:
            raise ValidationError("valid estimate outside the [0, 4] force scale")


ForceEstimate.INVALID = ForceEstimate(0.0, 0.0, 0, False)


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """Luma grayscale (0.299/0.587/0.114), rounded half-up to uint8."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValidationError("expected an HxWx3 image")
    rgb = image.astype(np.float64)
    luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.floor(luma + 0.5).astype(np.uint8)


def otsu_threshold(gray: np.ndarray) -> tuple[int, BinaryMask, bool]:
    """Threshold maximizing between-class variance; foreground is > threshold.

    Returns (threshold, mask, degenerate).  A single-level image is
    degenerate: the threshold is that level and the mask is empty.
    Ties resolve to the lowest threshold.
    """
    if gray.size == 0:
        raise ValidationError("empty image")
    if gray.ndim != 2:
        raise ValidationError("expected a 2-D grayscale image")

    hist = np.bincount(gray.ravel(), minlength=256)
    levels = np.nonzero(hist)[0]
    if len(levels) == 1:
        level = int(levels[0])
        return level, BinaryMask(np.zeros_like(gray, dtype=bool)), True

    counts = [int(c) for c in hist]
    total_n = int(gray.size)
    total_s = int(np.dot(hist, np.arange(256, dtype=np.int64)))

    # sigma_b^2(t) = (s0*N - S*c0)^2 / (N^2 * c0 * c1); compare candidates by
    # cross-multiplying the integer numerators and denominators.
    best_t = 0
    best_num = -1
    best_den = 1
    c0 = 0
    s0 = 0
    for t in range(256):
        c0 += counts[t]
        s0 += counts[t] * t
        c1 = total_n - c0
        if c0 == 0 or c1 == 0:
            continue
        num = (s0 * total_n - total_s * c0) ** 2
        den = c0 * c1
        if num * best_den > best_num * den:
            best_num = num
            best_den = den
            best_t = t

    mask = BinaryMask(gray > best_t)
    return best_t, mask, False


def extract_contours(mask: BinaryMask) -> list[Contour]:
    """8-connected foreground components with exact pixel areas."""
    labels, count = ndimage.label(mask.bits, structure=np.ones((3, 3), dtype=int))
    contours = []
    for idx in range(1, count + 1):
        rows, cols = np.nonzero(labels == idx)
        contours.append(Contour(rows, cols, area=len(rows)))
    return contours


def camera_hues(image: np.ndarray) -> np.ndarray:
    """Per-pixel camera hue in half-degree units, quantized to [0, 179].

    Achromatic pixels get hue 0, matching the usual capture convention.
    """
    rgb = image.astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = np.maximum(np.maximum(r, g), b)
    mn = np.minimum(np.minimum(r, g), b)
    delta = mx - mn
    safe = np.where(delta == 0, 1.0, delta)
    h_deg = np.zeros_like(r)
    h_deg = np.where(mx == r, 60.0 * ((g - b) / safe), h_deg)
    h_deg = np.where((mx == g) & (mx != r), 60.0 * (2.0 + (b - r) / safe), h_deg)
    h_deg = np.where((mx == b) & (mx != r) & (mx != g),
                     60.0 * (4.0 + (r - g) / safe), h_deg)
    h_deg = np.where(delta == 0, 0.0, np.mod(h_deg, 360.0))
    hue = np.floor(h_deg / 2.0 + 0.5)
    hue[hue > CAMERA_HUE_MAX] = 0.0  # wrap 180 back to the seam
    return hue


def circular_mean_hue(hues: np.ndarray) -> float:
    """Circular mean of camera hues, back on the [0, 179] scale."""
    angles = np.asarray(hues, dtype=np.float64) * (2.0 * math.pi / 180.0)
    s = float(np.mean(np.sin(angles)))
    c = float(np.mean(np.cos(angles)))
    mean_deg = math.degrees(math.atan2(s, c)) % 360.0
    return min(mean_deg / 2.0, float(CAMERA_HUE_MAX))


def filter_and_measure(contours: list[Contour], image: np.ndarray,
                       min_area: int = MIN_CONTOUR_AREA) -> Contour | None:
    """Largest contour with area strictly above ``min_area``, hue-measured."""
    survivors = [c for c in contours if c.area > min_area]
    if not survivors:
        return None
    best = max(survivors, key=lambda c: c.area)
    hues = camera_hues(image[best.pixel_rows, best.pixel_cols])
    best.mean_camera_hue = circular_mean_hue(hues)
    return best


def hue_to_force(camera_hue: float, config: DecodeConfig) -> float:
    """Affine map from the calibrated hue interval onto [0, 4], clamped.

    The interval endpoints come from decoder calibration: hue_low is the
    camera hue of a zero-register frame, hue_high of a full-register frame.
    The map direction follows the endpoint ordering, so a camera whose hue
    runs opposite to the LED scale decodes just as well.
    """
    if not math.isfinite(camera_hue):
        raise ValidationError("camera hue must be finite")
    if config.hue_low == config.hue_high:
        raise ConfigError("decode interval endpoints must differ")
    f = FORCE_SCALE_MAX * (camera_hue - config.hue_low) / (config.hue_high - config.hue_low)
    return min(max(f, 0.0), FORCE_SCALE_MAX)


def estimate(image: np.ndarray, config: DecodeConfig | None = None) -> ForceEstimate:
    """Run the full pipeline on one frame; invalid when nothing survives."""
    config = config or DecodeConfig()
    gray = to_grayscale(image)
    _, mask, degenerate = otsu_threshold(gray)
    if degenerate:
        return ForceEstimate.INVALID
    contour = filter_and_measure(extract_contours(mask), image,
                                 min_area=config.min_contour_area)
    if contour is None:
        return ForceEstimate.INVALID
    force = hue_to_force(contour.mean_camera_hue, config)
    return ForceEstimate(force, contour.mean_camera_hue, contour.area, True)
