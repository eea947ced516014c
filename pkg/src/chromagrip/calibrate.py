"""One-time calibration scripts behind the shipped config defaults.

``calibrate_decoder`` renders zero-register and full-register frames and
reads the camera hue back through the measurement pipeline itself; the two
hues become the decode interval.  ``calibrate_soft_stiffness`` fits the
soft target's spring constant so its mean hold force lands at the desired
fraction of the rigid target's (the contact law is linear in stiffness, so
one probe episode pins the scale factor).
"""

from __future__ import annotations

from . import cvforce, framegen, gripsim
from .config import AppConfig
from .errors import CalibrationError
from .gripsim import GraspTarget


def measure_blob_hue(led_hue: int, config: AppConfig) -> float:
    spec = framegen.SceneSpec.from_config(config.scene, led_hue,
                                          occlusion_factor=0.0, noise_amplitude=0)
    img = framegen.render(spec, seed=0)
    gray = cvforce.to_grayscale(img)
    _, mask, degenerate = cvforce.otsu_threshold(gray)
    if degenerate:
        raise CalibrationError("calibration frame degenerated to a single level")
    contour = cvforce.filter_and_measure(
        cvforce.extract_contours(mask), img,
        min_area=config.decode.min_contour_area)
    if contour is None:
        raise CalibrationError("calibration blob did not survive the area filter")
    return contour.mean_camera_hue


def calibrate_decoder(config: AppConfig) -> tuple[float, float]:
    """Camera hues of the zero-force and full-force LED states."""
    hue_low = measure_blob_hue(45, config)    # all registers at 0
    hue_high = measure_blob_hue(210, config)  # all registers at 4096
    if hue_low == hue_high:
        raise CalibrationError("endpoint hues coincide; decoder cannot invert")
    return hue_low, hue_high


def calibrate_soft_stiffness(config: AppConfig, force_fraction: float = 0.46,
                             hold_duration: float = 5.0) -> float:
    """Soft-target stiffness whose mean hold force is ``force_fraction``
    of the rigid target's."""
    if not 0.0 < force_fraction < 1.0:
        raise CalibrationError("force_fraction must lie in (0, 1)")
    rigid = gripsim.default_target("rigid", config.targets)
    rigid_mean = gripsim.run_grasp_episode(
        rigid, hold_duration, config.gripper).mean_hold_force()
    if rigid_mean <= 0.0:
        raise CalibrationError("rigid episode produced no hold force")

    probe_stiffness = config.targets.rigid_stiffness_threshold / 2.0
    probe = GraspTarget(probe_stiffness, config.targets.soft.radius_m, "soft",
                        config.targets.soft.occlusion_factor)
    probe_mean = gripsim.run_grasp_episode(
        probe, hold_duration, config.gripper).mean_hold_force()
    if probe_mean <= 0.0:
        raise CalibrationError("probe episode produced no hold force; "
                               "soft target never contacts the fingers")

    stiffness = force_fraction * rigid_mean * probe_stiffness / probe_mean
    if stiffness >= config.targets.rigid_stiffness_threshold:
        raise CalibrationError(
            "calibrated soft stiffness crosses the rigid threshold; "
            "lower the force fraction or raise the threshold")
    return stiffness
