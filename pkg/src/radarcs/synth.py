"""Synthetic scenes: noisy polar frames with moving blob targets and matching camera boxes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from radarcs.errors import ParameterError
from radarcs.frame import DEFAULT_RANGE_RESOLUTION_M, PolarFrame
from radarcs.guidance import azimuth_to_pixel
from radarcs.models import (
    BlockGrid,
    CameraModel,
    DetectionBox,
    DetectionSet,
    FrameEntry,
    SceneManifest,
    SceneTruth,
    TargetSpec,
    TargetTruth,
    TimingConfig,
)
from radarcs.scene_io import MANIFEST_NAME, write_detections, write_frame, write_manifest, write_truth
from radarcs.sensing import derive_seed

# Radial motion per radar frame (m).
MOTION_PRESETS: dict[str, float] = {
    "static": 0.0,
    "urban": 4.25,
    "freeway": 7.2,
}

DETECTIONS_NAME = "detections.jsonl"
TRUTH_NAME = "truth.json"

_NOISE_PURPOSE = 1
_MIN_BOX_PX = 4.0
_BOX_SCORE = 0.9


@dataclass(frozen=True)
class SyntheticScene:
    manifest: SceneManifest
    frames: list[PolarFrame]
    detections: list[DetectionSet]
    truth: SceneTruth


def _position(target: TargetSpec, frame_pos: float) -> tuple[float, float]:
    """(azimuth deg, range m) at a possibly fractional frame index."""
    az = (target.azimuth_deg + target.azimuth_rate_deg * frame_pos) % 360.0
    return az, target.range_m + target.range_rate_m * frame_pos


def _render(
    targets: list[TargetSpec],
    frame_idx: int,
    grid: BlockGrid,
    range_resolution_m: float,
    noise_floor: float,
    seed: int,
) -> np.ndarray:
    n_az, n_rng = grid.azimuth_bins, grid.range_bins
    az_res = 360.0 / n_az
    rng = np.random.default_rng(derive_seed(seed, _NOISE_PURPOSE, frame_idx))
    data = rng.exponential(noise_floor, size=(n_az, n_rng)) if noise_floor > 0 else np.zeros((n_az, n_rng))

    az_axis = np.arange(n_az, dtype=np.float64)[:, None]
    rng_axis = np.arange(n_rng, dtype=np.float64)[None, :]
    for target in targets:
        az, range_m = _position(target, frame_idx)
        sigma = target.extent_bins / 2
        d_az = (az_axis - az / az_res + n_az / 2) % n_az - n_az / 2
        d_rng = rng_axis - range_m / range_resolution_m
        data += target.amplitude * np.exp(-(d_az**2 + d_rng**2) / (2 * sigma**2))
    return data


def _camera_times_us(rate_hz: float, last_us: int) -> list[int]:
    count = int(math.floor(last_us * rate_hz / 1e6)) + 1
    return [int(round(j * 1e6 / rate_hz)) for j in range(count)]


def _boxes(
    cam: CameraModel,
    targets: list[TargetSpec],
    frame_pos: float,
    az_res: float,
) -> list[DetectionBox]:
    boxes = []
    width, height = cam.image_width_px, cam.image_height_px
    for target in targets:
        az, _ = _position(target, frame_pos)
        x = azimuth_to_pixel(cam, az)
        if x is None:
            continue
        half = max(_MIN_BOX_PX, target.extent_bins * az_res / cam.hfov_deg * width) / 2
        x1, x2 = max(0.0, x - half), min(float(width), x + half)
        if x2 <= x1:
            continue
        boxes.append(
            DetectionBox(
                x1=x1, y1=0.4 * height, x2=x2, y2=0.6 * height, label=target.label, score=_BOX_SCORE
            )
        )
    return boxes


def synth_scene(
    targets: list[TargetSpec],
    noise_floor: float = 1.0,
    n_frames: int = 5,
    seed: int = 0,
    grid: BlockGrid | None = None,
    range_resolution_m: float = DEFAULT_RANGE_RESOLUTION_M,
    timing: TimingConfig | None = None,
    cameras: list[CameraModel] | None = None,
) -> SyntheticScene:
    """Build frames, per-image camera detections and target truth.

    Radar frame k is acquired at (k + 1) radar periods; cameras run from t=0 at
    their own rates. Targets move by their per-frame rates and camera boxes
    are placed by inverting the camera azimuth mapping, so targets in the
    blind spots produce no boxes.
    """
    grid = grid or BlockGrid()
    timing = timing or TimingConfig()
    cameras = cameras or [CameraModel.front(), CameraModel.rear()]
    if n_frames < 1:
        raise ParameterError("n_frames must be >= 1")
    if noise_floor < 0:
        raise ParameterError("noise_floor must be >= 0")

    max_range = grid.range_bins * range_resolution_m
    for i, target in enumerate(targets):
        for k in range(n_frames):
            _, range_m = _position(target, k)
            if not 0 <= range_m < max_range:
                raise ParameterError(
                    f"target {i} at {range_m:.2f} m in frame {k} is outside [0, {max_range:.2f}) m"
                )

    az_res = 360.0 / grid.azimuth_bins
    period_us = int(round(timing.radar_period_s * 1e6))
    frames: list[PolarFrame] = []
    truth = SceneTruth()
    for k in range(n_frames):
        data = _render(targets, k, grid, range_resolution_m, noise_floor, seed)
        frames.append(
            PolarFrame(data=data, range_resolution_m=range_resolution_m, timestamp_us=(k + 1) * period_us)
        )
        row = []
        for target in targets:
            az, range_m = _position(target, k)
            row.append(
                TargetTruth(
                    azimuth_bin=int(round(az / az_res)) % grid.azimuth_bins,
                    range_bin=min(int(round(range_m / range_resolution_m)), grid.range_bins - 1),
                    label=target.label,
                )
            )
        truth.frames.append(row)

    detections: list[DetectionSet] = []
    last_us = frames[-1].timestamp_us
    for cam in cameras:
        for t_us in _camera_times_us(timing.rate_hz(cam.id), last_us):
            frame_pos = t_us / period_us - 1
            detections.append(
                DetectionSet(
                    timestamp_us=t_us,
                    camera=cam.id,
                    image_width=cam.image_width_px,
                    image_height=cam.image_height_px,
                    boxes=_boxes(cam, targets, frame_pos, az_res),
                )
            )
    detections.sort(key=lambda d: (d.timestamp_us, d.camera.value))

    overrides: dict[str, object] = {}
    if grid != BlockGrid():
        overrides = {
            "block": [grid.block_az, grid.block_rng],
            "grid": [grid.az_blocks, grid.rng_blocks],
            "exact_budget": True,
        }
    manifest = SceneManifest(
        frames=[FrameEntry(path=f"frames/{k:06d}.png", timestamp_us=f.timestamp_us) for k, f in enumerate(frames)],
        detections_path=DETECTIONS_NAME,
        cameras=cameras,
        overrides=overrides,
        truth_path=TRUTH_NAME,
    )
    return SyntheticScene(manifest=manifest, frames=frames, detections=detections, truth=truth)


def write_scene(out: Path, scene: SyntheticScene) -> SceneManifest:
    """Write frames, detections, truth and manifest under ``out``."""
    for entry, frame in zip(scene.manifest.frames, scene.frames):
        write_frame(out / entry.path, frame)
    write_detections(out / DETECTIONS_NAME, scene.detections)
    write_truth(out / TRUTH_NAME, scene.truth)
    manifest = scene.manifest.model_copy(update={"root": out})
    write_manifest(out / MANIFEST_NAME, manifest)
    return manifest
