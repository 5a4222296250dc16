"""Scene files: frames, manifests, detections, truth, plans, reports and the Oxford importer."""

from __future__ import annotations

import json
from pathlib import Path
from typing import TypeVar

import cv2
import numpy as np
from pydantic import BaseModel

from radarcs.errors import SceneIOError
from radarcs.frame import DEFAULT_RANGE_RESOLUTION_M, PolarFrame
from radarcs.models import (
    DetectionSet,
    FrameEntry,
    FrameReport,
    FrameSidecar,
    SamplingPlan,
    SceneManifest,
    SceneTruth,
)

MANIFEST_NAME = "manifest.json"

_U16_MAX = 65535
_OXFORD_META_COLUMNS = 11  # 8-byte timestamp, 2-byte azimuth, 1-byte valid flag

_M = TypeVar("_M", bound=BaseModel)


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def _read_model(path: Path, model: type[_M]) -> _M:
    try:
        raw = path.read_text()
    except FileNotFoundError as exc:
        raise SceneIOError(f"file not found: {path}") from exc
    return model.model_validate_json(raw)


def _write_model(path: Path, obj: BaseModel) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(obj.model_dump_json(indent=2) + "\n")


# -- frames ---------------------------------------------------------------


def write_frame(path: Path, frame: PolarFrame) -> None:
    """16-bit grayscale PNG plus a JSON sidecar carrying the value scale."""
    peak = float(frame.data.max())
    scale = peak / _U16_MAX if peak > 0 else 1.0
    pixels = np.clip(np.rint(frame.data / scale), 0, _U16_MAX).astype(np.uint16)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), pixels):
        raise SceneIOError(f"could not write frame image: {path}")
    sidecar = FrameSidecar(
        azimuth_bins=frame.azimuth_bins,
        range_bins=frame.range_bins,
        range_resolution_m=frame.range_resolution_m,
        azimuth_resolution_deg=frame.azimuth_resolution_deg,
        timestamp_us=frame.timestamp_us,
        scale=scale,
    )
    _write_model(_sidecar_path(path), sidecar)


def read_frame(path: Path) -> PolarFrame:
    if not path.is_file():
        raise SceneIOError(f"frame file not found: {path}")
    pixels = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if pixels is None or pixels.ndim != 2:
        raise SceneIOError(f"not a single-channel image: {path}")
    sidecar = _read_model(_sidecar_path(path), FrameSidecar)
    if pixels.shape != (sidecar.azimuth_bins, sidecar.range_bins):
        raise SceneIOError(
            f"{path} is {pixels.shape[0]}x{pixels.shape[1]} but its sidecar says "
            f"{sidecar.azimuth_bins}x{sidecar.range_bins}"
        )
    return PolarFrame(
        data=pixels.astype(np.float64) * sidecar.scale,
        range_resolution_m=sidecar.range_resolution_m,
        azimuth_resolution_deg=sidecar.azimuth_resolution_deg,
        timestamp_us=sidecar.timestamp_us,
    )


def save_array(path: Path, data: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, np.asarray(data, dtype=np.float64))


def load_array(path: Path) -> np.ndarray:
    try:
        return np.load(path)
    except FileNotFoundError as exc:
        raise SceneIOError(f"array file not found: {path}") from exc


# -- manifest, detections, truth ------------------------------------------


def load_manifest(path: Path) -> SceneManifest:
    """Load a manifest; a directory means its manifest.json."""
    if path.is_dir():
        path = path / MANIFEST_NAME
    manifest = _read_model(path, SceneManifest)
    manifest.root = path.parent
    return manifest


def write_manifest(path: Path, manifest: SceneManifest) -> None:
    _write_model(path, manifest)


def read_detections(path: Path) -> list[DetectionSet]:
    """JSON-lines, one DetectionSet per camera image."""
    try:
        lines = path.read_text().splitlines()
    except FileNotFoundError as exc:
        raise SceneIOError(f"detections file not found: {path}") from exc
    return [DetectionSet.model_validate_json(line) for line in lines if line.strip()]


def write_detections(path: Path, detections: list[DetectionSet]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(d.model_dump_json(by_alias=True) + "\n" for d in detections))


def read_truth(path: Path) -> SceneTruth:
    return _read_model(path, SceneTruth)


def write_truth(path: Path, truth: SceneTruth) -> None:
    _write_model(path, truth)


# -- plans and reports ----------------------------------------------------


def write_plan(path: Path, plan: SamplingPlan) -> None:
    _write_model(path, plan)


def read_plan(path: Path) -> SamplingPlan:
    return _read_model(path, SamplingPlan)


def write_report(path: Path, report: FrameReport) -> None:
    _write_model(path, report)


def read_report(path: Path) -> FrameReport:
    return _read_model(path, FrameReport)


def write_timings(path: Path, timings: list[dict[str, float]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(timings, indent=2) + "\n")


# -- Oxford Radar RobotCar ------------------------------------------------


def read_oxford_scan(path: Path, block_rng: int = 100) -> PolarFrame:
    """Decode one Oxford polar scan PNG.

    Each row holds an 8-byte timestamp, a 2-byte encoder azimuth, a valid flag
    and then uint8 power bins. Power is scaled to [0, 1] and range is cropped
    to a multiple of ``block_rng``. The frame timestamp comes from the file name.
    """
    raw = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if raw is None:
        raise SceneIOError(f"could not read Oxford scan: {path}")
    if raw.shape[1] <= _OXFORD_META_COLUMNS + block_rng:
        raise SceneIOError(f"{path} has too few range bins for blocks of {block_rng}")
    try:
        timestamp_us = int(path.stem)
    except ValueError as exc:
        raise SceneIOError(f"Oxford scan name is not a timestamp: {path.name}") from exc

    power = raw[:, _OXFORD_META_COLUMNS:].astype(np.float64) / 255.0
    usable = (power.shape[1] // block_rng) * block_rng
    return PolarFrame(
        data=power[:, :usable],
        range_resolution_m=DEFAULT_RANGE_RESOLUTION_M,
        azimuth_resolution_deg=360.0 / raw.shape[0],
        timestamp_us=timestamp_us,
    )


def import_oxford(src: Path, out: Path, block_rng: int = 100) -> SceneManifest:
    """Convert a directory of Oxford scans into a scene without detections."""
    scans = sorted(src.glob("*.png"), key=lambda p: p.stem)
    if not scans:
        raise SceneIOError(f"no Oxford scans (*.png) in {src}")
    entries = []
    for i, scan in enumerate(scans):
        frame = read_oxford_scan(scan, block_rng=block_rng)
        rel = f"frames/{i:06d}.png"
        write_frame(out / rel, frame)
        entries.append(FrameEntry(path=rel, timestamp_us=frame.timestamp_us))
    manifest = SceneManifest(frames=entries, root=out)
    write_manifest(out / MANIFEST_NAME, manifest)
    return manifest
