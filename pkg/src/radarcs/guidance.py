"""Camera and CFAR guidance: which azimuth blocks and which blocks deserve more samples."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np

from radarcs.errors import ParameterError
from radarcs.frame import PolarFrame, block_view
from radarcs.models import BlockGrid, BlockRef, CameraId, CameraModel, CfarParams, DetectionBox, DetectionSet

DEFAULT_CLASSES = frozenset({"person", "bicycle", "car", "truck"})


def _pixel_to_azimuth(cam: CameraModel, x: float) -> float:
    return cam.boresight_deg + cam.hfov_deg * (x / cam.image_width_px - 0.5)


def bbox_to_azimuth(cam: CameraModel, box: DetectionBox) -> float:
    """Radar azimuth in [0, 360) of the box's horizontal centre."""
    if box.x1 < 0 or box.x2 > cam.image_width_px or box.y1 < 0 or box.y2 > cam.image_height_px:
        raise ParameterError(
            f"box ({box.x1}, {box.y1}, {box.x2}, {box.y2}) outside "
            f"{cam.image_width_px}x{cam.image_height_px} {cam.id.value} image"
        )
    return _pixel_to_azimuth(cam, box.x_center) % 360.0


def azimuth_to_pixel(cam: CameraModel, azimuth_deg: float) -> float | None:
    """Inverse of the proportional mapping; None when the azimuth is outside the HFoV."""
    offset = (azimuth_deg - cam.boresight_deg + 180.0) % 360.0 - 180.0
    half = cam.hfov_deg / 2
    if not -half <= offset <= half:
        return None
    return (offset / cam.hfov_deg + 0.5) * cam.image_width_px


def azimuth_block(grid: BlockGrid, azimuth_deg: float) -> int:
    return int(math.floor((azimuth_deg % 360.0) / grid.azimuth_block_deg)) % grid.az_blocks


def _spanned_blocks(cam: CameraModel, box: DetectionBox, grid: BlockGrid) -> set[int]:
    width = grid.azimuth_block_deg
    lo = _pixel_to_azimuth(cam, box.x1)
    hi = _pixel_to_azimuth(cam, box.x2)
    first = math.floor(lo / width)
    last = math.floor(hi / width)
    if last > first and hi == last * width:
        last -= 1
    return {k % grid.az_blocks for k in range(first, last + 1)}


def important_azimuth_blocks(
    detections: Iterable[DetectionSet],
    cams: Mapping[CameraId, CameraModel],
    grid: BlockGrid,
    class_filter: Iterable[str] = DEFAULT_CLASSES,
    score_min: float = 0.5,
    spread: bool = False,
) -> set[int]:
    """Azimuth blocks containing at least one retained camera box.

    Boxes map through their x-centre only; with ``spread`` every block the
    box's horizontal extent touches is marked.
    """
    classes = set(class_filter)
    chosen: set[int] = set()
    for dset in detections:
        cam = cams.get(dset.camera)
        if cam is None:
            continue
        if (cam.image_width_px, cam.image_height_px) != (dset.image_width, dset.image_height):
            cam = cam.model_copy(
                update={"image_width_px": dset.image_width, "image_height_px": dset.image_height}
            )
        for box in dset.boxes:
            if box.label not in classes or box.score < score_min:
                continue
            if spread:
                chosen |= _spanned_blocks(cam, box, grid)
            else:
                chosen.add(azimuth_block(grid, bbox_to_azimuth(cam, box)))
    return chosen


def cfar_alpha(n_train: int, pfa: float) -> float:
    """CA-CFAR threshold multiplier for exponential noise."""
    return n_train * (pfa ** (-1.0 / n_train) - 1.0)


@dataclass(frozen=True, eq=False)
class CfarMap:
    """Detection mask over a polar frame."""

    mask: np.ndarray

    @property
    def n_hits(self) -> int:
        return int(self.mask.sum())

    def hit_counts(self, grid: BlockGrid) -> np.ndarray:
        """(az_blocks, rng_blocks) array of detections per block."""
        return block_view(self.mask, grid).sum(axis=(2, 3))

    def hits_by_block(self, grid: BlockGrid) -> dict[BlockRef, int]:
        counts = self.hit_counts(grid)
        return {
            BlockRef(az_idx=int(a), rng_idx=int(r)): int(counts[a, r])
            for a, r in zip(*np.nonzero(counts))
        }


def cfar_detect(frame: PolarFrame | np.ndarray, params: CfarParams | None = None) -> CfarMap:
    """Cell-averaging CFAR along range, independently per azimuth row.

    Cells whose two-sided training window would leave the frame fall back to
    the one-sided window on the side that fits.
    """
    params = params or CfarParams()
    data = frame.data if isinstance(frame, PolarFrame) else np.asarray(frame, dtype=np.float64)
    n = data.shape[1]
    t, g = params.train_cells, params.guard_cells
    if 2 * (t + g) + 1 > n:
        raise ParameterError(
            f"CFAR window of {2 * (t + g) + 1} cells does not fit {n} range bins"
        )

    csum = np.zeros((data.shape[0], n + 1))
    np.cumsum(data, axis=1, out=csum[:, 1:])
    idx = np.arange(n)
    left_ok = idx - g - t >= 0
    right_ok = idx + g + t <= n - 1

    left = np.zeros_like(data)
    li = idx[left_ok]
    left[:, left_ok] = csum[:, li - g] - csum[:, li - g - t]
    right = np.zeros_like(data)
    ri = idx[right_ok]
    right[:, right_ok] = csum[:, ri + g + t + 1] - csum[:, ri + g + 1]

    both = left_ok & right_ok
    noise = np.where(both, (left + right) / (2 * t), (left + right) / t)
    alpha = np.where(both, cfar_alpha(2 * t, params.pfa), cfar_alpha(t, params.pfa))
    return CfarMap(mask=data > alpha * noise)


def flagged_blocks(cfar_map: CfarMap, grid: BlockGrid, min_hits_per_block: int = 3) -> set[BlockRef]:
    """Blocks holding at least ``min_hits_per_block`` detections."""
    return {ref for ref, hits in cfar_map.hits_by_block(grid).items() if hits >= min_hits_per_block}
