"""Display renders of polar frames. Normalized for viewing only, never for metrics."""

from __future__ import annotations

import math
from pathlib import Path

import cv2
import numpy as np

from radarcs.errors import SceneIOError


def render_polar(data: np.ndarray, range_resolution_m: float, display_range_m: float = 62.625) -> np.ndarray:
    """8-bit polar image cropped to ``display_range_m`` and scaled by its own maximum."""
    cols = min(data.shape[1], max(1, math.ceil(display_range_m / range_resolution_m - 1e-9)))
    view = np.asarray(data[:, :cols], dtype=np.float64)
    peak = float(view.max()) if view.size else 0.0
    if peak <= 0:
        return np.zeros(view.shape, dtype=np.uint8)
    return np.clip(np.rint(view / peak * 255.0), 0, 255).astype(np.uint8)


def render_cartesian(polar: np.ndarray) -> np.ndarray:
    """Bird's-eye view of an 8-bit polar render, forward (azimuth 0) pointing up."""
    radius = polar.shape[1]
    flags = cv2.WARP_INVERSE_MAP | cv2.WARP_POLAR_LINEAR | cv2.INTER_LINEAR
    image = cv2.warpPolar(polar, (2 * radius, 2 * radius), (radius, radius), radius, flags)
    return cv2.rotate(image, cv2.ROTATE_90_COUNTERCLOCKWISE)


def write_png(path: Path, image: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), image):
        raise SceneIOError(f"could not write image: {path}")


def export_frame(
    out_stem: Path,
    data: np.ndarray,
    range_resolution_m: float,
    display_range_m: float = 62.625,
    cartesian: bool = False,
) -> list[Path]:
    """Write ``<stem>_polar.png`` and optionally ``<stem>_cart.png``."""
    polar = render_polar(data, range_resolution_m, display_range_m)
    written = [out_stem.with_name(out_stem.name + "_polar.png")]
    write_png(written[0], polar)
    if cartesian:
        written.append(out_stem.with_name(out_stem.name + "_cart.png"))
        write_png(written[1], render_cartesian(polar))
    return written
