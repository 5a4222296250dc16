"""Reconstruction quality: PSNR, MSE and CFAR detectability."""

from __future__ import annotations

import math
from collections.abc import Iterable

import numpy as np
from scipy import ndimage

from radarcs.errors import DimensionError, ParameterError
from radarcs.frame import block_view
from radarcs.guidance import cfar_detect
from radarcs.models import BlockGrid, BlockRef, CfarParams, RegionLabel, SamplingPlan


def _pair(reference: np.ndarray, recon: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ref = np.asarray(reference, dtype=np.float64)
    rec = np.asarray(recon, dtype=np.float64)
    if ref.shape != rec.shape:
        raise DimensionError(f"reference {ref.shape} and reconstruction {rec.shape} differ")
    return ref, rec


def mse(reference: np.ndarray, recon: np.ndarray) -> float:
    ref, rec = _pair(reference, recon)
    return float(np.mean((ref - rec) ** 2))


def _psnr_from_mse(err: float, peak: float) -> float:
    if err == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def _peak(reference: np.ndarray, peak: float | None) -> float:
    peak = float(np.max(reference)) if peak is None else float(peak)
    if peak <= 0:
        raise ParameterError(f"peak must be positive, got {peak}")
    return peak


def psnr(reference: np.ndarray, recon: np.ndarray, peak: float | None = None) -> float:
    """10 log10(peak^2 / MSE) in dB; +inf when the frames are identical."""
    ref, rec = _pair(reference, recon)
    err = mse(ref, rec)
    if err == 0:
        return math.inf
    return _psnr_from_mse(err, _peak(ref, peak))


def block_mse(reference: np.ndarray, recon: np.ndarray, grid: BlockGrid) -> np.ndarray:
    """(az_blocks, rng_blocks) array of per-block MSE."""
    ref, rec = _pair(reference, recon)
    return ((block_view(ref, grid) - block_view(rec, grid)) ** 2).mean(axis=(2, 3))


def _blocks_psnr(
    reference: np.ndarray,
    recon: np.ndarray,
    grid: BlockGrid,
    refs: Iterable[BlockRef],
    peak: float,
) -> float | None:
    refs = list(refs)
    if not refs:
        return None
    per_block = block_mse(reference, recon, grid)
    err = float(np.mean([per_block[r.az_idx, r.rng_idx] for r in refs]))
    return _psnr_from_mse(err, peak)


def region_psnr(
    reference: np.ndarray,
    recon: np.ndarray,
    plan: SamplingPlan,
    peak: float | None = None,
) -> dict[str, float]:
    """PSNR over the union of each region's blocks; regions with no blocks are omitted."""
    ref, rec = _pair(reference, recon)
    peak = _peak(ref, peak)
    out: dict[str, float] = {}
    for label in RegionLabel:
        value = _blocks_psnr(ref, rec, plan.grid, (b.ref for b in plan.blocks if b.region == label), peak)
        if value is not None:
            out[label.value] = value
    return out


def target_psnr(
    reference: np.ndarray,
    recon: np.ndarray,
    grid: BlockGrid,
    target_blocks: Iterable[BlockRef],
    peak: float | None = None,
) -> float | None:
    ref, rec = _pair(reference, recon)
    return _blocks_psnr(ref, rec, grid, target_blocks, _peak(ref, peak))


def _disk(radius: int) -> np.ndarray:
    yy, xx = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    return xx * xx + yy * yy <= radius * radius


def cfar_detectability(
    reference: np.ndarray,
    recon: np.ndarray,
    params: CfarParams | None = None,
    radius: int = 3,
) -> tuple[float | None, float | None]:
    """Precision and recall of CFAR on the reconstruction against CFAR on the reference.

    A detection matches when one from the other map lies within ``radius``
    bins. Empty denominators give None.
    """
    ref, rec = _pair(reference, recon)
    truth = cfar_detect(ref, params).mask
    found = cfar_detect(rec, params).mask
    if radius > 0:
        near_truth = ndimage.binary_dilation(truth, structure=_disk(radius))
        near_found = ndimage.binary_dilation(found, structure=_disk(radius))
    else:
        near_truth, near_found = truth, found
    n_found, n_truth = int(found.sum()), int(truth.sum())
    precision = float((found & near_truth).sum()) / n_found if n_found else None
    recall = float((truth & near_found).sum()) / n_truth if n_truth else None
    return precision, recall
