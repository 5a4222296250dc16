"""Polar radar frame, block partition and range geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from radarcs.errors import ConfigurationError, DimensionError, ParameterError
from radarcs.models import BlockGrid, BlockRef

DEFAULT_RANGE_RESOLUTION_M = 0.0438


@dataclass(frozen=True, eq=False)
class PolarFrame:
    """Nonnegative power returns, azimuth rows x range columns."""

    data: np.ndarray
    range_resolution_m: float = DEFAULT_RANGE_RESOLUTION_M
    azimuth_resolution_deg: float | None = None
    timestamp_us: int = 0
    azimuth_bins: int = field(init=False)
    range_bins: int = field(init=False)

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 2 or data.size == 0:
            raise DimensionError(f"frame data must be a non-empty 2D array, got shape {data.shape}")
        if not np.all(np.isfinite(data)) or np.any(data < 0):
            raise ParameterError("frame values must be finite and >= 0")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "azimuth_bins", data.shape[0])
        object.__setattr__(self, "range_bins", data.shape[1])
        az_res = self.azimuth_resolution_deg
        if az_res is None:
            az_res = 360.0 / data.shape[0]
            object.__setattr__(self, "azimuth_resolution_deg", az_res)
        if abs(data.shape[0] * az_res - 360.0) > 1e-6:
            raise ConfigurationError(
                f"{data.shape[0]} azimuth bins x {az_res} deg does not cover 360 deg"
            )
        if self.range_resolution_m <= 0:
            raise ParameterError("range_resolution_m must be positive")

    @property
    def dims(self) -> tuple[int, int]:
        return self.azimuth_bins, self.range_bins

    @property
    def max_range_m(self) -> float:
        return self.range_bins * self.range_resolution_m

    def with_data(self, data: np.ndarray) -> PolarFrame:
        """Same metadata, new values."""
        return PolarFrame(
            data=data,
            range_resolution_m=self.range_resolution_m,
            azimuth_resolution_deg=self.azimuth_resolution_deg,
            timestamp_us=self.timestamp_us,
        )


def partition(frame_dims: tuple[int, int], block_dims: tuple[int, int]) -> BlockGrid:
    """Split (azimuth_bins, range_bins) into equal blocks of (block_az, block_rng)."""
    for axis, total, size in zip(("azimuth", "range"), frame_dims, block_dims):
        if size <= 0 or total <= 0:
            raise ConfigurationError(f"{axis} dims must be positive, got frame {total} / block {size}")
        if total % size:
            raise ConfigurationError(
                f"{axis} block size {size} does not divide {total} {axis} bins"
            )
    return BlockGrid(
        az_blocks=frame_dims[0] // block_dims[0],
        rng_blocks=frame_dims[1] // block_dims[1],
        block_az=block_dims[0],
        block_rng=block_dims[1],
    )


def check_ref(grid: BlockGrid, ref: BlockRef) -> None:
    if not grid.contains(ref):
        raise IndexError(
            f"block ({ref.az_idx}, {ref.rng_idx}) outside {grid.az_blocks}x{grid.rng_blocks} grid"
        )


def block_of(grid: BlockGrid, azimuth_bin: int, range_bin: int) -> BlockRef:
    if not (0 <= azimuth_bin < grid.azimuth_bins and 0 <= range_bin < grid.range_bins):
        raise IndexError(
            f"bin ({azimuth_bin}, {range_bin}) outside {grid.azimuth_bins}x{grid.range_bins} frame"
        )
    return BlockRef(az_idx=azimuth_bin // grid.block_az, rng_idx=range_bin // grid.block_rng)


def _block_slices(grid: BlockGrid, ref: BlockRef) -> tuple[slice, slice]:
    check_ref(grid, ref)
    a0 = ref.az_idx * grid.block_az
    r0 = ref.rng_idx * grid.block_rng
    return slice(a0, a0 + grid.block_az), slice(r0, r0 + grid.block_rng)


def _check_frame(data: np.ndarray, grid: BlockGrid) -> None:
    if data.shape != (grid.azimuth_bins, grid.range_bins):
        raise DimensionError(
            f"frame shape {data.shape} does not match grid "
            f"{grid.azimuth_bins}x{grid.range_bins}"
        )


def extract_block(frame: PolarFrame, grid: BlockGrid, ref: BlockRef) -> np.ndarray:
    """Azimuth-major vectorization of one block."""
    _check_frame(frame.data, grid)
    rows, cols = _block_slices(grid, ref)
    return frame.data[rows, cols].ravel().copy()


def insert_block(canvas: np.ndarray, grid: BlockGrid, ref: BlockRef, block: np.ndarray) -> None:
    """Write a vectorized block back into a mutable (azimuth_bins, range_bins) array."""
    _check_frame(canvas, grid)
    if block.size != grid.block_size:
        raise DimensionError(f"block has {block.size} values, expected {grid.block_size}")
    rows, cols = _block_slices(grid, ref)
    canvas[rows, cols] = np.reshape(block, (grid.block_az, grid.block_rng))


def block_view(data: np.ndarray, grid: BlockGrid) -> np.ndarray:
    """(az_blocks, rng_blocks, block_az, block_rng) view of a frame array."""
    _check_frame(data, grid)
    return data.reshape(grid.az_blocks, grid.block_az, grid.rng_blocks, grid.block_rng).swapaxes(1, 2)


def range_block_span_m(grid: BlockGrid, resolution_m: float, n_blocks: int) -> float:
    if not 0 <= n_blocks <= grid.rng_blocks:
        raise ParameterError(f"n_blocks must be within [0, {grid.rng_blocks}], got {n_blocks}")
    return n_blocks * grid.block_rng * resolution_m


def range_to_bin(range_m: float, resolution_m: float) -> int:
    return int(math.floor(range_m / resolution_m))
