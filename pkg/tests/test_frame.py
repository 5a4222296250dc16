import numpy as np
import pytest

from radarcs.errors import ConfigurationError, DimensionError, ParameterError
from radarcs.frame import (
    PolarFrame,
    block_of,
    block_view,
    extract_block,
    insert_block,
    partition,
    range_block_span_m,
    range_to_bin,
)
from radarcs.models import BlockGrid, BlockRef


def test_partition_default_frame() -> None:
    grid = partition((400, 3700), (50, 100))
    assert (grid.az_blocks, grid.rng_blocks) == (8, 37)
    assert grid == BlockGrid()


def test_partition_small_frame() -> None:
    grid = partition((80, 200), (10, 20))
    assert (grid.az_blocks, grid.rng_blocks) == (8, 10)


def test_partition_rejects_uneven_range() -> None:
    with pytest.raises(ConfigurationError, match="range"):
        partition((400, 3700), (50, 101))


def test_partition_rejects_uneven_azimuth() -> None:
    with pytest.raises(ConfigurationError, match="azimuth"):
        partition((400, 3700), (30, 100))


def test_block_of() -> None:
    grid = BlockGrid()
    assert block_of(grid, 0, 0) == BlockRef(az_idx=0, rng_idx=0)
    assert block_of(grid, 399, 3699) == BlockRef(az_idx=7, rng_idx=36)
    assert block_of(grid, 125, 1750) == BlockRef(az_idx=2, rng_idx=17)


def test_block_of_out_of_range() -> None:
    with pytest.raises(IndexError):
        block_of(BlockGrid(), 400, 0)
    with pytest.raises(IndexError):
        block_of(BlockGrid(), 0, -1)


def test_extract_insert_roundtrip() -> None:
    grid = partition((80, 200), (10, 20))
    rng = np.random.default_rng(3)
    for _ in range(100):
        data = rng.random((80, 200))
        frame = PolarFrame(data=data)
        canvas = np.zeros_like(data)
        for ref in grid.refs():
            insert_block(canvas, grid, ref, extract_block(frame, grid, ref))
        assert np.array_equal(canvas, frame.data)


def test_extract_block_is_azimuth_major() -> None:
    grid = partition((80, 200), (10, 20))
    data = np.arange(80 * 200, dtype=float).reshape(80, 200)
    vec = extract_block(PolarFrame(data=data), grid, BlockRef(az_idx=2, rng_idx=3))
    assert vec.size == 200
    assert np.array_equal(vec, data[20:30, 60:80].ravel())


def test_extract_constant_frame() -> None:
    grid = BlockGrid()
    frame = PolarFrame(data=np.full((400, 3700), 2.5))
    vec = extract_block(frame, grid, BlockRef(az_idx=4, rng_idx=20))
    assert vec.size == 5000
    assert np.all(vec == 2.5)


def test_single_bin_lands_in_one_block() -> None:
    grid = BlockGrid()
    data = np.zeros((400, 3700))
    data[125, 1750] = 1.0
    frame = PolarFrame(data=data)
    nonzero = [ref for ref in grid.refs() if extract_block(frame, grid, ref).any()]
    assert nonzero == [BlockRef(az_idx=2, rng_idx=17)]


def test_extract_invalid_ref() -> None:
    grid = partition((80, 200), (10, 20))
    frame = PolarFrame(data=np.zeros((80, 200)))
    with pytest.raises(IndexError):
        extract_block(frame, grid, BlockRef(az_idx=8, rng_idx=0))


def test_insert_wrong_length() -> None:
    grid = partition((80, 200), (10, 20))
    with pytest.raises(DimensionError):
        insert_block(np.zeros((80, 200)), grid, BlockRef(az_idx=0, rng_idx=0), np.zeros(199))


def test_block_view_matches_extract() -> None:
    grid = partition((80, 200), (10, 20))
    data = np.random.default_rng(0).random((80, 200))
    view = block_view(data, grid)
    assert view.shape == (8, 10, 10, 20)
    ref = BlockRef(az_idx=5, rng_idx=7)
    assert np.array_equal(view[5, 7].ravel(), extract_block(PolarFrame(data=data), grid, ref))


def test_range_block_span() -> None:
    grid = BlockGrid()
    assert range_block_span_m(grid, 0.0438, 18) == pytest.approx(78.84)
    assert range_block_span_m(grid, 0.0438, 14) == pytest.approx(61.32)
    assert range_block_span_m(grid, 0.0438, 1) == pytest.approx(4.38)


def test_range_block_span_is_linear() -> None:
    grid = BlockGrid()
    spans = [range_block_span_m(grid, 0.0438, n) for n in range(38)]
    assert np.allclose(np.diff(spans), 4.38)


def test_range_block_span_too_many_blocks() -> None:
    with pytest.raises(ParameterError):
        range_block_span_m(BlockGrid(), 0.0438, 38)


def test_range_to_bin() -> None:
    assert range_to_bin(20.0, 0.25) == 80
    assert range_to_bin(0.0, 0.0438) == 0


def test_polar_frame_defaults() -> None:
    frame = PolarFrame(data=np.zeros((400, 3700)))
    assert frame.dims == (400, 3700)
    assert frame.azimuth_resolution_deg == pytest.approx(0.9)
    assert frame.max_range_m == pytest.approx(162.06)


def test_polar_frame_is_read_only() -> None:
    frame = PolarFrame(data=np.zeros((8, 10)))
    with pytest.raises(ValueError):
        frame.data[0, 0] = 1.0


def test_polar_frame_rejects_negative() -> None:
    data = np.zeros((8, 10))
    data[1, 1] = -0.5
    with pytest.raises(ParameterError):
        PolarFrame(data=data)


def test_polar_frame_rejects_nan() -> None:
    data = np.zeros((8, 10))
    data[1, 1] = np.nan
    with pytest.raises(ParameterError):
        PolarFrame(data=data)


def test_polar_frame_rejects_partial_sweep() -> None:
    with pytest.raises(ConfigurationError):
        PolarFrame(data=np.zeros((400, 10)), azimuth_resolution_deg=0.8)


def test_with_data_keeps_metadata() -> None:
    frame = PolarFrame(data=np.zeros((8, 10)), range_resolution_m=0.25, timestamp_us=42)
    other = frame.with_data(np.ones((8, 10)))
    assert other.range_resolution_m == 0.25
    assert other.timestamp_us == 42
    assert other.data.sum() == 80
