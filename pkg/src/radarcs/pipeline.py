"""Single-frame lifecycle: associate cameras, plan, sample, reconstruct, score."""

from __future__ import annotations

import asyncio
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from radarcs.allocator import allocate_algo1, allocate_algo2, top_up_azimuths, uniform_plan
from radarcs.errors import DimensionError
from radarcs.frame import PolarFrame, block_of, extract_block, insert_block
from radarcs.guidance import cfar_detect, flagged_blocks, important_azimuth_blocks
from radarcs.metrics import block_mse, cfar_detectability, psnr, region_psnr, target_psnr
from radarcs.models import (
    BlockGrid,
    BlockPlan,
    BlockRef,
    CameraId,
    CameraModel,
    DetectionSet,
    FrameReport,
    RadarCsConfig,
    RateTable,
    RunMode,
    SamplingPlan,
    TargetTruth,
    TimingConfig,
)
from radarcs.sensing import DctOperator, derive_seed, gen_measurement_matrix, sample_block
from radarcs.solvers import BlockSolver, get_solver

# Keys that separate the random streams drawn from one run seed.
_TOP_UP_PURPOSE = 2
_MATRIX_PURPOSE = 3
_NOISE_PURPOSE = 4


def associate(
    camera_timestamps: Mapping[CameraId, Sequence[int]],
    radar_timestamp_us: int,
    timing: TimingConfig,
) -> dict[CameraId, int | None]:
    """Latest image per camera taken at least ``lead_s`` before the radar frame."""
    cutoff = radar_timestamp_us - int(round(timing.lead_s * 1e6))
    selected: dict[CameraId, int | None] = {}
    for cam, stamps in camera_timestamps.items():
        ordered = np.sort(np.asarray(stamps, dtype=np.int64))
        idx = int(np.searchsorted(ordered, cutoff, side="right")) - 1
        selected[cam] = int(ordered[idx]) if idx >= 0 else None
    return selected


def plan_frame(
    mode: RunMode,
    grid: BlockGrid,
    config: RadarCsConfig,
    frame_index: int,
    detections: Iterable[DetectionSet] = (),
    cams: Mapping[CameraId, CameraModel] | None = None,
    previous: PolarFrame | None = None,
) -> SamplingPlan:
    """Sampling plan for one frame.

    algo2 needs the previous reconstruction; without one it plans
    exactly as algo1 does.
    """
    if mode == RunMode.BASELINE:
        return uniform_plan(grid, config.budget_fraction)

    if cams is None:
        cams = {CameraId.FRONT: CameraModel.front(), CameraId.REAR: CameraModel.rear()}
    important = important_azimuth_blocks(
        detections, cams, grid, config.classes, config.score_min, config.spread_boxes
    )
    chosen = top_up_azimuths(
        important,
        minimum=min(config.min_azimuths, grid.az_blocks),
        seed=derive_seed(config.seed, _TOP_UP_PURPOSE, frame_index),
        az_blocks=grid.az_blocks,
    )
    table = RateTable.for_grid(grid)
    if mode == RunMode.ALGO1 or previous is None:
        return allocate_algo1(chosen, grid, table, config.budget_fraction, config.exact_budget)

    cfar_map = cfar_detect(previous, config.cfar)
    return allocate_algo2(
        chosen,
        flagged_blocks(cfar_map, grid, config.cfar.min_hits_per_block),
        grid,
        table,
        config.budget_fraction,
        hit_counts=cfar_map.hits_by_block(grid),
        exact_budget=config.exact_budget,
    )


@dataclass
class FrameResult:
    """Reconstruction of one frame plus per-block solver status."""

    reconstruction: np.ndarray
    unconverged: list[BlockRef] = field(default_factory=list)
    failed: dict[BlockRef, str] = field(default_factory=dict)


def _reconstruct_one(
    block: np.ndarray,
    plan: BlockPlan,
    grid: BlockGrid,
    dct: DctOperator,
    solver: BlockSolver,
    config: RadarCsConfig,
    frame_index: int,
) -> tuple[np.ndarray, bool]:
    if plan.m == 0:
        return np.zeros(grid.block_size), True
    keys = (config.seed, frame_index, plan.az, plan.rng)
    matrix = gen_measurement_matrix(
        plan.m,
        grid.block_size,
        min(config.column_weight, plan.m),
        derive_seed(keys[0], _MATRIX_PURPOSE, *keys[1:]),
    )
    y = sample_block(
        block,
        matrix,
        noise_sigma=config.noise_sigma,
        seed=derive_seed(keys[0], _NOISE_PURPOSE, *keys[1:]),
        ref=plan.ref,
    )
    x, recovery = solver.reconstruct(matrix, dct, y)
    return x, recovery.converged


async def run_frame(
    frame: PolarFrame,
    plan: SamplingPlan,
    config: RadarCsConfig,
    frame_index: int = 0,
    solver: BlockSolver | None = None,
) -> FrameResult:
    """Sample every block of ``frame`` per ``plan`` and reconstruct it.

    Blocks run in worker threads bounded by ``config.workers``. A block that
    raises is recorded as failed and left at zero; the others still finish.
    """
    grid = plan.grid
    if frame.dims != (grid.azimuth_bins, grid.range_bins):
        raise DimensionError(
            f"frame {frame.dims} does not match plan grid {grid.azimuth_bins}x{grid.range_bins}"
        )
    solver = solver or get_solver(config.solver_backend, config.solver)
    dct = DctOperator(grid.block_az, grid.block_rng)
    semaphore = asyncio.Semaphore(config.workers)

    async def _guarded(block_plan: BlockPlan) -> tuple[np.ndarray, bool]:
        async with semaphore:
            return await asyncio.to_thread(
                _reconstruct_one,
                extract_block(frame, grid, block_plan.ref),
                block_plan,
                grid,
                dct,
                solver,
                config,
                frame_index,
            )

    tasks = [asyncio.create_task(_guarded(b)) for b in plan.blocks]
    try:
        results = await asyncio.gather(*tasks, return_exceptions=True)
    except asyncio.CancelledError:
        for t in tasks:
            t.cancel()
        raise KeyboardInterrupt("Aborted by user")

    canvas = np.zeros(frame.dims)
    outcome = FrameResult(reconstruction=canvas)
    for block_plan, result in zip(plan.blocks, results):
        if isinstance(result, KeyboardInterrupt):
            raise result
        if isinstance(result, BaseException):
            outcome.failed[block_plan.ref] = f"{type(result).__name__}: {result}"
            continue
        block, converged = result
        insert_block(canvas, grid, block_plan.ref, block)
        if not converged:
            outcome.unconverged.append(block_plan.ref)
    np.maximum(canvas, 0.0, out=canvas)
    return outcome


def target_blocks(grid: BlockGrid, targets: Iterable[TargetTruth]) -> list[BlockRef]:
    return sorted({block_of(grid, t.azimuth_bin, t.range_bin) for t in targets})


def score_frame(
    frame_index: int,
    frame: PolarFrame,
    reconstruction: np.ndarray,
    plan: SamplingPlan,
    mode: RunMode,
    config: RadarCsConfig,
    targets: Iterable[TargetTruth] = (),
    selected_images: Mapping[CameraId, int | None] | None = None,
    result: FrameResult | None = None,
) -> FrameReport:
    """Metrics for one reconstructed frame against its ground truth."""
    grid = plan.grid
    peak = float(frame.data.max()) or 1.0
    precision, recall = cfar_detectability(frame.data, reconstruction, config.cfar, config.match_radius_bins)
    return FrameReport(
        frame_index=frame_index,
        timestamp_us=frame.timestamp_us,
        mode=mode,
        total_measurements=plan.total,
        budget_measurements=int(round(plan.budget_fraction * grid.frame_size)),
        chosen_azimuths=list(plan.chosen_azimuths),
        boosted_blocks=[(r.az_idx, r.rng_idx) for r in plan.boosted],
        selected_images={cam.value: ts for cam, ts in (selected_images or {}).items()},
        psnr_db=psnr(frame.data, reconstruction, peak),
        region_psnr_db=region_psnr(frame.data, reconstruction, plan, peak),
        target_psnr_db=target_psnr(frame.data, reconstruction, grid, target_blocks(grid, targets), peak),
        block_mse=block_mse(frame.data, reconstruction, grid).tolist(),
        cfar_precision=precision,
        cfar_recall=recall,
        unconverged_blocks=[(r.az_idx, r.rng_idx) for r in (result.unconverged if result else [])],
        failed_blocks=[(r.az_idx, r.rng_idx) for r in (result.failed if result else {})],
    )
