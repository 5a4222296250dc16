"""Frame-sequence dispatch: strictly ordered frames, each reconstructed block-parallel."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from rich.console import Console
from rich.table import Table

from radarcs.errors import ConfigurationError, SolverFailure
from radarcs.export import export_frame
from radarcs.frame import PolarFrame, partition
from radarcs.models import (
    BlockGrid,
    CameraId,
    CameraModel,
    DetectionSet,
    FrameReport,
    RadarCsConfig,
    RunMode,
    SamplingPlan,
    SceneManifest,
    SceneTruth,
    TargetTruth,
)
from radarcs.pipeline import associate, plan_frame, run_frame, score_frame
from radarcs.scene_io import (
    load_array,
    read_detections,
    read_frame,
    read_plan,
    read_report,
    read_truth,
    save_array,
    write_plan,
    write_report,
    write_timings,
)
from radarcs.solvers import BlockSolver, get_solver

console = Console()

PLANS_DIR = "plans"
RECON_DIR = "recon"
REPORTS_DIR = "reports"
TIMINGS_NAME = "timings.json"


def _stem(frame_index: int) -> str:
    return f"frame_{frame_index:04d}"


@dataclass
class SceneInputs:
    """Everything a run needs from a scene besides the frames themselves."""

    grid: BlockGrid
    cams: dict[CameraId, CameraModel]
    detections: dict[CameraId, dict[int, DetectionSet]] = field(default_factory=dict)
    truth: SceneTruth | None = None

    def targets(self, frame_index: int) -> list[TargetTruth]:
        if self.truth is None or frame_index >= len(self.truth.frames):
            return []
        return self.truth.frames[frame_index]


@dataclass
class SequenceResult:
    reports: list[FrameReport]
    reconstructions: list[np.ndarray]


def resolve_grid(config: RadarCsConfig, frame_dims: tuple[int, int]) -> BlockGrid:
    """Partition the frame by the configured block size and check the expected grid."""
    grid = partition(frame_dims, config.block)
    if config.grid is not None and tuple(config.grid) != (grid.az_blocks, grid.rng_blocks):
        raise ConfigurationError(
            f"blocks of {config.block[0]}x{config.block[1]} give a "
            f"{grid.az_blocks}x{grid.rng_blocks} grid on {frame_dims[0]}x{frame_dims[1]} frames, "
            f"not the configured {config.grid[0]}x{config.grid[1]}"
        )
    return grid


def load_scene_inputs(manifest: SceneManifest, config: RadarCsConfig) -> SceneInputs:
    first = read_frame(manifest.resolve(manifest.frames[0].path))
    inputs = SceneInputs(
        grid=resolve_grid(config, first.dims),
        cams={c.id: c for c in manifest.cameras},
    )
    if manifest.detections_path is not None:
        for dset in read_detections(manifest.resolve(manifest.detections_path)):
            inputs.detections.setdefault(dset.camera, {})[dset.timestamp_us] = dset
    if manifest.truth_path is not None:
        inputs.truth = read_truth(manifest.resolve(manifest.truth_path))
    return inputs


def select_detections(
    inputs: SceneInputs,
    radar_timestamp_us: int,
    config: RadarCsConfig,
) -> tuple[dict[CameraId, int | None], list[DetectionSet]]:
    """Camera images paired with one radar frame and their detections."""
    stamps = {cam: sorted(inputs.detections.get(cam, {})) for cam in inputs.cams}
    selected = associate(stamps, radar_timestamp_us, config.timing)
    sets = [inputs.detections[cam][ts] for cam, ts in selected.items() if ts is not None]
    return selected, sets


def _load_checked(manifest: SceneManifest, frame_index: int, grid: BlockGrid) -> PolarFrame:
    frame = read_frame(manifest.resolve(manifest.frames[frame_index].path))
    if frame.dims != (grid.azimuth_bins, grid.range_bins):
        raise ConfigurationError(
            f"frame {frame_index} is {frame.dims[0]}x{frame.dims[1]}, "
            f"expected {grid.azimuth_bins}x{grid.range_bins}"
        )
    return frame


def plan_for_frame(
    manifest: SceneManifest,
    mode: RunMode,
    config: RadarCsConfig,
    frame_index: int = 0,
    previous: np.ndarray | None = None,
) -> SamplingPlan:
    """Plan one frame in isolation; algo2 uses ``previous`` when given."""
    if not 0 <= frame_index < len(manifest.frames):
        raise IndexError(f"frame {frame_index} outside scene of {len(manifest.frames)} frame(s)")
    inputs = load_scene_inputs(manifest, config)
    entry = manifest.frames[frame_index]
    _, sets = select_detections(inputs, entry.timestamp_us, config)
    prev_frame = None
    if previous is not None:
        prev_frame = _load_checked(manifest, frame_index, inputs.grid).with_data(previous)
    return plan_frame(mode, inputs.grid, config, frame_index, sets, inputs.cams, prev_frame)


async def run_sequence(
    manifest: SceneManifest,
    mode: RunMode,
    config: RadarCsConfig,
    out_dir: Path | None = None,
    solver: BlockSolver | None = None,
) -> SequenceResult:
    """Plan, sample, reconstruct and score every frame in order.

    algo2 frames plan from the previous reconstruction, so frames never
    overlap. Raises SolverFailure after all outputs are written if any block
    raised during reconstruction.
    """
    result = SequenceResult(reports=[], reconstructions=[])
    if not manifest.frames:
        console.print("[yellow]Warning: scene has no frames[/]")
        return result

    inputs = load_scene_inputs(manifest, config)
    grid = inputs.grid
    solver = solver or get_solver(config.solver_backend, config.solver)
    console.print(
        f"[bold]Reconstructing {len(manifest.frames)} frame(s) in {mode.value} mode "
        f"({grid.az_blocks}x{grid.rng_blocks} blocks of {grid.block_az}x{grid.block_rng}, "
        f"{config.workers} worker(s))[/]\n"
    )

    previous: PolarFrame | None = None
    timings: list[dict[str, float]] = []
    for idx, entry in enumerate(manifest.frames):
        frame = _load_checked(manifest, idx, grid)
        t0 = time.perf_counter()

        selected, sets = select_detections(inputs, entry.timestamp_us, config)
        if mode != RunMode.BASELINE:
            for cam, ts in selected.items():
                if ts is None:
                    console.print(f"[dim]Frame {idx}: no {cam.value} image before the lead window[/]")
        plan = plan_frame(mode, grid, config, idx, sets, inputs.cams, previous)
        t1 = time.perf_counter()

        outcome = await run_frame(frame, plan, config, idx, solver)
        t2 = time.perf_counter()

        report = score_frame(
            idx, frame, outcome.reconstruction, plan, mode, config,
            inputs.targets(idx), selected, outcome,
        )
        t3 = time.perf_counter()
        report.stage_seconds = {"plan": t1 - t0, "reconstruct": t2 - t1, "score": t3 - t2}
        timings.append({"frame_index": idx, **report.stage_seconds})

        if out_dir is not None:
            write_plan(out_dir / PLANS_DIR / f"{_stem(idx)}.json", plan)
            save_array(out_dir / RECON_DIR / f"{_stem(idx)}.npy", outcome.reconstruction)
            write_report(out_dir / REPORTS_DIR / f"{_stem(idx)}.json", report)

        console.print(
            f"[bold blue]Frame {idx}[/] {plan.total} measurements, "
            f"PSNR {report.psnr_db:.2f} dB [dim]({t2 - t1:.1f}s)[/]"
        )
        if report.unconverged_blocks:
            console.print(f"[yellow]Warning: {len(report.unconverged_blocks)} block(s) did not converge[/]")
        for ref, error in outcome.failed.items():
            console.print(f"[red]Block ({ref.az_idx}, {ref.rng_idx}) failed: {error}[/]")

        result.reports.append(report)
        result.reconstructions.append(outcome.reconstruction)
        previous = frame.with_data(outcome.reconstruction)

    if out_dir is not None:
        write_timings(out_dir / TIMINGS_NAME, timings)
    _print_summary(result.reports)

    failed = sum(len(r.failed_blocks) for r in result.reports)
    if failed:
        raise SolverFailure(f"{failed} block reconstruction(s) failed")
    return result


def evaluate_run(manifest: SceneManifest, run_dir: Path, config: RadarCsConfig) -> list[FrameReport]:
    """Recompute every report of a finished run from its stored plans and reconstructions."""
    inputs = load_scene_inputs(manifest, config)
    reports: list[FrameReport] = []
    for idx in range(len(manifest.frames)):
        stem = _stem(idx)
        frame = _load_checked(manifest, idx, inputs.grid)
        plan = read_plan(run_dir / PLANS_DIR / f"{stem}.json")
        old = read_report(run_dir / REPORTS_DIR / f"{stem}.json")
        fresh = score_frame(
            idx, frame, load_array(run_dir / RECON_DIR / f"{stem}.npy"), plan, old.mode, config,
            inputs.targets(idx),
        )
        report = fresh.model_copy(
            update={
                "selected_images": old.selected_images,
                "unconverged_blocks": old.unconverged_blocks,
                "failed_blocks": old.failed_blocks,
            }
        )
        write_report(run_dir / REPORTS_DIR / f"{stem}.json", report)
        reports.append(report)
    _print_summary(reports)
    return reports


def export_run(
    manifest: SceneManifest,
    run_dir: Path,
    out: Path,
    config: RadarCsConfig,
    cartesian: bool = False,
    with_truth: bool = False,
) -> list[Path]:
    """Render stored reconstructions (and optionally ground truth) as PNGs."""
    written: list[Path] = []
    for idx, entry in enumerate(manifest.frames):
        stem = _stem(idx)
        recon_path = run_dir / RECON_DIR / f"{stem}.npy"
        if not recon_path.is_file():
            console.print(f"[dim]Frame {idx}: no reconstruction, skipping[/]")
            continue
        frame = read_frame(manifest.resolve(entry.path))
        written += export_frame(
            out / f"{stem}_recon", load_array(recon_path), frame.range_resolution_m,
            config.display_range_m, cartesian,
        )
        if with_truth:
            written += export_frame(
                out / f"{stem}_truth", frame.data, frame.range_resolution_m,
                config.display_range_m, cartesian,
            )
    console.print(f"[green]Wrote {len(written)} image(s) to {out}[/]")
    return written


def _fmt_db(value: float | None) -> str:
    if value is None:
        return "—"
    return "inf" if math.isinf(value) else f"{value:.2f}"


def _fmt_ratio(value: float | None) -> str:
    return "—" if value is None else f"{value:.2f}"


def _print_summary(reports: list[FrameReport]) -> None:
    """Print a summary table of all frame results."""
    table = Table(title="\nradarcs Summary")
    table.add_column("Frame", style="bold")
    table.add_column("Mode")
    table.add_column("Measurements")
    table.add_column("PSNR (dB)")
    table.add_column("Target PSNR")
    table.add_column("CFAR P/R")
    table.add_column("Boosted")
    table.add_column("Unconverged")
    table.add_column("Failed")

    for report in reports:
        failed_style = "red" if report.failed_blocks else "green"
        table.add_row(
            str(report.frame_index),
            report.mode.value,
            f"{report.total_measurements}/{report.budget_measurements}",
            _fmt_db(report.psnr_db),
            _fmt_db(report.target_psnr_db),
            f"{_fmt_ratio(report.cfar_precision)}/{_fmt_ratio(report.cfar_recall)}",
            str(len(report.boosted_blocks)),
            str(len(report.unconverged_blocks)),
            f"[{failed_style}]{len(report.failed_blocks)}[/{failed_style}]",
        )

    console.print(table)
