"""Tests for frame-sequence orchestration."""

from __future__ import annotations

import json
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

from radarcs.config import load_config
from radarcs.errors import ConfigurationError, SolverFailure
from radarcs.models import BlockGrid, BlockRef, RadarCsConfig, RunMode, SceneManifest, TargetSpec
from radarcs.orchestrator import (
    PLANS_DIR,
    RECON_DIR,
    REPORTS_DIR,
    TIMINGS_NAME,
    evaluate_run,
    export_run,
    plan_for_frame,
    resolve_grid,
    run_sequence,
)
from radarcs.solvers.base import BlockSolver, Recovery
from radarcs.synth import synth_scene, write_scene

TINY = BlockGrid(az_blocks=8, rng_blocks=4, block_az=10, block_rng=20)
SMALL = BlockGrid(az_blocks=8, rng_blocks=8, block_az=20, block_rng=25)


def _scene(tmp_path: Path, targets: list[TargetSpec], grid: BlockGrid = TINY, **kwargs: object) -> SceneManifest:
    scene = synth_scene(targets, grid=grid, **kwargs)  # type: ignore[arg-type]
    return write_scene(tmp_path / "scene", scene)


def _config(manifest: SceneManifest, **flags: object) -> RadarCsConfig:
    with patch("radarcs.config._find_config_file", return_value=None):
        return load_config(scene_overrides=manifest.overrides, **flags)  # type: ignore[arg-type]


class _FailingSolver(BlockSolver):
    def recover(self, matrix, dct, y) -> Recovery:
        if y.ref == BlockRef(az_idx=0, rng_idx=0):
            raise RuntimeError("singular")
        return Recovery(coefficients=np.zeros(dct.n), residual=0.0, iterations_used=0, converged=True)


def test_resolve_grid() -> None:
    config = RadarCsConfig(block=(10, 20), grid=(8, 4))
    assert resolve_grid(config, (80, 80)) == TINY
    with pytest.raises(ConfigurationError, match="not the configured"):
        resolve_grid(config, (80, 100))


def test_algo2_first_frame_plans_like_algo1(tmp_path) -> None:
    manifest = _scene(tmp_path, [TargetSpec(azimuth_deg=0.0, range_m=10.0)], n_frames=2, range_resolution_m=0.5)
    config = _config(manifest)
    assert plan_for_frame(manifest, RunMode.ALGO2, config, 0) == plan_for_frame(manifest, RunMode.ALGO1, config, 0)


def test_plan_for_frame_out_of_range(tmp_path) -> None:
    manifest = _scene(tmp_path, [], n_frames=1, range_resolution_m=0.5)
    with pytest.raises(IndexError):
        plan_for_frame(manifest, RunMode.ALGO1, _config(manifest), 3)


async def test_run_sequence_writes_outputs(tmp_path) -> None:
    manifest = _scene(tmp_path, [TargetSpec(azimuth_deg=0.0, range_m=10.0)], n_frames=2, range_resolution_m=0.5)
    out = tmp_path / "out"
    result = await run_sequence(manifest, RunMode.ALGO2, _config(manifest), out_dir=out)

    assert len(result.reports) == 2
    assert result.reconstructions[0].shape == (80, 80)
    for idx in range(2):
        assert (out / PLANS_DIR / f"frame_{idx:04d}.json").is_file()
        assert (out / RECON_DIR / f"frame_{idx:04d}.npy").is_file()
        assert (out / REPORTS_DIR / f"frame_{idx:04d}.json").is_file()
    assert (out / TIMINGS_NAME).is_file()
    report = result.reports[0]
    assert report.total_measurements <= report.budget_measurements + TINY.n_blocks
    assert set(report.stage_seconds) == {"plan", "reconstruct", "score"}
    assert report.selected_images["front"] is not None
    assert report.target_psnr_db is not None


async def test_run_sequence_is_deterministic(tmp_path) -> None:
    manifest = _scene(
        tmp_path,
        [TargetSpec(azimuth_deg=0.0, range_m=10.0), TargetSpec(azimuth_deg=200.0, range_m=25.0)],
        n_frames=2,
        range_resolution_m=0.5,
        seed=3,
    )
    config = _config(manifest, seed=5)
    first = await run_sequence(manifest, RunMode.ALGO2, config, out_dir=tmp_path / "a")
    second = await run_sequence(manifest, RunMode.ALGO2, config, out_dir=tmp_path / "b")

    for sub in (PLANS_DIR, REPORTS_DIR):
        for path in sorted((tmp_path / "a" / sub).iterdir()):
            assert path.read_bytes() == (tmp_path / "b" / sub / path.name).read_bytes()
    for x, y in zip(first.reconstructions, second.reconstructions):
        assert np.max(np.abs(x - y)) <= 1e-9


async def test_baseline_rates_are_uniform(tmp_path) -> None:
    manifest = _scene(tmp_path, [], n_frames=1, range_resolution_m=0.5)
    result = await run_sequence(manifest, RunMode.BASELINE, _config(manifest))
    assert result.reports[0].total_measurements == 32 * 20
    assert result.reports[0].chosen_azimuths == []


async def test_run_sequence_grid_mismatch(tmp_path) -> None:
    manifest = _scene(tmp_path, [], n_frames=1, range_resolution_m=0.5)
    with pytest.raises(ConfigurationError):
        await run_sequence(manifest, RunMode.ALGO1, _config(manifest, grid="8x8"))


async def test_run_sequence_raises_after_writing_on_failure(tmp_path) -> None:
    manifest = _scene(tmp_path, [], n_frames=1, range_resolution_m=0.5)
    out = tmp_path / "out"
    with pytest.raises(SolverFailure):
        await run_sequence(manifest, RunMode.BASELINE, _config(manifest), out_dir=out, solver=_FailingSolver())
    assert (out / REPORTS_DIR / "frame_0000.json").is_file()
    report = json.loads((out / REPORTS_DIR / "frame_0000.json").read_text())
    assert report["failed_blocks"] == [[0, 0]]


async def test_evaluate_run_reproduces_reports(tmp_path) -> None:
    manifest = _scene(tmp_path, [TargetSpec(azimuth_deg=0.0, range_m=10.0)], n_frames=2, range_resolution_m=0.5)
    config = _config(manifest)
    out = tmp_path / "out"
    result = await run_sequence(manifest, RunMode.ALGO1, config, out_dir=out)
    before = (out / REPORTS_DIR / "frame_0001.json").read_bytes()

    reports = evaluate_run(manifest, out, config)
    assert [r.psnr_db for r in reports] == [r.psnr_db for r in result.reports]
    assert (out / REPORTS_DIR / "frame_0001.json").read_bytes() == before


async def test_export_run(tmp_path) -> None:
    manifest = _scene(tmp_path, [TargetSpec(azimuth_deg=0.0, range_m=10.0)], n_frames=2, range_resolution_m=0.5)
    config = _config(manifest)
    out = tmp_path / "out"
    await run_sequence(manifest, RunMode.BASELINE, config, out_dir=out)
    written = export_run(manifest, out, tmp_path / "png", config, cartesian=True, with_truth=True)
    assert len(written) == 8
    assert (tmp_path / "png" / "frame_0000_recon_polar.png").is_file()
    assert (tmp_path / "png" / "frame_0001_truth_cart.png").is_file()


def _mean_target_psnr(reports) -> float:
    return float(np.mean([r.target_psnr_db for r in reports]))


@pytest.mark.slow
async def test_camera_guidance_sharpens_target_blocks(tmp_path) -> None:
    baseline, guided = [], []
    for seed in range(10):
        manifest = _scene(
            tmp_path / str(seed),
            [TargetSpec(azimuth_deg=10.0, range_m=10.0)],
            grid=SMALL,
            n_frames=1,
            range_resolution_m=0.25,
            seed=seed,
        )
        config = _config(manifest, seed=seed)
        baseline += (await run_sequence(manifest, RunMode.BASELINE, config)).reports
        guided += (await run_sequence(manifest, RunMode.ALGO1, config)).reports
    assert _mean_target_psnr(guided) >= _mean_target_psnr(baseline) + 2.0


@pytest.mark.slow
async def test_blind_spot_target_is_recovered_by_cfar(tmp_path) -> None:
    # Camera-visible targets fill azimuth blocks 0, 2, 4 and 5, so no top-up can pick block 1.
    visible = [TargetSpec(azimuth_deg=az, range_m=10.0) for az in (0.0, 100.0, 180.0, 260.0)]
    hidden = TargetSpec(azimuth_deg=60.0, range_m=10.0, amplitude=100.0)
    successes = 0
    for seed in range(10):
        manifest = _scene(
            tmp_path / str(seed), [*visible, hidden], grid=SMALL, n_frames=2, range_resolution_m=0.25, seed=seed
        )
        config = _config(manifest, seed=seed)
        one = (await run_sequence(manifest, RunMode.ALGO1, config)).reports[1]
        two = (await run_sequence(manifest, RunMode.ALGO2, config)).reports[1]
        assert two.chosen_azimuths == [0, 2, 4, 5]

        gain_db = 10 * np.log10(one.block_mse[1][1] / two.block_mse[1][1])
        if (1, 1) in {tuple(b) for b in two.boosted_blocks} and gain_db >= 2.0:
            successes += 1
    assert successes >= 8


@pytest.mark.slow
async def test_algo2_keeps_target_quality_of_algo1(tmp_path) -> None:
    targets = [
        TargetSpec(azimuth_deg=10.0, range_m=10.0),
        TargetSpec(azimuth_deg=60.0, range_m=10.0, amplitude=100.0),
    ]
    guided, boosted = [], []
    for seed in range(10):
        manifest = _scene(
            tmp_path / str(seed), targets, grid=SMALL, n_frames=2, range_resolution_m=0.25, seed=seed
        )
        config = _config(manifest, seed=seed, workers=8)
        guided += (await run_sequence(manifest, RunMode.ALGO1, config)).reports
        boosted += (await run_sequence(manifest, RunMode.ALGO2, config)).reports
    assert _mean_target_psnr(boosted) >= _mean_target_psnr(guided) - 0.5
