"""Typer CLI — synth, plan, run, eval, export, import-oxford, config, version commands."""

from __future__ import annotations

import asyncio
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated, Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.panel import Panel

from radarcs import __version__
from radarcs.config import config_to_toml, load_config, parse_dims
from radarcs.errors import ConfigurationError, DimensionError, ParameterError, SceneIOError, SolverFailure
from radarcs.models import BlockGrid, RadarCsConfig, RunMode, SceneManifest, SolverBackend, TargetSpec, TimingConfig
from radarcs.orchestrator import evaluate_run, export_run, plan_for_frame, run_sequence
from radarcs.scene_io import import_oxford, load_array, load_manifest
from radarcs.synth import MOTION_PRESETS, synth_scene, write_scene

app = typer.Typer(
    name="radarcs",
    help="Camera- and CFAR-guided compressed sensing of scanning radar frames.",
    no_args_is_help=True,
)
console = Console()

_MODE_CHOICES = [m.value for m in RunMode]
_SOLVER_CHOICES = [s.value for s in SolverBackend]


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Map radarcs errors onto exit codes: 2 validation, 3 IO, 4 solver failure."""
    try:
        yield
    except SolverFailure as exc:
        console.print(f"[bold red]Solver failure:[/] {exc}")
        raise typer.Exit(4)
    except ValidationError as exc:
        console.print(f"[red]Invalid input:[/] {exc}")
        raise typer.Exit(2)
    except (ConfigurationError, ParameterError, DimensionError, IndexError) as exc:
        console.print(f"[red]{exc}[/]")
        raise typer.Exit(2)
    except (SceneIOError, OSError) as exc:
        console.print(f"[red]IO error:[/] {exc}")
        raise typer.Exit(3)
    except ValueError as exc:
        console.print(f"[red]{exc}[/]")
        raise typer.Exit(2)
    except KeyboardInterrupt:
        console.print("\n[bold red]Aborted by user.[/]")
        raise typer.Exit(130)


def _check_choice(value: Optional[str], choices: list[str], flag: str) -> None:
    if value is not None and value not in choices:
        console.print(f"[red]Invalid {flag} '{value}'. Choose from: {', '.join(choices)}[/]")
        raise typer.Exit(2)


def _scene_config(
    manifest: SceneManifest,
    config_path: Optional[Path],
    **flags: object,
) -> RadarCsConfig:
    return load_config(config_path=config_path, scene_overrides=manifest.overrides, **flags)  # type: ignore[arg-type]


def _parse_target(raw: str) -> TargetSpec:
    """AZIMUTH,RANGE[,AMPLITUDE[,EXTENT]] in degrees, metres, power units and bins."""
    parts = [p.strip() for p in raw.split(",")]
    if not 2 <= len(parts) <= 4:
        raise ConfigurationError(f"target must be AZ,RANGE[,AMP[,EXTENT]], got '{raw}'")
    try:
        values = [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigurationError(f"target must be numeric, got '{raw}'") from exc
    fields = dict(zip(("azimuth_deg", "range_m", "amplitude", "extent_bins"), values))
    return TargetSpec(**fields)  # type: ignore[arg-type]


@app.command()
def synth(
    out: Annotated[Path, typer.Argument(help="Directory to write the scene into")],
    target: Annotated[Optional[list[str]], typer.Option("--target", "-t", help="AZ,RANGE[,AMP[,EXTENT]]; repeatable")] = None,
    frames: Annotated[int, typer.Option("--frames", "-n", help="Number of radar frames")] = 5,
    noise_floor: Annotated[float, typer.Option("--noise-floor", help="Mean of the exponential noise floor")] = 1.0,
    motion: Annotated[str, typer.Option("--motion", help="Radial motion preset: static, urban or freeway")] = "static",
    grid: Annotated[str, typer.Option("--grid", help="Block counts AxR")] = "8x37",
    block: Annotated[str, typer.Option("--block", help="Block size axr in bins")] = "50x100",
    range_resolution: Annotated[float, typer.Option("--range-resolution", help="Metres per range bin")] = 0.0438,
    seed: Annotated[int, typer.Option("--seed", help="Random seed")] = 0,
) -> None:
    """Generate a synthetic scene with camera detections and ground truth."""
    _check_choice(motion, list(MOTION_PRESETS), "--motion")
    with _exit_codes():
        (az_blocks, rng_blocks), (block_az, block_rng) = parse_dims(grid), parse_dims(block)
        layout = BlockGrid(az_blocks=az_blocks, rng_blocks=rng_blocks, block_az=block_az, block_rng=block_rng)
        specs = [_parse_target(t) for t in (target or [])]
        specs = [s.model_copy(update={"range_rate_m": MOTION_PRESETS[motion]}) for s in specs]
        scene = synth_scene(
            specs,
            noise_floor=noise_floor,
            n_frames=frames,
            seed=seed,
            grid=layout,
            range_resolution_m=range_resolution,
            timing=TimingConfig(),
        )
        write_scene(out, scene)
    n_boxes = sum(len(d.boxes) for d in scene.detections)
    console.print(
        f"[green]Wrote {frames} frame(s), {len(scene.detections)} camera image(s) "
        f"with {n_boxes} box(es) to {out}[/]"
    )


@app.command()
def plan(
    scene: Annotated[Path, typer.Argument(help="Scene directory or manifest.json")],
    mode: Annotated[str, typer.Option("--mode", "-m", help="baseline, algo1 or algo2")] = "algo1",
    frame: Annotated[int, typer.Option("--frame", "-f", help="Frame index")] = 0,
    previous: Annotated[Optional[Path], typer.Option("--previous", help="Previous reconstruction (.npy) for algo2")] = None,
    budget: Annotated[Optional[float], typer.Option("--budget", help="Total sampling budget fraction")] = None,
    seed: Annotated[Optional[int], typer.Option("--seed", help="Random seed")] = None,
    grid: Annotated[Optional[str], typer.Option("--grid", help="Expected block counts AxR")] = None,
    block: Annotated[Optional[str], typer.Option("--block", help="Block size axr in bins")] = None,
    exact_budget: Annotated[bool, typer.Option("--exact-budget", help="Solve r1 to spend the whole budget")] = False,
    out: Annotated[Optional[Path], typer.Option("--out", "-o", help="Write plan JSON here instead of stdout")] = None,
    config_path: Annotated[Optional[Path], typer.Option("--config", help="Config file (default: .radarcs.toml)")] = None,
) -> None:
    """Emit the SamplingPlan JSON for one frame."""
    _check_choice(mode, _MODE_CHOICES, "--mode")
    with _exit_codes():
        manifest = load_manifest(scene)
        cfg = _scene_config(
            manifest, config_path, budget=budget, seed=seed, grid=grid, block=block, exact_budget=exact_budget,
        )
        prev = load_array(previous) if previous is not None else None
        sampling = plan_for_frame(manifest, RunMode(mode), cfg, frame, prev)
        text = sampling.model_dump_json(indent=2) + "\n"
        if out is not None:
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(text)
            console.print(f"[green]Plan written to {out} ({sampling.total} measurements)[/]")
        else:
            typer.echo(text, nl=False)


@app.command()
def run(
    scene: Annotated[Path, typer.Argument(help="Scene directory or manifest.json")],
    mode: Annotated[str, typer.Option("--mode", "-m", help="baseline, algo1 or algo2")] = "algo2",
    budget: Annotated[Optional[float], typer.Option("--budget", help="Total sampling budget fraction")] = None,
    seed: Annotated[Optional[int], typer.Option("--seed", help="Random seed")] = None,
    grid: Annotated[Optional[str], typer.Option("--grid", help="Expected block counts AxR")] = None,
    block: Annotated[Optional[str], typer.Option("--block", help="Block size axr in bins")] = None,
    exact_budget: Annotated[bool, typer.Option("--exact-budget", help="Solve r1 to spend the whole budget")] = False,
    out: Annotated[Path, typer.Option("--out", "-o", help="Output directory")] = Path("radarcs-out"),
    workers: Annotated[Optional[int], typer.Option("--workers", "-w", help="Parallel block solves")] = None,
    solver: Annotated[Optional[str], typer.Option("--solver", help="bp or omp")] = None,
    noise_sigma: Annotated[Optional[float], typer.Option("--noise-sigma", help="Measurement noise standard deviation")] = None,
    config_path: Annotated[Optional[Path], typer.Option("--config", help="Config file (default: .radarcs.toml)")] = None,
) -> None:
    """Plan, sample, reconstruct and score every frame of a scene."""
    _check_choice(mode, _MODE_CHOICES, "--mode")
    _check_choice(solver, _SOLVER_CHOICES, "--solver")
    with _exit_codes():
        manifest = load_manifest(scene)
        cfg = _scene_config(
            manifest, config_path, budget=budget, seed=seed, grid=grid, block=block,
            exact_budget=exact_budget, workers=workers, solver=solver, noise_sigma=noise_sigma,
        )
        asyncio.run(run_sequence(manifest, RunMode(mode), cfg, out_dir=out))
    console.print(f"[green]Results written to {out}[/]")


@app.command(name="eval")
def evaluate(
    scene: Annotated[Path, typer.Argument(help="Scene directory or manifest.json")],
    run_dir: Annotated[Path, typer.Argument(help="Output directory of a previous run")],
    config_path: Annotated[Optional[Path], typer.Option("--config", help="Config file (default: .radarcs.toml)")] = None,
) -> None:
    """Recompute reports from stored plans and reconstructions."""
    with _exit_codes():
        manifest = load_manifest(scene)
        evaluate_run(manifest, run_dir, _scene_config(manifest, config_path))


@app.command()
def export(
    scene: Annotated[Path, typer.Argument(help="Scene directory or manifest.json")],
    run_dir: Annotated[Path, typer.Argument(help="Output directory of a previous run")],
    out: Annotated[Optional[Path], typer.Option("--out", "-o", help="Image directory (default: RUN_DIR/png)")] = None,
    cartesian: Annotated[bool, typer.Option("--cartesian", help="Also write bird's-eye Cartesian renders")] = False,
    truth: Annotated[bool, typer.Option("--truth", help="Also render the ground-truth frames")] = False,
    config_path: Annotated[Optional[Path], typer.Option("--config", help="Config file (default: .radarcs.toml)")] = None,
) -> None:
    """Render reconstructions as display PNGs."""
    with _exit_codes():
        manifest = load_manifest(scene)
        export_run(
            manifest, run_dir, out or run_dir / "png", _scene_config(manifest, config_path),
            cartesian=cartesian, with_truth=truth,
        )


@app.command(name="import-oxford")
def import_oxford_cmd(
    src: Annotated[Path, typer.Argument(help="Directory of Oxford Radar RobotCar polar scans")],
    out: Annotated[Path, typer.Option("--out", "-o", help="Scene directory to create")],
    block_rng: Annotated[int, typer.Option("--block-rng", help="Range block size; range is cropped to a multiple")] = 100,
) -> None:
    """Convert Oxford radar scans into a scene (no detections)."""
    with _exit_codes():
        manifest = import_oxford(src, out, block_rng=block_rng)
    console.print(f"[green]Imported {len(manifest.frames)} scan(s) into {out}[/]")


@app.command()
def config(
    save: Annotated[bool, typer.Option("--save", help="Write the resolved config to ./.radarcs.toml")] = False,
    config_path: Annotated[Optional[Path], typer.Option("--config", help="Config file (default: .radarcs.toml)")] = None,
) -> None:
    """Show the resolved configuration."""
    with _exit_codes():
        cfg = load_config(config_path=config_path)
    toml_content = config_to_toml(cfg)
    console.print(Panel(toml_content, title=".radarcs.toml", border_style="green"))
    if save:
        target = Path.cwd() / ".radarcs.toml"
        target.write_text(toml_content)
        console.print(f"\n[green]Config saved to {target}[/]")


@app.command()
def version() -> None:
    """Show radarcs version."""
    console.print(f"radarcs {__version__}")


if __name__ == "__main__":
    app()
