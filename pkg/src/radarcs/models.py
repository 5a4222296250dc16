"""All Pydantic models and enums for radarcs."""

from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Iterator

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class RegionLabel(str, Enum):
    R1 = "R1"  # chosen azimuths, near range
    R2 = "R2"  # other azimuths, near range
    R3 = "R3"  # far range


class RunMode(str, Enum):
    BASELINE = "baseline"
    ALGO1 = "algo1"
    ALGO2 = "algo2"


class CameraId(str, Enum):
    FRONT = "front"
    REAR = "rear"


class SolverBackend(str, Enum):
    BP = "bp"
    OMP = "omp"


class BlockRef(BaseModel):
    """Address of one block in a BlockGrid."""

    model_config = ConfigDict(frozen=True)

    az_idx: int = Field(ge=0)
    rng_idx: int = Field(ge=0)

    def __lt__(self, other: BlockRef) -> bool:
        return (self.az_idx, self.rng_idx) < (other.az_idx, other.rng_idx)


class BlockGrid(BaseModel):
    """Exact partition of a polar frame into equal az x range blocks."""

    model_config = ConfigDict(frozen=True)

    az_blocks: int = Field(default=8, gt=0)
    rng_blocks: int = Field(default=37, gt=0)
    block_az: int = Field(default=50, gt=0)
    block_rng: int = Field(default=100, gt=0)

    @property
    def azimuth_bins(self) -> int:
        return self.az_blocks * self.block_az

    @property
    def range_bins(self) -> int:
        return self.rng_blocks * self.block_rng

    @property
    def block_size(self) -> int:
        return self.block_az * self.block_rng

    @property
    def n_blocks(self) -> int:
        return self.az_blocks * self.rng_blocks

    @property
    def frame_size(self) -> int:
        return self.azimuth_bins * self.range_bins

    @property
    def azimuth_block_deg(self) -> float:
        return 360.0 / self.az_blocks

    def refs(self) -> Iterator[BlockRef]:
        """All blocks, azimuth-major."""
        for az in range(self.az_blocks):
            for rng in range(self.rng_blocks):
                yield BlockRef(az_idx=az, rng_idx=rng)

    def contains(self, ref: BlockRef) -> bool:
        return ref.az_idx < self.az_blocks and ref.rng_idx < self.rng_blocks


_DEFAULT_RATES: dict[int, tuple[float, float, float]] = {
    4: (0.308, 0.05, 0.025),
    5: (0.255, 0.05, 0.025),
    6: (0.202, 0.05, 0.025),
}

_DEFAULT_RNG_BLOCKS = 37


class RateTable(BaseModel):
    """Per-region sampling rates keyed by the number of chosen azimuth blocks."""

    model_config = ConfigDict(frozen=True)

    rows: dict[int, tuple[float, float, float]] = Field(
        default_factory=lambda: dict(_DEFAULT_RATES)
    )
    r1_range_blocks: int = Field(default=18, gt=0)
    reduced_range_blocks: int = Field(default=14, gt=0)  # algo2 R1 depth
    exact_r2: float = Field(default=0.05, gt=0, le=1)
    exact_r3: float = Field(default=0.025, gt=0, le=1)

    @field_validator("rows")
    @classmethod
    def _check_rows(cls, rows: dict[int, tuple[float, float, float]]) -> dict[int, tuple[float, float, float]]:
        for a, (r1, r2, r3) in rows.items():
            if not all(0 < r <= 1 for r in (r1, r2, r3)):
                raise ValueError(f"rates for a={a} must lie in (0, 1]")
            if not r1 > r2 > r3:
                raise ValueError(f"rates for a={a} must satisfy r1 > r2 > r3")
        return rows

    @model_validator(mode="after")
    def _check_depths(self) -> RateTable:
        if self.reduced_range_blocks > self.r1_range_blocks:
            raise ValueError("reduced_range_blocks cannot exceed r1_range_blocks")
        return self

    def rates_for(self, a: int) -> tuple[float, float, float] | None:
        return self.rows.get(a)

    @classmethod
    def for_grid(cls, grid: BlockGrid) -> RateTable:
        """Default rate table with the 18/14 range-block limits scaled to the grid's range depth."""
        if grid.rng_blocks == _DEFAULT_RNG_BLOCKS:
            return cls()
        near = max(1, round(18 * grid.rng_blocks / _DEFAULT_RNG_BLOCKS))
        reduced = max(1, min(near, round(14 * grid.rng_blocks / _DEFAULT_RNG_BLOCKS)))
        return cls(r1_range_blocks=near, reduced_range_blocks=reduced)


class BlockPlan(BaseModel):
    az: int = Field(ge=0)
    rng: int = Field(ge=0)
    region: RegionLabel
    rate: float = Field(ge=0, le=1)
    m: int = Field(ge=0)
    boosted: bool = False

    @property
    def ref(self) -> BlockRef:
        return BlockRef(az_idx=self.az, rng_idx=self.rng)


class SamplingPlan(BaseModel):
    """Per-block sampling rates and measurement counts for one acquisition."""

    grid: BlockGrid
    budget_fraction: float = Field(default=0.10, gt=0, le=1)
    chosen_azimuths: list[int] = Field(default_factory=list)
    blocks: list[BlockPlan]

    @model_validator(mode="after")
    def _check_blocks(self) -> SamplingPlan:
        listed = [(b.az, b.rng) for b in self.blocks]
        expected = [(r.az_idx, r.rng_idx) for r in self.grid.refs()]
        if listed != expected:
            raise ValueError("plan must list every grid block exactly once, azimuth-major")
        for b in self.blocks:
            if b.rate > 0 and b.m < 1:
                raise ValueError(f"block ({b.az}, {b.rng}) has a rate but no measurements")
        return self

    def block(self, ref: BlockRef) -> BlockPlan:
        return self.blocks[ref.az_idx * self.grid.rng_blocks + ref.rng_idx]

    @property
    def boosted(self) -> list[BlockRef]:
        return [b.ref for b in self.blocks if b.boosted]

    @property
    def total(self) -> int:
        return sum(b.m for b in self.blocks)


class CameraModel(BaseModel):
    id: CameraId
    hfov_deg: float = Field(gt=0, le=360)
    boresight_deg: float
    image_width_px: int = Field(gt=0)
    image_height_px: int = Field(gt=0)

    @classmethod
    def front(cls) -> CameraModel:
        return cls(id=CameraId.FRONT, hfov_deg=66.0, boresight_deg=0.0,
                   image_width_px=1280, image_height_px=960)

    @classmethod
    def rear(cls) -> CameraModel:
        return cls(id=CameraId.REAR, hfov_deg=180.0, boresight_deg=180.0,
                   image_width_px=1024, image_height_px=1024)


class DetectionBox(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    x1: float
    y1: float
    x2: float
    y2: float
    label: str = Field(alias="class")
    score: float = Field(ge=0, le=1)

    @model_validator(mode="after")
    def _check_corners(self) -> DetectionBox:
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError("box corners must satisfy x1 < x2 and y1 < y2")
        return self

    @property
    def x_center(self) -> float:
        return (self.x1 + self.x2) / 2


class DetectionSet(BaseModel):
    """Boxes produced for one camera image."""

    model_config = ConfigDict(populate_by_name=True)

    timestamp_us: int
    camera: CameraId
    image_width: int = Field(gt=0)
    image_height: int = Field(gt=0)
    boxes: list[DetectionBox] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_bounds(self) -> DetectionSet:
        for box in self.boxes:
            if box.x1 < 0 or box.y1 < 0 or box.x2 > self.image_width or box.y2 > self.image_height:
                raise ValueError(
                    f"box ({box.x1}, {box.y1}, {box.x2}, {box.y2}) outside "
                    f"{self.image_width}x{self.image_height} image"
                )
        return self


class CfarParams(BaseModel):
    train_cells: int = Field(default=12, ge=1)
    guard_cells: int = Field(default=4, ge=0)
    pfa: float = Field(default=1e-4, gt=0, lt=1)
    min_hits_per_block: int = Field(default=3, ge=1)


class SolverConfig(BaseModel):
    # Absolute epsilon; when unset it is feasibility_rtol * ||y||.
    feasibility_tol: float | None = Field(default=None, ge=0)
    feasibility_rtol: float = Field(default=1e-6, ge=0)
    max_iterations: int = Field(default=2000, gt=0)
    convergence_tol: float = Field(default=1e-7, gt=0)
    omp_sparsity: int | None = Field(default=None, gt=0)
    omp_residual_tol: float | None = Field(default=None, gt=0)

    def epsilon(self, y_norm: float) -> float:
        if self.feasibility_tol is not None:
            return self.feasibility_tol
        return self.feasibility_rtol * y_norm


class TimingConfig(BaseModel):
    radar_period_s: float = Field(default=0.25, gt=0)
    detection_latency_s: float = Field(default=0.12, ge=0)
    lead_s: float = Field(default=0.18, ge=0)
    front_rate_hz: float = Field(default=16.0, gt=0)
    rear_rate_hz: float = Field(default=17.0, gt=0)

    @model_validator(mode="after")
    def _check_lead(self) -> TimingConfig:
        if self.lead_s < self.detection_latency_s:
            raise ValueError("lead_s must be at least detection_latency_s")
        return self

    def rate_hz(self, camera: CameraId) -> float:
        return self.front_rate_hz if camera == CameraId.FRONT else self.rear_rate_hz


class FrameEntry(BaseModel):
    path: str
    timestamp_us: int


class SceneManifest(BaseModel):
    frames: list[FrameEntry]
    detections_path: str | None = None
    cameras: list[CameraModel] = Field(
        default_factory=lambda: [CameraModel.front(), CameraModel.rear()]
    )
    overrides: dict[str, object] = Field(default_factory=dict)
    truth_path: str | None = None
    root: Path = Field(default=Path("."), exclude=True)

    @field_validator("frames")
    @classmethod
    def _check_order(cls, frames: list[FrameEntry]) -> list[FrameEntry]:
        stamps = [f.timestamp_us for f in frames]
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise ValueError("radar frame timestamps must be strictly increasing")
        return frames

    def resolve(self, relative: str) -> Path:
        return self.root / relative

    def camera(self, camera_id: CameraId) -> CameraModel | None:
        return next((c for c in self.cameras if c.id == camera_id), None)


class TargetSpec(BaseModel):
    azimuth_deg: float = Field(ge=0, lt=360)
    range_m: float = Field(ge=0)
    amplitude: float = Field(default=40.0, gt=0)
    extent_bins: float = Field(default=6.0, gt=0)
    range_rate_m: float = 0.0  # per frame
    azimuth_rate_deg: float = 0.0  # per frame
    label: str = "car"


class FrameReport(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    frame_index: int
    timestamp_us: int
    mode: RunMode
    total_measurements: int
    budget_measurements: int
    chosen_azimuths: list[int] = Field(default_factory=list)
    boosted_blocks: list[tuple[int, int]] = Field(default_factory=list)
    selected_images: dict[str, int | None] = Field(default_factory=dict)
    psnr_db: float
    region_psnr_db: dict[str, float] = Field(default_factory=dict)
    target_psnr_db: float | None = None
    block_mse: list[list[float]] = Field(default_factory=list)
    cfar_precision: float | None = None
    cfar_recall: float | None = None
    unconverged_blocks: list[tuple[int, int]] = Field(default_factory=list)
    failed_blocks: list[tuple[int, int]] = Field(default_factory=list)
    # Wall time varies run to run; kept out of the serialized report.
    stage_seconds: dict[str, float] = Field(default_factory=dict, exclude=True)


_DEFAULT_CLASSES = ["person", "bicycle", "car", "truck"]


class RadarCsConfig(BaseModel):
    budget_fraction: float = Field(default=0.10, gt=0, le=1)
    seed: int = Field(default=0, ge=0)
    block: tuple[int, int] = (50, 100)
    grid: tuple[int, int] | None = None  # expected block counts; checked against frame dims
    exact_budget: bool = False
    column_weight: int = Field(default=4, ge=1)
    noise_sigma: float = Field(default=0.0, ge=0)
    min_azimuths: int = Field(default=4, ge=0)
    score_min: float = Field(default=0.5, ge=0, le=1)
    classes: list[str] = Field(default_factory=lambda: list(_DEFAULT_CLASSES))
    spread_boxes: bool = False
    solver_backend: SolverBackend = SolverBackend.BP
    workers: int = Field(default=4, gt=0)
    display_range_m: float = Field(default=62.625, gt=0)
    match_radius_bins: int = Field(default=3, ge=0)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    cfar: CfarParams = Field(default_factory=CfarParams)
    timing: TimingConfig = Field(default_factory=TimingConfig)


class FrameSidecar(BaseModel):
    """Metadata stored next to a 16-bit frame PNG."""

    azimuth_bins: int = Field(gt=0)
    range_bins: int = Field(gt=0)
    range_resolution_m: float = Field(gt=0)
    azimuth_resolution_deg: float = Field(gt=0)
    timestamp_us: int
    scale: float = Field(gt=0)


class TargetTruth(BaseModel):
    azimuth_bin: int = Field(ge=0)
    range_bin: int = Field(ge=0)
    label: str = "car"


class SceneTruth(BaseModel):
    """Target centre bins per radar frame, in manifest order."""

    frames: list[list[TargetTruth]] = Field(default_factory=list)
