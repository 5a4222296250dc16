"""Per-block sampling plans: uniform baseline, camera-guided and CFAR-boosted."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping

import numpy as np

from radarcs.errors import ConfigurationError, ParameterError
from radarcs.models import BlockGrid, BlockPlan, BlockRef, RateTable, RegionLabel, SamplingPlan


def measurement_count(rate: float, block_size: int) -> int:
    """Round half up; any nonzero rate gets at least one measurement."""
    if rate <= 0:
        return 0
    return max(1, int(math.floor(rate * block_size + 0.5 + 1e-9)))


def budget_limit(grid: BlockGrid, budget_fraction: float) -> int:
    """Largest plan total the budget allows, including one rounding unit per block."""
    return math.ceil(budget_fraction * grid.frame_size - 1e-9) + grid.n_blocks


def plan_total(plan: SamplingPlan) -> int:
    return plan.total


def _check_chosen(chosen: Iterable[int], grid: BlockGrid) -> set[int]:
    chosen = set(chosen)
    bad = sorted(a for a in chosen if not 0 <= a < grid.az_blocks)
    if bad:
        raise ParameterError(f"azimuth blocks {bad} outside [0, {grid.az_blocks})")
    return chosen


def _check_budget(plan: SamplingPlan, exact_budget: bool) -> SamplingPlan:
    limit = budget_limit(plan.grid, plan.budget_fraction)
    if plan.total > limit:
        hint = "" if exact_budget else "; the rate table does not fit this grid, use exact-budget mode"
        raise ConfigurationError(f"plan needs {plan.total} measurements but the budget allows {limit}{hint}")
    return plan


def region_rates(
    a: int,
    grid: BlockGrid,
    table: RateTable,
    budget_fraction: float,
    exact_budget: bool = False,
) -> tuple[float, float, float]:
    """(r1, r2, r3) for ``a`` chosen azimuth blocks.

    Exact-budget mode keeps r2/r3 fixed and solves r1 so the three regions of
    the camera-guided geometry spend the whole budget.
    """
    if not exact_budget:
        row = table.rates_for(a)
        if row is None:
            raise ParameterError(
                f"no rate table row for {a} chosen azimuth blocks (have {sorted(table.rows)}); "
                "use exact-budget mode"
            )
        return row

    r2, r3 = table.exact_r2, table.exact_r3
    near = min(table.r1_range_blocks, grid.rng_blocks)
    bs = grid.block_size
    n_r1 = a * near * bs
    n_r2 = (grid.az_blocks - a) * near * bs
    n_r3 = grid.az_blocks * (grid.rng_blocks - near) * bs
    if n_r1 == 0:
        return r2, r2, r3
    r1 = min(1.0, (budget_fraction * grid.frame_size - r2 * n_r2 - r3 * n_r3) / n_r1)
    if r1 <= r2:
        raise ConfigurationError(
            f"budget {budget_fraction} leaves r1={r1:.4f} for {a} chosen azimuths, "
            f"not above r2={r2}"
        )
    return r1, r2, r3


def uniform_plan(grid: BlockGrid, rate: float) -> SamplingPlan:
    if not 0 < rate <= 1:
        raise ParameterError(f"rate must lie in (0, 1], got {rate}")
    m = measurement_count(rate, grid.block_size)
    blocks = [
        BlockPlan(az=ref.az_idx, rng=ref.rng_idx, region=RegionLabel.R2, rate=rate, m=m)
        for ref in grid.refs()
    ]
    return SamplingPlan(grid=grid, budget_fraction=rate, blocks=blocks)


def top_up_azimuths(chosen: Iterable[int], minimum: int = 4, seed: int = 0, az_blocks: int = 8) -> set[int]:
    """Add seeded random azimuth blocks until at least ``minimum`` are chosen."""
    chosen = set(chosen)
    if minimum > az_blocks:
        raise ParameterError(f"minimum {minimum} exceeds {az_blocks} azimuth blocks")
    if any(not 0 <= a < az_blocks for a in chosen):
        raise ParameterError(f"chosen azimuths {sorted(chosen)} outside [0, {az_blocks})")
    if len(chosen) >= minimum:
        return chosen
    pool = np.array(sorted(set(range(az_blocks)) - chosen))
    extra = np.random.default_rng(seed).choice(pool, size=minimum - len(chosen), replace=False)
    return chosen | {int(a) for a in extra}


def allocate_algo1(
    chosen_azimuths: Iterable[int],
    grid: BlockGrid,
    table: RateTable | None = None,
    budget_fraction: float = 0.10,
    exact_budget: bool = False,
) -> SamplingPlan:
    """Camera-guided plan: chosen azimuths are sampled densely up to ``r1_range_blocks``."""
    chosen = _check_chosen(chosen_azimuths, grid)
    table = table or RateTable.for_grid(grid)
    r1, r2, r3 = region_rates(len(chosen), grid, table, budget_fraction, exact_budget)
    near = table.r1_range_blocks
    bs = grid.block_size

    blocks = []
    for ref in grid.refs():
        if ref.rng_idx >= near:
            region, rate = RegionLabel.R3, r3
        elif ref.az_idx in chosen:
            region, rate = RegionLabel.R1, r1
        else:
            region, rate = RegionLabel.R2, r2
        blocks.append(
            BlockPlan(az=ref.az_idx, rng=ref.rng_idx, region=region, rate=rate, m=measurement_count(rate, bs))
        )
    plan = SamplingPlan(
        grid=grid, budget_fraction=budget_fraction, chosen_azimuths=sorted(chosen), blocks=blocks
    )
    return _check_budget(plan, exact_budget)


def allocate_algo2(
    chosen_azimuths: Iterable[int],
    flagged: Iterable[BlockRef],
    grid: BlockGrid,
    table: RateTable | None = None,
    budget_fraction: float = 0.10,
    hit_counts: Mapping[BlockRef, int] | None = None,
    exact_budget: bool = False,
) -> SamplingPlan:
    """CFAR-boosted plan.

    R1 shrinks to ``reduced_range_blocks``; the measurements the chosen
    azimuths give up are spent raising flagged blocks to the R1 rate, most
    CFAR hits first. Dropped blocks keep rate 0 unless boosted.
    """
    chosen = _check_chosen(chosen_azimuths, grid)
    table = table or RateTable.for_grid(grid)
    r1, r2, r3 = region_rates(len(chosen), grid, table, budget_fraction, exact_budget)
    near, reduced = table.r1_range_blocks, table.reduced_range_blocks
    bs = grid.block_size
    c1, c2 = measurement_count(r1, bs), measurement_count(r2, bs)

    plans: dict[BlockRef, BlockPlan] = {}
    saved = 0
    for ref in grid.refs():
        if ref.az_idx in chosen and ref.rng_idx < reduced:
            region, rate = RegionLabel.R1, r1
        elif ref.az_idx in chosen and ref.rng_idx < near:
            region, rate = RegionLabel.R3, 0.0
            saved += c1
        elif ref.rng_idx < near:
            region, rate = RegionLabel.R2, r2
        else:
            region, rate = RegionLabel.R3, r3
        plans[ref] = BlockPlan(
            az=ref.az_idx, rng=ref.rng_idx, region=region, rate=rate, m=measurement_count(rate, bs)
        )

    hits = hit_counts or {}
    candidates = sorted(
        (ref for ref in set(flagged) if grid.contains(ref) and plans[ref].region != RegionLabel.R1),
        key=lambda ref: (-hits.get(ref, 0), ref.az_idx, ref.rng_idx),
    )
    for ref in candidates:
        if saved <= 0:
            break
        base = plans[ref]
        cost = c1 - base.m
        if cost <= saved:
            plans[ref] = base.model_copy(update={"rate": r1, "m": c1, "boosted": True})
            saved -= cost
            continue
        m = base.m + saved
        if m >= c2:
            plans[ref] = base.model_copy(update={"rate": m / bs, "m": m, "boosted": True})
        break

    plan = SamplingPlan(
        grid=grid,
        budget_fraction=budget_fraction,
        chosen_azimuths=sorted(chosen),
        blocks=[plans[ref] for ref in grid.refs()],
    )
    return _check_budget(plan, exact_budget)
