import pytest
from pydantic import ValidationError

from radarcs.allocator import (
    allocate_algo1,
    allocate_algo2,
    budget_limit,
    measurement_count,
    plan_total,
    region_rates,
    top_up_azimuths,
    uniform_plan,
)
from radarcs.errors import ConfigurationError, ParameterError
from radarcs.models import BlockGrid, BlockPlan, BlockRef, RateTable, RegionLabel, SamplingPlan

FULL = BlockGrid()
SMALL = BlockGrid(az_blocks=8, rng_blocks=8, block_az=20, block_rng=25)


def _r2_blocks(n: int) -> list[BlockRef]:
    """First ``n`` R2 blocks of the a=4 {0,1,2,3} geometry, azimuth-major."""
    refs = [BlockRef(az_idx=az, rng_idx=rng) for az in range(4, 8) for rng in range(18)]
    return refs[:n]


def test_measurement_count() -> None:
    assert measurement_count(0.10, 5000) == 500
    assert measurement_count(0.308, 5000) == 1540
    assert measurement_count(0.025, 500) == 13
    assert measurement_count(0.0001, 100) == 1
    assert measurement_count(0.0, 100) == 0


def test_budget_limit() -> None:
    assert budget_limit(FULL, 0.10) == 148000 + 296


def test_uniform_plan() -> None:
    plan = uniform_plan(FULL, 0.10)
    assert {b.m for b in plan.blocks} == {500}
    assert plan_total(plan) == 148000
    assert {b.region for b in plan.blocks} == {RegionLabel.R2}
    assert plan.chosen_azimuths == []


def test_uniform_plan_full_rate_and_tiny_grid() -> None:
    assert {b.m for b in uniform_plan(FULL, 1.0).blocks} == {5000}
    tiny = BlockGrid(az_blocks=2, rng_blocks=2, block_az=10, block_rng=10)
    assert {b.m for b in uniform_plan(tiny, 0.10).blocks} == {10}


def test_uniform_plan_bad_rate() -> None:
    with pytest.raises(ParameterError):
        uniform_plan(FULL, 0.0)


def test_top_up_adds_to_minimum() -> None:
    result = top_up_azimuths({1, 2, 3}, minimum=4, seed=5)
    assert len(result) == 4
    assert result >= {1, 2, 3}


def test_top_up_keeps_large_sets() -> None:
    assert top_up_azimuths({0, 1, 2, 3, 4}, minimum=4, seed=5) == {0, 1, 2, 3, 4}


def test_top_up_is_seeded() -> None:
    a = top_up_azimuths(set(), minimum=4, seed=7)
    assert len(a) == 4
    assert a == top_up_azimuths(set(), minimum=4, seed=7)


def test_top_up_minimum_too_large() -> None:
    with pytest.raises(ParameterError):
        top_up_azimuths(set(), minimum=9, seed=0, az_blocks=8)


def test_algo1_default_grid_totals() -> None:
    assert plan_total(allocate_algo1({0, 1, 2, 3}, FULL)) == 147880
    assert plan_total(allocate_algo1({0, 1, 2, 3, 4}, FULL)) == 147250
    assert plan_total(allocate_algo1({0, 1, 2, 3, 4, 5}, FULL)) == 137080


def test_algo1_rates_per_row() -> None:
    for chosen, r1 in [({0, 1, 2, 3}, 0.308), ({0, 1, 2, 3, 4}, 0.255), ({0, 1, 2, 3, 4, 5}, 0.202)]:
        plan = allocate_algo1(chosen, FULL)
        assert plan.block(BlockRef(az_idx=0, rng_idx=0)).rate == r1
        assert plan.block(BlockRef(az_idx=7, rng_idx=0)).rate == 0.05
        assert plan.block(BlockRef(az_idx=0, rng_idx=18)).rate == 0.025


def test_algo1_regions() -> None:
    plan = allocate_algo1({1, 4, 6, 7}, FULL)
    for b in plan.blocks:
        if b.rng >= 18:
            assert b.region == RegionLabel.R3
        elif b.az in {1, 4, 6, 7}:
            assert b.region == RegionLabel.R1
        else:
            assert b.region == RegionLabel.R2
    assert plan.chosen_azimuths == [1, 4, 6, 7]


def test_algo1_missing_table_row() -> None:
    with pytest.raises(ParameterError, match="exact-budget"):
        allocate_algo1({0, 1, 2}, FULL)


def test_algo1_exact_budget() -> None:
    plan = allocate_algo1({0, 1, 2}, FULL, exact_budget=True)
    assert plan.block(BlockRef(az_idx=0, rng_idx=0)).rate == pytest.approx(106500 / 270000)
    assert plan_total(plan) <= budget_limit(FULL, 0.10)


def test_exact_budget_six_azimuths() -> None:
    r1, r2, r3 = region_rates(6, FULL, RateTable(), 0.10, exact_budget=True)
    assert r1 == pytest.approx(0.2222, abs=1e-4)
    assert (r2, r3) == (0.05, 0.025)


def test_algo1_rejects_bad_azimuth() -> None:
    with pytest.raises(ParameterError):
        allocate_algo1({0, 1, 2, 8}, FULL)


def test_table_mode_overspends_reduced_grid() -> None:
    with pytest.raises(ConfigurationError, match="exact-budget"):
        allocate_algo1({0, 1, 2, 3}, SMALL)


def test_exact_budget_fits_reduced_grid() -> None:
    plan = allocate_algo1({0, 1, 2, 3}, SMALL, exact_budget=True)
    assert plan.block(BlockRef(az_idx=0, rng_idx=0)).m == 150
    assert plan_total(plan) == 3216


def test_rate_table_for_grid() -> None:
    assert RateTable.for_grid(FULL) == RateTable()
    table = RateTable.for_grid(SMALL)
    assert (table.r1_range_blocks, table.reduced_range_blocks) == (4, 3)


def test_rate_table_validation() -> None:
    with pytest.raises(ValidationError):
        RateTable(rows={4: (0.05, 0.05, 0.025)})
    with pytest.raises(ValidationError):
        RateTable(r1_range_blocks=10, reduced_range_blocks=12)


def test_algo2_without_flags() -> None:
    chosen = {0, 1, 2, 3}
    plan = allocate_algo2(chosen, set(), FULL)
    assert plan_total(plan) == 123240
    assert plan_total(plan) < plan_total(allocate_algo1(chosen, FULL))
    assert plan.boosted == []
    dropped = plan.block(BlockRef(az_idx=0, rng_idx=15))
    assert (dropped.region, dropped.rate, dropped.m) == (RegionLabel.R3, 0.0, 0)
    assert plan.block(BlockRef(az_idx=0, rng_idx=13)).region == RegionLabel.R1


def test_algo2_single_flagged_block() -> None:
    ref = BlockRef(az_idx=5, rng_idx=3)
    plan = allocate_algo2({0, 1, 2, 3}, {ref}, FULL)
    boosted = plan.block(ref)
    assert boosted.rate == 0.308
    assert boosted.m == 1540
    assert boosted.boosted
    assert plan.boosted == [ref]


def test_algo2_greedy_exhaustion() -> None:
    flagged = _r2_blocks(25)
    hits = {ref: 100 - i for i, ref in enumerate(flagged)}
    plan = allocate_algo2({0, 1, 2, 3}, set(flagged), FULL, hit_counts=hits)

    full = [plan.block(ref) for ref in flagged[:19]]
    assert all(b.m == 1540 for b in full)
    partial = plan.block(flagged[19])
    assert partial.m == 250 + 130
    assert partial.rate == pytest.approx(0.076)
    assert partial.boosted
    assert all(plan.block(ref).m == 250 and not plan.block(ref).boosted for ref in flagged[20:])
    assert plan_total(plan) == 147880


def test_algo2_priority_follows_hit_counts() -> None:
    flagged = _r2_blocks(25)
    hits = {ref: i for i, ref in enumerate(flagged)}  # last block has the most hits
    plan = allocate_algo2({0, 1, 2, 3}, set(flagged), FULL, hit_counts=hits)
    assert plan.block(flagged[-1]).m == 1540
    assert plan.block(flagged[0]).m == 250


def test_algo2_ties_break_by_position() -> None:
    flagged = _r2_blocks(25)
    plan = allocate_algo2({0, 1, 2, 3}, set(flagged), FULL)
    assert [plan.block(ref).m for ref in flagged[:20]] == [1540] * 19 + [380]


def test_algo2_can_boost_far_and_dropped_blocks() -> None:
    far = BlockRef(az_idx=6, rng_idx=30)
    dropped = BlockRef(az_idx=2, rng_idx=16)
    plan = allocate_algo2({0, 1, 2, 3}, {far, dropped}, FULL)
    assert plan.block(far).m == 1540
    assert plan.block(dropped).m == 1540


def test_algo2_ignores_flagged_r1_blocks() -> None:
    ref = BlockRef(az_idx=0, rng_idx=2)
    plan = allocate_algo2({0, 1, 2, 3}, {ref}, FULL)
    assert not plan.block(ref).boosted
    assert plan_total(plan) == 123240


def test_algo2_monotone_priority_and_budget() -> None:
    flagged = set(_r2_blocks(25)) | {BlockRef(az_idx=7, rng_idx=25)}
    plan = allocate_algo2({0, 1, 2, 3}, flagged, FULL)
    r1 = [b.rate for b in plan.blocks if b.region == RegionLabel.R1]
    boosted = [b.rate for b in plan.blocks if b.boosted]
    r2 = [b.rate for b in plan.blocks if b.region == RegionLabel.R2 and not b.boosted]
    r3 = [b.rate for b in plan.blocks if b.region == RegionLabel.R3 and not b.boosted]
    assert min(r1) >= max(boosted)
    assert min(boosted) >= max(r2)
    assert min(r2) >= max(r3)
    assert plan_total(plan) <= 1.003 * 0.10 * FULL.frame_size


def test_algo2_dominates_algo1_on_flagged_blocks() -> None:
    chosen = {0, 2, 4, 6}
    flagged = {BlockRef(az_idx=a, rng_idx=r) for a in range(8) for r in (5, 20, 30)}
    one = allocate_algo1(chosen, FULL)
    two = allocate_algo2(chosen, flagged, FULL)
    for ref in flagged:
        if one.block(ref).region != RegionLabel.R1:
            assert two.block(ref).rate >= one.block(ref).rate


def test_allocation_is_deterministic() -> None:
    flagged = set(_r2_blocks(10))
    a = allocate_algo2({0, 1, 2, 3}, flagged, FULL)
    b = allocate_algo2({0, 1, 2, 3}, flagged, FULL)
    assert a.model_dump() == b.model_dump()


def test_plan_total_of_empty_plan() -> None:
    grid = BlockGrid(az_blocks=2, rng_blocks=2, block_az=10, block_rng=10)
    blocks = [BlockPlan(az=r.az_idx, rng=r.rng_idx, region=RegionLabel.R3, rate=0.0, m=0) for r in grid.refs()]
    assert plan_total(SamplingPlan(grid=grid, blocks=blocks)) == 0


def test_plan_rejects_missing_blocks() -> None:
    grid = BlockGrid(az_blocks=2, rng_blocks=2, block_az=10, block_rng=10)
    with pytest.raises(ValidationError):
        SamplingPlan(grid=grid, blocks=[BlockPlan(az=0, rng=0, region=RegionLabel.R2, rate=0.1, m=10)])
