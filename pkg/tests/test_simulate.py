"""Step-loop orchestration: reproducibility, region records, and checksums."""

import dataclasses

import pytest

import cellbench as cb
from cellbench import REGIONS, RunConfig, run_simulation, seed_cells, state_checksum


def tiny_config(**over):
    base = dict(
        nx=5, ny=5, nz=5, cell_count=30, steps=4, seed=3,
        seed_box=(10.0, 10.0, 10.0, 90.0, 90.0, 90.0),
        sweep_workers=(1, 2), sweep_repeats=2,
    )
    base.update(over)
    return RunConfig(**base)


def test_zero_step_run_returns_the_seeded_state():
    cfg = tiny_config(steps=0)
    result = run_simulation(cfg)
    assert result.step_records == []
    assert result.final_cell_count == 30

    container = cb.CellContainer(cfg.mesh())
    seed_cells(container, cfg)
    assert result.checksum == state_checksum(container)


def test_runs_are_reproducible():
    cfg = tiny_config()
    a = run_simulation(cfg)
    b = run_simulation(cfg)
    assert a.checksum == b.checksum
    assert run_simulation(tiny_config(seed=4)).checksum != a.checksum


def test_checksum_ignores_storage_order_but_not_state():
    result = run_simulation(tiny_config(steps=2))
    ref = state_checksum(result.container)
    result.container.cells.reverse()
    assert state_checksum(result.container) == ref
    result.container.cells[0].velocity[1] += 1e-9
    assert state_checksum(result.container) != ref


def test_worker_count_does_not_change_the_checksum():
    checks = {w: run_simulation(tiny_config(workers=w)).checksum
              for w in (1, 3)}
    assert checks[1] == checks[3]


def test_every_region_is_recorded_every_step():
    result = run_simulation(tiny_config())
    assert len(result.step_records) == 4
    for accs in result.step_records:
        assert set(accs) == set(REGIONS)
        # inactive regions still report, as zeros
        assert sum(accs["divide"].iterations) == 0
        assert accs["resort"].elapsed == 0.0
        assert sum(accs["velocity"].iterations) == 30
        assert sum(accs["rebin"].iterations) == 30


def test_division_growth_is_accounted():
    cfg = tiny_config(division_rate=0.4, steps=6, cell_cap=5000)
    result = run_simulation(cfg)
    assert result.final_cell_count > 30
    assert result.final_cell_count == len(result.container.cells)
    divided = sum(sum(accs["divide"].iterations)
                  for accs in result.step_records)
    assert divided == result.final_cell_count - 30


def test_substeps_multiply_solver_dispatches():
    cfg = tiny_config(dt_mechanics=0.2, dt_diffusion=0.1, steps=1)
    assert cfg.substeps == 2
    result = run_simulation(cfg)
    accs = result.step_records[0]
    # outer traversal on a 5^3 mesh: 5 + 5 + 5 slabs per sweep pass
    assert accs["solver"].schedulable_chunks == 2 * 15
    assert accs["gradients"].schedulable_chunks == 5  # once per step


def test_resort_cadence_follows_the_period():
    cfg = tiny_config(
        steps=5,
        strategy=cb.parse_strategy_literal("inplace/outer/cell_static/sorted(2)"),
    )
    result = run_simulation(cfg)
    active = [i for i, accs in enumerate(result.step_records)
              if sum(accs["resort"].iterations) > 0]
    assert active == [1, 3]


def test_locality_recording():
    result = run_simulation(tiny_config(steps=3), record_locality=True)
    assert [step for step, _ in result.locality] == [0, 1, 2]
    assert all(isinstance(val, float) for _, val in result.locality)


def test_region_totals_accumulate_across_steps():
    result = run_simulation(tiny_config())
    total = result.region_totals("velocity")
    assert sum(total.iterations) == 4 * 30
    assert total.elapsed >= max(total.busy)


def test_binning_guard_blocks_oversized_cells():
    with pytest.raises(cb.DomainError):
        run_simulation(tiny_config(cell_radius=9.0))  # reach 22.5 > 20 um edge


def test_capacity_cap_aborts_the_run():
    cfg = tiny_config(division_rate=3.0, steps=10, cell_cap=40)
    with pytest.raises(cb.CapacityError):
        run_simulation(cfg)
