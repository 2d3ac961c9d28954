"""The step loop: diffusion substeps, mechanics, divisions, storage policy.

One mechanics step runs, in order: per diffusion substep, the cell exchange
and the operator-split solve (which also refreshes the non-empty voxel list
inside its z sweep); then a gradient refresh; the velocity update under the
configured schedule and allocation mode; position integration; a serial
rebin; the serial division pass; and, for the voxel-sorted storage policy, a
periodic resort.  Every region is timed per worker every step, including the
serial ones (attributed to worker 0) and the skipped ones (all-zero rows), so
the timing output always has the same shape.

Results are reproducible by construction: given a config, the final cells,
velocities, densities, and checksum are identical across worker counts,
schedules, traversal modes, allocation modes, and storage orders.
"""

from __future__ import annotations

import hashlib
import struct
import time
from dataclasses import dataclass, field

from .config import RunConfig
from .core import CellContainer, Microenvironment, rebin_cells
from .diffusion import apply_cell_exchange, compute_gradients, lod_step
from .mechanics import check_binning_exact, integrate_positions, update_velocities
from .parallel import WorkerPool
from .population import (
    StorageKind,
    attempt_divisions,
    division_draws,
    locality_metric,
    sort_cells_by_voxel,
)

REGIONS = (
    "solver",
    "exchange",
    "gradients",
    "velocity",
    "integrate",
    "rebin",
    "divide",
    "resort",
)


class RegionAccum:
    """Per-step per-region totals: per-worker stats plus wall elapsed."""

    __slots__ = ("busy", "iterations", "claims", "alloc_events", "dealloc_events",
                 "elapsed", "schedulable_chunks")

    def __init__(self, workers: int):
        self.busy = [0.0] * workers
        self.iterations = [0] * workers
        self.claims = [0] * workers
        self.alloc_events = [0] * workers
        self.dealloc_events = [0] * workers
        self.elapsed = 0.0
        self.schedulable_chunks = 0

    def add_record(self, record) -> None:
        for w, stats in enumerate(record.workers):
            self.busy[w] += stats.busy
            self.iterations[w] += stats.iterations
            self.claims[w] += stats.claims
            self.alloc_events[w] += stats.alloc_events
            self.dealloc_events[w] += stats.dealloc_events
        self.schedulable_chunks += record.schedulable_chunks

    def add_serial(self, seconds: float, iterations: int = 0) -> None:
        self.busy[0] += seconds
        self.iterations[0] += iterations
        self.elapsed += seconds


def state_checksum(container: CellContainer) -> str:
    """Order-independent digest of (id, position, velocity) over all cells."""
    acc = 0
    for cell in container.cells:
        blob = struct.pack(
            "<q6d",
            cell.id,
            cell.position[0], cell.position[1], cell.position[2],
            cell.velocity[0], cell.velocity[1], cell.velocity[2],
        )
        acc ^= int.from_bytes(hashlib.blake2b(blob, digest_size=16).digest(), "little")
    return f"{acc:032x}"


def seed_cells(container: CellContainer, cfg: RunConfig) -> None:
    """Deterministic uniform seeding inside the configured box (whole mesh if unset)."""
    mesh = container.mesh
    if cfg.seed_box:
        x0, y0, z0, x1, y1, z1 = cfg.seed_box
    else:
        (x0, y0, z0), (x1, y1, z1) = mesh.origin, mesh.upper
    for i in range(cfg.cell_count):
        ux, uy, uz = division_draws(cfg.seed ^ 0x5EED, i, 0)
        pos = [
            x0 + ux * (x1 - x0),
            y0 + uy * (y1 - y0),
            z0 + uz * (z1 - z0),
        ]
        mesh.clamp_inside(pos)
        container.new_cell(
            pos,
            radius=cfg.cell_radius,
            repulsion=cfg.repulsion,
            adhesion=cfg.adhesion,
            adhesion_multiplier=cfg.adhesion_multiplier,
            division_rate=cfg.division_rate,
        )
    rebin_cells(container)


@dataclass
class RunResult:
    config: RunConfig
    container: CellContainer
    micro: Microenvironment
    checksum: str
    step_records: list  # one {region: RegionAccum} dict per step
    wall_seconds: float
    final_cell_count: int
    locality: list = field(default_factory=list)  # (step, L) when recorded

    def region_totals(self, region: str) -> RegionAccum:
        total = RegionAccum(self.config.workers)
        for step in self.step_records:
            acc = step[region]
            for w in range(len(total.busy)):
                total.busy[w] += acc.busy[w]
                total.iterations[w] += acc.iterations[w]
                total.claims[w] += acc.claims[w]
                total.alloc_events[w] += acc.alloc_events[w]
                total.dealloc_events[w] += acc.dealloc_events[w]
            total.elapsed += acc.elapsed
            total.schedulable_chunks += acc.schedulable_chunks
        return total


def run_simulation(cfg: RunConfig, record_locality: bool = False) -> RunResult:
    """Execute the configured run; see the module docstring for the step shape."""
    mesh = cfg.mesh()
    micro = Microenvironment(mesh, [cfg.diffusion], [cfg.decay], [cfg.initial_density])
    container = CellContainer(mesh)
    seed_cells(container, cfg)
    params = cfg.interaction_params()
    check_binning_exact(container, mesh, params)
    strat = cfg.strategy
    substeps = cfg.substeps
    resort_every = strat.storage.every
    sorted_storage = strat.storage.kind is StorageKind.VOXEL_SORTED
    if sorted_storage:
        sort_cells_by_voxel(container)

    step_records: list = []
    locality: list = []
    clock = time.perf_counter
    t_run = clock()
    pool = WorkerPool(cfg.workers)
    try:
        for step in range(cfg.steps):
            accs = {region: RegionAccum(cfg.workers) for region in REGIONS}

            for _ in range(substeps):
                t0 = clock()
                rec = apply_cell_exchange(
                    micro, container, cfg.dt_diffusion,
                    cfg.secretion, cfg.uptake, cfg.saturation, pool=pool,
                )
                accs["exchange"].add_record(rec)
                accs["exchange"].elapsed += clock() - t0

                t0 = clock()
                for rec in lod_step(micro, mesh, cfg.dt_diffusion,
                                    strat.traversal, pool, container=container):
                    accs["solver"].add_record(rec)
                accs["solver"].elapsed += clock() - t0

            t0 = clock()
            for rec in compute_gradients(micro, mesh, strat.traversal, pool):
                accs["gradients"].add_record(rec)
            accs["gradients"].elapsed += clock() - t0

            t0 = clock()
            rec = update_velocities(container, mesh, params, strat.schedule,
                                    pool, strat.allocation)
            accs["velocity"].add_record(rec)
            accs["velocity"].elapsed += clock() - t0

            t0 = clock()
            rec = integrate_positions(container, mesh, cfg.dt_mechanics, pool)
            accs["integrate"].add_record(rec)
            accs["integrate"].elapsed += clock() - t0

            t0 = clock()
            rebin_cells(container)
            accs["rebin"].add_serial(clock() - t0, iterations=len(container))

            t0 = clock()
            daughters = attempt_divisions(container, cfg.seed, cfg.dt_mechanics,
                                          mesh, step, cap=cfg.cell_cap)
            accs["divide"].add_serial(clock() - t0, iterations=len(daughters))

            if sorted_storage and (step + 1) % resort_every == 0:
                t0 = clock()
                sort_cells_by_voxel(container)
                accs["resort"].add_serial(clock() - t0, iterations=len(container))

            if record_locality:
                locality.append((step, locality_metric(container, params)))

            step_records.append(accs)
            micro.check_state()
    finally:
        pool.shutdown()

    return RunResult(
        config=cfg,
        container=container,
        micro=micro,
        checksum=state_checksum(container),
        step_records=step_records,
        wall_seconds=clock() - t_run,
        final_cell_count=len(container),
        locality=locality,
    )
