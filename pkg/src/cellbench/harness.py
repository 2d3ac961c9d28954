"""Sweep runner, equivalence verifier, and report writers.

A sweep runs every (strategy, worker count) cell several times, reports the
median wall time and its spread, and derives two speedup views: each
strategy against its own single-worker median (scaling) and each cell
against a designated baseline strategy at the same worker count (the
is-the-fix-worth-it view).  Cells that fail are recorded and skipped; a
sweep never dies half way.

`verify_equivalence` makes the correctness assumption behind all strategy
comparisons explicit: two configs that differ only in strategy or worker
count must produce bit-identical cells, velocities, and density fields.
"""

from __future__ import annotations

import csv
import os
import statistics
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .config import RunConfig, StrategyConfig, parse_strategy_literal
from .errors import ConfigError
from .metrics import (
    RegionTiming,
    UndefinedMetricError,
    aggregate_timings,
    efficiency_report,
    timing_from_record,
)
from .parallel import WorkerPool
from .simulate import REGIONS, RunResult, run_simulation

#: Measurement-variability threshold quoted in sweep reports.
SPREAD_WARN = 0.05


def run_id_for(strategy: StrategyConfig, workers: int, repeat: int = 0) -> str:
    return f"{strategy.literal()}/w{workers}/r{repeat}"


# -- report writers ----------------------------------------------------------


def write_timings_csv(path: str, result: RunResult, run_id: str) -> None:
    """One row per step x region x worker (or per region x worker in aggregate mode)."""
    mode = result.config.timings
    if mode == "off":
        return
    workers = result.config.workers
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "run_id", "step", "region", "worker",
            "busy_s", "iterations", "alloc_events", "claims",
        ])
        if mode == "aggregate":
            for region in REGIONS:
                total = result.region_totals(region)
                for w in range(workers):
                    writer.writerow([
                        run_id, "all", region, w,
                        f"{total.busy[w]:.9f}", total.iterations[w],
                        total.alloc_events[w], total.claims[w],
                    ])
            return
        for step, accs in enumerate(result.step_records):
            for region in REGIONS:
                acc = accs[region]
                for w in range(workers):
                    writer.writerow([
                        run_id, step, region, w,
                        f"{acc.busy[w]:.9f}", acc.iterations[w],
                        acc.alloc_events[w], acc.claims[w],
                    ])


def region_timing(result: RunResult, region: str) -> RegionTiming:
    """Whole-run aggregate timing of one region."""
    total = result.region_totals(region)
    return RegionTiming(
        region=region,
        busy=tuple(total.busy),
        elapsed=total.elapsed,
        iterations=tuple(total.iterations),
    )


def efficiency_rows(result: RunResult, run_id: str,
                    base: RunResult | None = None) -> list[dict]:
    """Per-region efficiency report rows; regions with no busy time are skipped."""
    strat = result.config.strategy
    rows = []
    step_region = [region_timing(result, region) for region in REGIONS]
    per_run = [t for t in step_region if max(t.busy) > 0.0]
    all_timing = aggregate_timings(per_run, region="all") if per_run else None
    for timing in step_region + ([all_timing] if all_timing else []):
        if timing is None or max(timing.busy) == 0.0:
            continue
        base_timing = None
        if base is not None:
            if timing.region == "all":
                per_base = [
                    t for t in (region_timing(base, r) for r in REGIONS)
                    if max(t.busy) > 0.0
                ]
                base_timing = aggregate_timings(per_base, region="all") if per_base else None
            else:
                candidate = region_timing(base, timing.region)
                base_timing = candidate if max(candidate.busy) > 0.0 else None
        try:
            report = efficiency_report(timing, base_timing)
        except UndefinedMetricError:
            continue
        total = (result.region_totals(timing.region)
                 if timing.region != "all" else None)
        alloc = (sum(total.alloc_events) if total is not None
                 else sum(sum(result.region_totals(r).alloc_events) for r in REGIONS))
        rows.append({
            "run_id": run_id,
            "region": report.region,
            "workers": report.workers,
            "allocation": strat.literal().split("/")[0],
            "traversal": strat.literal().split("/")[1],
            "schedule": strat.literal().split("/")[2],
            "storage": strat.literal().split("/")[3],
            "lb": f"{report.load_balance:.6f}",
            "comm_eff": f"{report.communication_efficiency:.6f}",
            "par_eff": f"{report.parallel_efficiency:.6f}",
            "comp_scal": _fmt(report.computation_scalability),
            "instr_scal": _fmt(report.instruction_scalability),
            "ipc_scal": _fmt(report.ipc_scalability),
            "freq_scal": _fmt(report.frequency_scalability),
            "mean_busy_s": f"{report.mean_busy:.9f}",
            "max_busy_s": f"{report.max_busy:.9f}",
            "elapsed_s": f"{report.elapsed:.9f}",
            "alloc_events": alloc,
        })
    return rows


EFFICIENCY_FIELDS = [
    "run_id", "region", "workers", "allocation", "traversal", "schedule",
    "storage", "lb", "comm_eff", "par_eff", "comp_scal", "instr_scal",
    "ipc_scal", "freq_scal", "mean_busy_s", "max_busy_s", "elapsed_s",
    "alloc_events",
]


def _fmt(value) -> str:
    return "" if value is None else f"{value:.6f}"


def write_efficiency_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=EFFICIENCY_FIELDS)
        writer.writeheader()
        writer.writerows(rows)


# -- sweeps ------------------------------------------------------------------


@dataclass
class SweepCell:
    strategy: str
    workers: int
    wall_seconds: list = field(default_factory=list)
    median: float = 0.0
    spread: float = 0.0
    checksum: str = ""
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


@dataclass
class SweepResult:
    cells: list
    baseline: str
    efficiency_rows: list

    def cell(self, strategy: str, workers: int) -> SweepCell | None:
        for c in self.cells:
            if c.strategy == strategy and c.workers == workers:
                return c
        return None

    def speedup_vs_one_worker(self, strategy: str, workers: int) -> float | None:
        one = self.cell(strategy, 1)
        cur = self.cell(strategy, workers)
        if not (one and cur and one.ok and cur.ok and cur.median > 0):
            return None
        return one.median / cur.median

    def speedup_vs_baseline(self, strategy: str, workers: int) -> float | None:
        base = self.cell(self.baseline, workers)
        cur = self.cell(strategy, workers)
        if not (base and cur and base.ok and cur.ok and cur.median > 0):
            return None
        return base.median / cur.median


def sweep(cfg: RunConfig, strategies: list[str] | None = None,
          workers_list: list[int] | None = None, repeats: int | None = None,
          baseline: str | None = None) -> SweepResult:
    """Run the strategy x workers matrix; failures are recorded, not raised."""
    strategies = list(strategies or cfg.sweep_strategies or [cfg.strategy.literal()])
    workers_list = list(workers_list or cfg.sweep_workers)
    repeats = repeats or cfg.sweep_repeats
    baseline = baseline or strategies[0]
    if baseline not in strategies:
        strategies.insert(0, baseline)
    cells = []
    eff_rows: list[dict] = []
    for literal in strategies:
        strategy = parse_strategy_literal(literal)
        strat_base: RunResult | None = None
        for workers in sorted(workers_list):
            cell = SweepCell(strategy=literal, workers=workers)
            cells.append(cell)
            run_cfg = replace(cfg, strategy=strategy, workers=workers)
            result = None
            for rep in range(repeats):
                try:
                    result = run_simulation(run_cfg)
                except Exception as exc:  # sweep survives partial failures
                    cell.error = f"{type(exc).__name__}: {exc}"
                    break
                cell.wall_seconds.append(result.wall_seconds)
                if cell.checksum and result.checksum != cell.checksum:
                    cell.error = "nondeterministic checksum across repeats"
                    break
                cell.checksum = result.checksum
            if cell.error or result is None:
                continue
            cell.median = statistics.median(cell.wall_seconds)
            if cell.median > 0 and len(cell.wall_seconds) > 1:
                cell.spread = (max(cell.wall_seconds) - min(cell.wall_seconds)) / cell.median
            # scalability base: the same strategy at its lowest worker count,
            # which scores 1.0 against itself by definition
            if strat_base is None:
                strat_base = result
            eff_rows.extend(efficiency_rows(
                result, run_id_for(strategy, workers, repeats - 1), base=strat_base,
            ))
    return SweepResult(cells=cells, baseline=baseline, efficiency_rows=eff_rows)


def write_speedup_tsv(path: str, result: SweepResult) -> None:
    """Plot-ready table: one row per worker count, one column pair per strategy."""
    strategies = []
    workers = []
    for cell in result.cells:
        if cell.strategy not in strategies:
            strategies.append(cell.strategy)
        if cell.workers not in workers:
            workers.append(cell.workers)
    workers.sort()
    with open(path, "w", encoding="utf-8") as fh:
        header = ["workers"]
        for s in strategies:
            header.append(f"{s}:speedup")
            header.append(f"{s}:vs_base")
        fh.write("\t".join(header) + "\n")
        for w in workers:
            row = [str(w)]
            for s in strategies:
                up = result.speedup_vs_one_worker(s, w)
                vs = result.speedup_vs_baseline(s, w)
                row.append("" if up is None else f"{up:.4f}")
                row.append("" if vs is None else f"{vs:.4f}")
            fh.write("\t".join(row) + "\n")


# -- cross-strategy equivalence ----------------------------------------------


@dataclass
class EquivalenceReport:
    passed: bool
    detail: str
    checksum_a: str
    checksum_b: str


def _first_divergence(ra: RunResult, rb: RunResult) -> str:
    if ra.final_cell_count != rb.final_cell_count:
        return (f"cell counts differ: {ra.final_cell_count} vs {rb.final_cell_count}")
    ids_a = sorted(c.id for c in ra.container.cells)
    ids_b = sorted(c.id for c in rb.container.cells)
    if ids_a != ids_b:
        return "cell id sets differ"
    for cid in ids_a:
        ca, cb = ra.container.by_id[cid], rb.container.by_id[cid]
        if ca.position != cb.position:
            return (f"cell {cid} position differs: {ca.position} vs {cb.position}")
        if ca.velocity != cb.velocity:
            return (f"cell {cid} velocity differs: {ca.velocity} vs {cb.velocity}")
    if not np.array_equal(ra.micro.densities, rb.micro.densities):
        idx = np.argwhere(ra.micro.densities != rb.micro.densities)[0]
        return f"density differs first at (substrate, voxel) = {tuple(idx)}"
    if not np.array_equal(ra.micro.gradients, rb.micro.gradients):
        idx = np.argwhere(ra.micro.gradients != rb.micro.gradients)[0]
        return f"gradient differs first at (substrate, voxel, axis) = {tuple(idx)}"
    return ""


def verify_equivalence(cfg_a: RunConfig, cfg_b: RunConfig) -> EquivalenceReport:
    """Run both configs and require bit-identical physical state."""
    norm_a = replace(cfg_a, strategy=StrategyConfig(), workers=1)
    norm_b = replace(cfg_b, strategy=StrategyConfig(), workers=1)
    if norm_a != norm_b:
        raise ConfigError(
            "equivalence check requires configs identical up to strategy/workers"
        )
    ra = run_simulation(cfg_a)
    rb = run_simulation(cfg_b)
    detail = _first_divergence(ra, rb)
    passed = detail == "" and ra.checksum == rb.checksum
    if not detail and not passed:
        detail = "checksums differ on identical fields (checksum logic error)"
    return EquivalenceReport(
        passed=passed,
        detail=detail or "bit-identical final state",
        checksum_a=ra.checksum,
        checksum_b=rb.checksum,
    )


# -- synthetic uniform-chunk workload ------------------------------------------


def uniform_chunk_benchmark(n_chunks: int, workers: int,
                            chunk_seconds: float = 0.002) -> RegionTiming:
    """Measured load balance of N equal-cost chunks under the static split.

    Chunk cost is a sleep, so chunks overlap on any core count and the
    measurement exercises only the scheduler's split, which is what the
    analytic model predicts.
    """
    def body(lo, hi, ctx):
        for _ in range(lo, hi):
            time.sleep(chunk_seconds)

    with WorkerPool(workers) as pool:
        record = pool.run_static(n_chunks, body)
    return timing_from_record("uniform_chunks", record)


def ensure_out_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
