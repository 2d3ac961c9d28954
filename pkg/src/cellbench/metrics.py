"""Hierarchical parallel-efficiency metrics over per-worker region timings.

The model is multiplicative: parallel efficiency splits into load balance
(mean busy over max busy) and communication efficiency (max busy over region
wall time, absorbing fork/join and scheduling overhead).  Against a base-case
run, computation scalability splits further into instruction, IPC, and
frequency scalability when a counter provider supplies per-worker
instruction/cycle deltas; without counters only the time-based computation
scalability is defined.

`chunk_lb_model` is the closed-form load balance of statically even-split
uniform chunks: N/(T*ceil(N/T)).  It predicts the staircase scalability of
coarse-grained loops (75 chunks over tens of workers) and the near-flat
profile after collapsing to thousands of chunks.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .errors import DomainError, InconsistentTraceError, UndefinedMetricError

Counters = tuple[tuple[int, int], ...]  # per-worker (instructions, cycles)


@dataclass(frozen=True)
class RegionTiming:
    """One instrumented region: per-worker busy seconds inside one wall-time span."""

    region: str
    busy: tuple[float, ...]
    elapsed: float
    iterations: Optional[tuple[int, ...]] = None
    counters: Optional[Counters] = None

    def __post_init__(self):
        if len(self.busy) < 1:
            raise InconsistentTraceError("region timing needs at least one worker")
        if any(b < 0.0 for b in self.busy):
            raise InconsistentTraceError("negative busy time in region %r" % self.region)
        if self.elapsed < max(self.busy):
            raise InconsistentTraceError(
                "region %r elapsed %.9f below max busy %.9f"
                % (self.region, self.elapsed, max(self.busy))
            )
        if self.iterations is not None and len(self.iterations) != len(self.busy):
            raise InconsistentTraceError("iteration record does not cover all workers")
        if self.counters is not None and len(self.counters) != len(self.busy):
            raise InconsistentTraceError("counters must cover all workers or be absent")

    @property
    def workers(self) -> int:
        return len(self.busy)

    @property
    def total_busy(self) -> float:
        return sum(self.busy)


def timing_from_record(region: str, record, counters: Optional[Counters] = None) -> RegionTiming:
    """Lift a pool RegionRecord into a RegionTiming."""
    return RegionTiming(
        region=region,
        busy=tuple(w.busy for w in record.workers),
        elapsed=record.elapsed,
        iterations=tuple(w.iterations for w in record.workers),
        counters=counters,
    )


def aggregate_timings(timings: Sequence[RegionTiming], region: str = "all") -> RegionTiming:
    """Time-weighted aggregate: per-worker busy and elapsed sum over regions."""
    if not timings:
        raise UndefinedMetricError("cannot aggregate zero regions")
    workers = timings[0].workers
    if any(t.workers != workers for t in timings):
        raise InconsistentTraceError("aggregation requires a fixed worker count")
    busy = tuple(sum(t.busy[w] for t in timings) for w in range(workers))
    elapsed = sum(t.elapsed for t in timings)
    counters: Optional[Counters] = None
    if all(t.counters is not None for t in timings):
        counters = tuple(
            (
                sum(t.counters[w][0] for t in timings),
                sum(t.counters[w][1] for t in timings),
            )
            for w in range(workers)
        )
    iterations = None
    if all(t.iterations is not None for t in timings):
        iterations = tuple(sum(t.iterations[w] for t in timings) for w in range(workers))
    return RegionTiming(region=region, busy=busy, elapsed=elapsed,
                        iterations=iterations, counters=counters)


# -- the efficiency hierarchy ------------------------------------------------


def load_balance(t: RegionTiming) -> float:
    peak = max(t.busy)
    if peak == 0.0:
        raise UndefinedMetricError("load balance undefined for all-zero busy times")
    # summation rounding can push mean a hair past max when all workers tie
    return min(1.0, (t.total_busy / t.workers) / peak)


def communication_efficiency(t: RegionTiming) -> float:
    if t.elapsed <= 0.0:
        raise UndefinedMetricError("communication efficiency needs elapsed > 0")
    return min(1.0, max(t.busy) / t.elapsed)


def parallel_efficiency(t: RegionTiming) -> float:
    return load_balance(t) * communication_efficiency(t)


@dataclass(frozen=True)
class Scalabilities:
    computation_scalability: float
    global_efficiency: float
    instruction_scalability: Optional[float] = None
    ipc_scalability: Optional[float] = None
    frequency_scalability: Optional[float] = None


def _sum_counters(t: RegionTiming) -> tuple[int, int]:
    instr = sum(c[0] for c in t.counters)
    cycles = sum(c[1] for c in t.counters)
    return instr, cycles


def scalabilities(base: RegionTiming, cur: RegionTiming) -> Scalabilities:
    """Base-case-relative scalability components; counter terms only when both traces carry counters."""
    if cur.total_busy == 0.0 or base.total_busy == 0.0:
        raise UndefinedMetricError("computation scalability undefined for zero busy time")
    comp = base.total_busy / cur.total_busy
    glob = parallel_efficiency(cur) * comp
    if base.counters is None or cur.counters is None:
        return Scalabilities(computation_scalability=comp, global_efficiency=glob)
    bi, bc = _sum_counters(base)
    ci, cc = _sum_counters(cur)
    if ci == 0 or bc == 0 or cc == 0 or bi == 0:
        raise UndefinedMetricError("scalability with zero instruction or cycle totals")
    instr_scal = bi / ci
    ipc_scal = (ci / cc) / (bi / bc)
    freq_scal = (cc / cur.total_busy) / (bc / base.total_busy)
    return Scalabilities(
        computation_scalability=comp,
        global_efficiency=glob,
        instruction_scalability=instr_scal,
        ipc_scalability=ipc_scal,
        frequency_scalability=freq_scal,
    )


@dataclass(frozen=True)
class EfficiencyReport:
    """The derived metric values for one region at one worker count."""

    region: str
    workers: int
    load_balance: float
    communication_efficiency: float
    parallel_efficiency: float
    mean_busy: float
    max_busy: float
    elapsed: float
    computation_scalability: Optional[float] = None
    global_efficiency: Optional[float] = None
    instruction_scalability: Optional[float] = None
    ipc_scalability: Optional[float] = None
    frequency_scalability: Optional[float] = None


def efficiency_report(cur: RegionTiming, base: Optional[RegionTiming] = None) -> EfficiencyReport:
    lb = load_balance(cur)
    comm = communication_efficiency(cur)
    scal = scalabilities(base, cur) if base is not None else None
    return EfficiencyReport(
        region=cur.region,
        workers=cur.workers,
        load_balance=lb,
        communication_efficiency=comm,
        parallel_efficiency=lb * comm,
        mean_busy=cur.total_busy / cur.workers,
        max_busy=max(cur.busy),
        elapsed=cur.elapsed,
        computation_scalability=scal.computation_scalability if scal else None,
        global_efficiency=scal.global_efficiency if scal else None,
        instruction_scalability=scal.instruction_scalability if scal else None,
        ipc_scalability=scal.ipc_scalability if scal else None,
        frequency_scalability=scal.frequency_scalability if scal else None,
    )


# -- analytic chunk-granularity model ----------------------------------------


def chunk_lb_model(n_chunks: int, workers: int) -> float:
    """Load balance of N uniform chunks statically even-split over T workers."""
    if n_chunks < 1 or workers < 1:
        raise DomainError("chunk model needs N >= 1 and T >= 1")
    per_worker = -(-n_chunks // workers)
    return n_chunks / (workers * per_worker)


def chunk_speedup_model(n_chunks: int, workers: int) -> float:
    """Modeled speedup T*LB = N/ceil(N/T) of the same schedule.

    Computed in the N/ceil form so worker counts sharing a ceiling land on the
    same plateau value bit-for-bit.
    """
    if n_chunks < 1 or workers < 1:
        raise DomainError("chunk model needs N >= 1 and T >= 1")
    per_worker = -(-n_chunks // workers)
    return n_chunks / per_worker


# -- counter providers ---------------------------------------------------------


class CounterProvider(ABC):
    """Source of per-worker (instructions, cycles) deltas for a region."""

    @property
    @abstractmethod
    def provides_counters(self) -> bool: ...

    @abstractmethod
    def read(self, region: str, workers: int) -> Optional[Counters]: ...


class NullCounterProvider(CounterProvider):
    """No hardware access: yields absent counters, never zeros."""

    @property
    def provides_counters(self) -> bool:
        return False

    def read(self, region: str, workers: int) -> Optional[Counters]:
        return None


class SyntheticCounterProvider(CounterProvider):
    """Test injection: counters from a dict keyed by region, or a callable."""

    def __init__(self, source):
        if not callable(source):
            mapping = dict(source)
            source = lambda region, workers: mapping.get(region)
        self._source = source

    @property
    def provides_counters(self) -> bool:
        return True

    def read(self, region: str, workers: int) -> Optional[Counters]:
        got = self._source(region, workers)
        if got is None:
            return None
        counters = tuple((int(i), int(c)) for i, c in got)
        if len(counters) != workers:
            raise InconsistentTraceError("synthetic counters must cover all workers")
        return counters
