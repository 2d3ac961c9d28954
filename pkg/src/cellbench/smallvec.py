"""Small 3-vector arithmetic in two evaluation modes, with allocation accounting.

The temporary-allocating mode builds a fresh list for every vector-valued
operator, the way naive operator overloading on a dynamic vector type does;
the in-place mode writes results into caller-provided storage and never
touches the allocator.  Both modes execute the same arithmetic expressions in
the same order, so their numeric results are bit-identical.

Allocation accounting is semantic, not an allocator hook: the counter records
one allocation event per vector-valued operator application and one per
named-result binding (``assign``), which makes the accounting portable and
exactly testable.  The temporary-allocating mode still performs real dynamic
acquisitions (a new list per event), so wall-clock allocation overhead is also
observable.  Scalar-valued operators (dot, norm) record no events in either
mode.  Deallocation events mirror allocation events because every temporary
created by this layer dies within the region that created it.
"""

from __future__ import annotations

import enum
import math


class AllocationMode(enum.Enum):
    TEMPORARY_ALLOCATING = "temporary_allocating"
    IN_PLACE = "in_place"


class AllocationCounter:
    """Per-worker event counter; merge totals at region end, never share live."""

    __slots__ = ("alloc_events", "dealloc_events")

    def __init__(self):
        self.alloc_events = 0
        self.dealloc_events = 0

    def reset(self) -> None:
        self.alloc_events = 0
        self.dealloc_events = 0

    def snapshot(self) -> tuple:
        return (self.alloc_events, self.dealloc_events)

    @staticmethod
    def merge(counters) -> tuple:
        """Total (alloc, dealloc) events over per-worker counters."""
        alloc = sum(c.alloc_events for c in counters)
        dealloc = sum(c.dealloc_events for c in counters)
        return (alloc, dealloc)


class TempAllocVectorOps:
    """Every vector-valued operator allocates fresh storage and records one event.

    The ``out`` arguments are accepted for signature compatibility and ignored,
    mirroring overloaded operators that cannot reuse a destination.
    """

    __slots__ = ("counter",)
    mode = AllocationMode.TEMPORARY_ALLOCATING

    def __init__(self, counter: AllocationCounter):
        self.counter = counter

    def add(self, a, b, out=None):
        c = self.counter
        c.alloc_events += 1
        c.dealloc_events += 1
        return [a[0] + b[0], a[1] + b[1], a[2] + b[2]]

    def sub(self, a, b, out=None):
        c = self.counter
        c.alloc_events += 1
        c.dealloc_events += 1
        return [a[0] - b[0], a[1] - b[1], a[2] - b[2]]

    def scale(self, s, a, out=None):
        c = self.counter
        c.alloc_events += 1
        c.dealloc_events += 1
        return [s * a[0], s * a[1], s * a[2]]

    def dot(self, a, b) -> float:
        return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]

    def norm(self, a) -> float:
        return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])

    def assign(self, dst, src) -> None:
        """Bind a result to a named destination: one fresh copy, one event."""
        c = self.counter
        c.alloc_events += 1
        c.dealloc_events += 1
        tmp = [src[0], src[1], src[2]]
        dst[0] = tmp[0]
        dst[1] = tmp[1]
        dst[2] = tmp[2]


class InPlaceVectorOps:
    """Operators write into caller-provided storage; zero allocation events."""

    __slots__ = ("counter",)
    mode = AllocationMode.IN_PLACE

    def __init__(self, counter: AllocationCounter):
        self.counter = counter

    def add(self, a, b, out):
        out[0] = a[0] + b[0]
        out[1] = a[1] + b[1]
        out[2] = a[2] + b[2]
        return out

    def sub(self, a, b, out):
        out[0] = a[0] - b[0]
        out[1] = a[1] - b[1]
        out[2] = a[2] - b[2]
        return out

    def scale(self, s, a, out):
        out[0] = s * a[0]
        out[1] = s * a[1]
        out[2] = s * a[2]
        return out

    def dot(self, a, b) -> float:
        return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]

    def norm(self, a) -> float:
        return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])

    def assign(self, dst, src) -> None:
        dst[0] = src[0]
        dst[1] = src[1]
        dst[2] = src[2]


def vector_ops(mode: AllocationMode, counter: AllocationCounter):
    """Ops facade for the given mode, bound to a per-worker counter."""
    if mode is AllocationMode.TEMPORARY_ALLOCATING:
        return TempAllocVectorOps(counter)
    if mode is AllocationMode.IN_PLACE:
        return InPlaceVectorOps(counter)
    raise ValueError(f"unknown allocation mode {mode!r}")


def axpy_into(out, a: float, v1, v2) -> None:
    """out = a * (v1 + v2) into caller storage; allocation-free in every mode.

    Evaluation order matches the operator form (sum first, then scaling), so
    the result is bit-identical to the temporary-allocating evaluation of
    ``scale(a, add(v1, v2))``.
    """
    out[0] = a * (v1[0] + v2[0])
    out[1] = a * (v1[1] + v2[1])
    out[2] = a * (v1[2] + v2[2])
