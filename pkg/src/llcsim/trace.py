"""LLC access traces: record format, file I/O, and synthetic workload generation.

Trace file format (UTF-8 text, one access per line):

    tick,core_id,{R|W},0xADDRESS,instructions_retired

Lines starting with '#' are comments and are skipped.  A '.gz' suffix selects
gzip compression.  Ticks and instruction counts must be non-decreasing in
file order.

The synthetic generator produces per-core streams whose same-address reuse
gaps fall into configurable wall-time bands (short / medium / long), so a
workload's block lifetimes can be steered into any of the cache's retention
groups by construction.
"""

from __future__ import annotations

import gzip
import heapq
import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple

READ = "R"
WRITE = "W"


class MemoryAccess(NamedTuple):
    tick: int
    core_id: int
    kind: str  # READ or WRITE
    address: int
    instructions_retired: int

    @property
    def is_write(self) -> bool:
        return self.kind == WRITE


class TraceError(ValueError):
    """Malformed trace file or invalid workload specification."""


class GapBand(Enum):
    """Same-address reuse-gap bands, in wall-clock nanoseconds.

    The bands straddle the four retention groups (100us / 1ms / 10ms /
    100ms): short gaps stay under 100us, medium gaps sit in the 1-10ms
    window, long gaps exceed 100ms.
    """

    SHORT = (2_000, 80_000)
    MEDIUM = (1_500_000, 8_000_000)
    LONG = (120_000_000, 200_000_000)

    @property
    def min_ns(self) -> int:
        return self.value[0]

    @property
    def max_ns(self) -> int:
        return self.value[1]

    @classmethod
    def parse(cls, name: str) -> "GapBand":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise TraceError(f"unknown gap band {name!r} (expected short/medium/long)")


@dataclass(frozen=True)
class WorkloadSpec:
    """Parameters of one core's synthetic access stream."""

    footprint_bytes: int
    write_fraction: float
    gap_weights: dict  # GapBand -> weight, weights sum to 1
    length: int
    seed: int
    core_id: int = 0
    instruction_rate: float = 1.0  # instructions retired per cycle
    base_address: int | None = None  # default: core_id << 32
    block_bytes: int = 64

    def validate(self) -> None:
        if self.block_bytes <= 0:
            raise TraceError("block_bytes: must be positive")
        if self.footprint_bytes < self.block_bytes:
            raise TraceError("footprint_bytes: footprint must cover at least one line")
        if not 0.0 <= self.write_fraction <= 1.0:
            raise TraceError("write_fraction: must lie in [0, 1]")
        if self.length <= 0:
            raise TraceError("length: must be positive")
        if self.instruction_rate <= 0:
            raise TraceError("instruction_rate: must be positive")
        if self.core_id < 0:
            raise TraceError("core_id: must be non-negative")
        if not self.gap_weights:
            raise TraceError("gap_weights: at least one band required")
        total = 0.0
        for band, weight in self.gap_weights.items():
            if not isinstance(band, GapBand):
                raise TraceError(f"gap_weights: key {band!r} is not a GapBand")
            if weight < 0:
                raise TraceError("gap_weights: negative weight")
            total += weight
        if abs(total - 1.0) > 1e-9:
            raise TraceError(f"gap_weights: weights sum to {total}, expected 1")

    @property
    def resolved_base(self) -> int:
        if self.base_address is not None:
            return self.base_address
        return self.core_id << 32


# Warmup window (cycles) over which each line's first access is scattered.
_FIRST_TOUCH_WINDOW = 10_000


def generate_workload(spec: WorkloadSpec, cycle_period_ns: float = 0.5) -> list[MemoryAccess]:
    """Generate one core's access stream.

    Deterministic for a fixed (spec, cycle_period_ns).  Every line of the
    footprint is assigned a gap band; consecutive accesses to the same line
    are separated by a gap drawn from that band.  Writes are spread evenly
    through the stream so the realized write fraction is exact to 1/length.
    """
    spec.validate()
    if cycle_period_ns <= 0:
        raise TraceError("cycle_period_ns: must be positive")

    rng = random.Random(spec.seed)
    n_lines = spec.footprint_bytes // spec.block_bytes
    base = spec.resolved_base

    # Contiguous band ranges by largest-remainder apportionment.
    bands = list(spec.gap_weights.items())
    counts = [int(w * n_lines) for _, w in bands]
    remainders = sorted(
        range(len(bands)),
        key=lambda i: (bands[i][1] * n_lines - counts[i], -i),
        reverse=True,
    )
    deficit = n_lines - sum(counts)
    for i in remainders[:deficit]:
        counts[i] += 1
    band_of_line = []
    for (band, _), count in zip(bands, counts):
        band_of_line.extend([band] * count)

    def draw_gap(band: GapBand) -> int:
        gap_ns = rng.uniform(band.min_ns, band.max_ns)
        return max(1, round(gap_ns / cycle_period_ns))

    heap: list[tuple[int, int]] = []
    for line in range(n_lines):
        first = rng.randrange(_FIRST_TOUCH_WINDOW)
        heapq.heappush(heap, (first, line))

    out: list[MemoryAccess] = []
    wf = spec.write_fraction
    written = 0
    for i in range(spec.length):
        tick, line = heapq.heappop(heap)
        want = int((i + 1) * wf)
        if want > written:
            kind = WRITE
            written += 1
        else:
            kind = READ
        address = base + line * spec.block_bytes
        instrs = int(tick * spec.instruction_rate)
        out.append(MemoryAccess(tick, spec.core_id, kind, address, instrs))
        heapq.heappush(heap, (tick + draw_gap(band_of_line[line]), line))
    return out


def merge_traces(streams: Iterable[list[MemoryAccess]]) -> list[MemoryAccess]:
    """Merge per-core streams into one trace ordered by tick.

    The merge is stable: ties are broken by stream order, and each stream's
    internal order is preserved.  instructions_retired is recomputed as the
    running sum of every stream's latest per-core count, so it is globally
    non-decreasing.
    """
    streams = [list(s) for s in streams]
    last_instr = [0] * len(streams)
    heap = []
    for si, stream in enumerate(streams):
        if stream:
            heap.append((stream[0].tick, si, 0))
    heapq.heapify(heap)
    out: list[MemoryAccess] = []
    while heap:
        tick, si, idx = heapq.heappop(heap)
        acc = streams[si][idx]
        last_instr[si] = acc.instructions_retired
        out.append(acc._replace(instructions_retired=sum(last_instr)))
        if idx + 1 < len(streams[si]):
            heapq.heappush(heap, (streams[si][idx + 1].tick, si, idx + 1))
    return out


def _open_trace(path, mode):
    path = str(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def read_trace(path) -> list[MemoryAccess]:
    """Parse a trace file; raises TraceError with a 1-based line number."""
    out: list[MemoryAccess] = []
    prev_tick = None
    prev_instr = None
    with _open_trace(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise TraceError(f"line {lineno}: expected 5 fields, got {len(parts)}")
            try:
                tick = int(parts[0])
                core = int(parts[1])
                kind = parts[2].strip()
                address = int(parts[3], 16)
                instrs = int(parts[4])
            except ValueError as exc:
                raise TraceError(f"line {lineno}: {exc}")
            if kind not in (READ, WRITE):
                raise TraceError(f"line {lineno}: kind must be R or W, got {kind!r}")
            if tick < 0 or core < 0 or address < 0 or instrs < 0:
                raise TraceError(f"line {lineno}: negative field")
            if prev_tick is not None and tick < prev_tick:
                raise TraceError(f"line {lineno}: tick {tick} regresses below {prev_tick}")
            if prev_instr is not None and instrs < prev_instr:
                raise TraceError(
                    f"line {lineno}: instructions_retired {instrs} regresses below {prev_instr}"
                )
            prev_tick = tick
            prev_instr = instrs
            out.append(MemoryAccess(tick, core, kind, address, instrs))
    return out


def write_trace(accesses: Iterable[MemoryAccess], path) -> None:
    with _open_trace(path, "w") as fh:
        for acc in accesses:
            fh.write(
                f"{acc.tick},{acc.core_id},{acc.kind},0x{acc.address:X},"
                f"{acc.instructions_retired}\n"
            )
