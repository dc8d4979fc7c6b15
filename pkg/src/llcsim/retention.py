"""STT-RAM volatility semantics: retention classes, per-block lifetime
counters, and perfect-refresh accounting.

Each cached block carries a 4-bit counter driven by a global period clock;
the period is the retention time divided by 16.  The counter resets to zero
whenever the block is written and advances at every period boundary; at the
boundary where it would advance past its maximum state the block expires.
A block written at tick t therefore expires at

    expiry = (t // period + 16) * period

which keeps its residency within (15/16, 16/16] of the retention time, and
in particular inside the guaranteed [14/16, 16/16] envelope.

The refresh baseline models a "perfect" refresher: one refresh per completed
retention period since the block's last write or refresh, with no latency
impact and no behavioral change.  Refreshes are settled arithmetically at
write/evict/interval boundaries instead of being simulated one by one.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import Enum, IntEnum

COUNTER_STATES = 16  # 4-bit lifetime counter


class RetentionClass(IntEnum):
    """The four retention groups; the value doubles as the cluster id."""

    R100US = 0
    R1MS = 1
    R10MS = 2
    R100MS = 3

    @property
    def retention_ns(self) -> int:
        return (100_000, 1_000_000, 10_000_000, 100_000_000)[self.value]

    @property
    def cluster_id(self) -> int:
        return self.value

    @property
    def label(self) -> str:
        return ("100us", "1ms", "10ms", "100ms")[self.value]

    @classmethod
    def parse(cls, text: str) -> "RetentionClass":
        t = text.strip().lower().replace("µ", "u")
        for rc in cls:
            if rc.label == t:
                return rc
        raise ValueError(f"unknown retention class {text!r}")


def retention_cycles(rc: RetentionClass, clock_ghz: float = 2.0) -> int:
    return round(rc.retention_ns * clock_ghz)


def period_cycles(rc: RetentionClass, clock_ghz: float = 2.0) -> int:
    return max(1, retention_cycles(rc, clock_ghz) // COUNTER_STATES)


def expiry_tick(write_tick: int, period: int) -> int:
    """First period boundary at which a block written at write_tick expires."""
    return (write_tick // period + COUNTER_STATES) * period


def counter_state(write_tick: int, now: int, period: int) -> int:
    """Current 4-bit counter state of a block written at write_tick."""
    if now < write_tick:
        return 0
    return min(COUNTER_STATES - 1, now // period - write_tick // period)


def completed_periods(origin_tick: int, now: int, retention_cycles_: int) -> int:
    """Full retention periods elapsed since origin_tick (for refresh counts)."""
    if now <= origin_tick:
        return 0
    return (now - origin_tick) // retention_cycles_


class RefreshMode(Enum):
    NONE = "none"  # blocks expire when the retention time elapses
    PERFECT_DRS = "perfect_drs"  # blocks are refreshed in time, forever


@dataclass(frozen=True)
class RefreshModel:
    mode: RefreshMode
    per_refresh_energy_nj: float = 1.311
    # Leakage of the refresh buffer for a 1MB cache; scaled linearly with
    # the configured cache size.
    buffer_leakage_mw: float = 141.425

    def __post_init__(self):
        if self.mode == RefreshMode.PERFECT_DRS and self.per_refresh_energy_nj <= 0:
            raise ValueError("perfect refresh requires positive per-refresh energy")


NO_REFRESH = RefreshModel(RefreshMode.NONE)


@dataclass(frozen=True)
class Expiration:
    address: int
    was_dirty: bool
    bank: int  # global bank index the block resided in
    tick: int


class ExpiryQueue:
    """Min-heap of scheduled block expirations with lazy invalidation.

    Entries are (tick, seq, set_index, way, gen); an entry is stale when the
    slot is empty or the resident block's generation no longer matches.
    """

    __slots__ = ("_heap", "_seq")

    def __init__(self):
        self._heap: list[tuple[int, int, int, int, int]] = []
        self._seq = 0

    def __len__(self):
        return len(self._heap)

    def schedule(self, tick: int, set_index: int, way: int, gen: int) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (tick, self._seq, set_index, way, gen))

    def next_tick(self) -> int | None:
        return self._heap[0][0] if self._heap else None

    def pop_due(self, now: int):
        """Yield (tick, set_index, way, gen) for entries with tick <= now."""
        heap = self._heap
        while heap and heap[0][0] <= now:
            tick, _, set_index, way, gen = heapq.heappop(heap)
            yield tick, set_index, way, gen

    def clear(self) -> None:
        self._heap.clear()
