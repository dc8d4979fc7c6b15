"""Banked LLC simulation engine.

Integrates the set-associative engine, the physical bank organization, the
volatility layer, and incremental energy/latency accounting into one
trace-driven machine.  The same engine runs every system:

  * SRAM            - uniform SRAM banks, no volatility.
  * uniform STT-RAM - all banks one retention class; with a perfect-refresh
                      model this is the refresh baseline, without one the
                      blocks expire.
  * clustered       - bank cluster c carries retention class c; blocks
                      expire when their lifetime counter runs out.

Energy is accrued per event at the parameters in force, so per-bank ledgers
stay exact across reconfigurations.  Expiration-induced refetches are
charged to the bank where the block expired, so short-retention banks carry
their own refetch cost.  Reconfiguration (geometry or mapping change)
flushes the cache and charges the fixed context-switch cost into the
interval that follows it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .banks import (
    BANKS_PER_CLUSTER,
    MappingTable,
    TOTAL_BANKS,
    VirtualBank,
    build_layout,
)
from .cache import (
    BANK_BYTES,
    Block,
    CacheConfig,
    CacheState,
    HIT,
    RECONFIG_ENERGY_NJ,
    RECONFIG_LATENCY_CYCLES,
)
from .energy import (
    DEVICE_SRAM,
    EnergyLedger,
    ParamTable,
    SYSTEM_ROW,
    SimStats,
    leakage_nj,
    stt_device,
)
from .retention import (
    Expiration,
    ExpiryQueue,
    NO_REFRESH,
    RefreshMode,
    RefreshModel,
    RetentionClass,
    expiry_tick,
    retention_cycles,
)
from .trace import MemoryAccess

MODE_STABLE = "stable"
MODE_EXPIRE = "expire"
MODE_REFRESH = "refresh"


def sram_devices() -> list[str]:
    return [DEVICE_SRAM] * TOTAL_BANKS


def uniform_stt_devices(rc: RetentionClass) -> list[str]:
    return [stt_device(rc)] * TOTAL_BANKS


def clustered_devices() -> list[str]:
    return [stt_device(RetentionClass(g // BANKS_PER_CLUSTER)) for g in range(TOTAL_BANKS)]


@dataclass
class SimOptions:
    clock_ghz: float = 2.0
    miss_penalty_cycles: int = 100
    seed: int = 1
    refresh: RefreshModel = NO_REFRESH
    # Force a uniform hit latency instead of the per-table values.
    hit_latency_override: int | None = None
    # Extend the final interval's wall time to at least this many cycles.
    min_wall_cycles: int = 0
    # Called as hook(access, hit, bank_global, retention_cycles) per access.
    access_hook: object = None
    # Assert on every read hit that the block's age is within retention.
    stale_check: bool = False


@dataclass
class IntervalResult:
    stats: SimStats
    ledger: EnergyLedger
    latency_cycles: int
    wall_cycles: int
    end_tick: int

    @property
    def energy_nj(self) -> float:
        return self.ledger.total_nj()


class _Accum:
    """Per-interval accumulators; folded into a ledger at interval close."""

    __slots__ = ("stats", "dyn_nj", "refresh_nj", "reconfig_nj", "bank_counters")

    def __init__(self, powered: list[int]):
        self.stats = SimStats()
        self.dyn_nj = {g: 0.0 for g in powered}
        self.refresh_nj = {g: 0.0 for g in powered}
        self.reconfig_nj = 0.0
        self.bank_counters = {g: self.stats.bank(g) for g in powered}

    def adopt_bank(self, g: int):
        # A flush may charge banks that were powered under the old mapping.
        if g not in self.bank_counters:
            self.dyn_nj[g] = 0.0
            self.refresh_nj[g] = 0.0
            self.bank_counters[g] = self.stats.bank(g)


class BankedCache:
    """One simulated LLC instance driven by a trace."""

    def __init__(
        self,
        params: ParamTable,
        devices: list[str],
        config: CacheConfig,
        mapping: MappingTable,
        options: SimOptions,
    ):
        if len(devices) != TOTAL_BANKS:
            raise ValueError(f"need {TOTAL_BANKS} bank devices, got {len(devices)}")
        self.params = params
        self.devices = devices
        self.options = options
        self.config = None
        self.mapping = None
        self.layout: list[VirtualBank] = []
        self.state = CacheState(config, options.seed)
        self._queue = ExpiryQueue()
        self._expired_from: dict[int, int] = {}  # absolute line number -> bank
        self._gen = 0
        self._segment_start: int | None = None
        self._last_tick = 0
        self.run_stats = SimStats()
        self.run_ledger = EnergyLedger()
        self.intervals: list[IntervalResult] = []
        if all(d == DEVICE_SRAM for d in devices):
            self.mode = MODE_STABLE
        elif options.refresh.mode == RefreshMode.PERFECT_DRS:
            self.mode = MODE_REFRESH
            classes = {d for d in devices if d != DEVICE_SRAM}
            if len(classes) != 1:
                raise ValueError("perfect refresh requires a uniform retention class")
            rc = next(rc for rc in RetentionClass if stt_device(rc) in classes)
            self._refresh_retention = retention_cycles(rc, options.clock_ghz)
        else:
            self.mode = MODE_EXPIRE
        self._install_tables(config, mapping)
        self._iv = _Accum(self._powered)

    @property
    def powered(self) -> list[int]:
        """Global indices of the powered banks, ascending."""
        return list(self._powered)

    # -- configuration ----------------------------------------------------

    def _install_tables(self, config: CacheConfig, mapping: MappingTable) -> None:
        self.config = config
        self.layout = build_layout(config)
        mapping.validate_covers(self.layout)
        self.mapping = mapping
        sets = config.sets
        way_bytes = sets * config.line_bytes
        self._sets_per_range = BANK_BYTES // config.line_bytes if way_bytes >= BANK_BYTES else sets
        n_ranges = sets // self._sets_per_range
        self._bank_at = [[-1] * config.ways for _ in range(n_ranges)]
        for vb in self.layout:
            g = mapping.bank_of(vb.vbank_id).global_index
            r = vb.set_lo // self._sets_per_range
            for way in range(vb.way_lo, vb.way_hi + 1):
                self._bank_at[r][way] = g
        self._powered = sorted(mapping.bank_of(vb.vbank_id).global_index for vb in self.layout)
        n = TOTAL_BANKS
        self._we = [0.0] * n
        self._he = [0.0] * n
        self._hl = [0] * n
        self._wl = [0] * n
        self._leak = {}
        self._period = [0] * n
        self._retention = [0] * n
        clock = self.options.clock_ghz
        for g in self._powered:
            device = self.devices[g]
            p = self.params.get(device, config)
            self._we[g] = p.write_energy_nj
            self._he[g] = p.hit_energy_nj
            self._hl[g] = (
                self.options.hit_latency_override
                if self.options.hit_latency_override is not None
                else p.hit_latency_cycles
            )
            self._wl[g] = p.write_latency_cycles
            self._leak[g] = p.leakage_mw / config.bank_count
            if device != DEVICE_SRAM:
                rc = next(c for c in RetentionClass if stt_device(c) == device)
                self._retention[g] = retention_cycles(rc, clock)
                self._period[g] = max(1, self._retention[g] // 16)
        # Refresh-buffer leakage scales with the configured cache size
        # relative to the 1MB reference point.
        if self.mode == MODE_REFRESH:
            self._buffer_mw = (
                self.options.refresh.buffer_leakage_mw * config.size_bytes / (1 << 20)
            )
        else:
            self._buffer_mw = 0.0

    def apply(self, config: CacheConfig, mapping: MappingTable, tick: int | None = None) -> bool:
        """Switch to a new configuration and/or mapping.

        Any actual change flushes the cache (dirty lines become writebacks,
        charged at the outgoing parameters) and charges the fixed
        reconfiguration cost into the current interval accumulator.
        Returns True when a change was applied.
        """
        if config == self.config and mapping == self.mapping:
            return False
        now = self._last_tick if tick is None else tick
        iv = self._iv
        if self.mode == MODE_REFRESH:
            self._settle_all_refreshes(now)
        for set_index, way, block in list(self.state.iter_blocks()):
            if block.dirty:
                g = self._bank_at[set_index // self._sets_per_range][way]
                iv.adopt_bank(g)
                iv.bank_counters[g].writebacks += 1
                iv.dyn_nj[g] += self._we[g]
                iv.stats.writebacks += 1
        self.state.flush()
        if config != self.state.config:
            self.state.set_config(config)
        self._queue.clear()
        self._expired_from.clear()
        iv.reconfig_nj += RECONFIG_ENERGY_NJ
        iv.stats.reconfig_count += 1
        iv.stats.reconfig_latency_cycles += RECONFIG_LATENCY_CYCLES
        iv.stats.latency_cycles += RECONFIG_LATENCY_CYCLES
        self._install_tables(config, mapping)
        for g in self._powered:
            iv.adopt_bank(g)
        return True

    # -- volatility --------------------------------------------------------

    def _schedule_expiry(self, block: Block, set_index: int, way: int, g: int, tick: int) -> None:
        self._gen += 1
        block.gen = self._gen
        self._queue.schedule(expiry_tick(tick, self._period[g]), set_index, way, self._gen)

    def advance_time(self, to_tick: int) -> list[Expiration]:
        """Expire every block whose counter runs out at a boundary <= to_tick.

        Dirty expirees are counted as writebacks to main memory.  Returns
        the expirations in boundary order.
        """
        if self.mode != MODE_EXPIRE:
            return []
        out = []
        iv = self._iv
        state = self.state
        for btick, set_index, way, gen in self._queue.pop_due(to_tick):
            block = state.get(set_index, way)
            if block is None or block.gen != gen:
                continue
            state.invalidate(set_index, way)
            g = self._bank_at[set_index // self._sets_per_range][way]
            bc = iv.bank_counters[g]
            bc.expirations += 1
            iv.stats.expirations += 1
            if block.dirty:
                bc.writebacks += 1
                iv.stats.writebacks += 1
                iv.dyn_nj[g] += self._we[g]
            line = block.tag * self.config.sets + set_index
            self._expired_from[line] = g
            out.append(
                Expiration(
                    address=line * self.config.line_bytes,
                    was_dirty=block.dirty,
                    bank=g,
                    tick=btick,
                )
            )
        return out

    def _settle_block_refresh(self, block: Block, g: int, now: int) -> None:
        k = (now - block.refresh_origin) // self._refresh_retention
        if k > 0:
            iv = self._iv
            iv.bank_counters[g].refreshes += k
            iv.stats.refreshes += k
            iv.refresh_nj[g] += k * self.options.refresh.per_refresh_energy_nj
            block.refresh_origin += k * self._refresh_retention

    def _settle_all_refreshes(self, now: int) -> None:
        spr = self._sets_per_range
        for set_index, way, block in self.state.iter_blocks():
            self._settle_block_refresh(block, self._bank_at[set_index // spr][way], now)

    def refresh_accounting(self, to_tick: int) -> dict:
        """Settle perfect-refresh counts for all live blocks up to to_tick.

        Returns the refresh count and energy accrued since the previous
        settlement point, plus the buffer leakage over the elapsed wall time
        of the current interval segment.
        """
        if self.mode != MODE_REFRESH:
            return {"refresh_count": 0, "refresh_energy_nj": 0.0, "buffer_leakage_nj": 0.0}
        before_count = self._iv.stats.refreshes
        before_nj = sum(self._iv.refresh_nj.values())
        self._settle_all_refreshes(to_tick)
        start = self._segment_start if self._segment_start is not None else to_tick
        wall = max(0, to_tick - start)
        return {
            "refresh_count": self._iv.stats.refreshes - before_count,
            "refresh_energy_nj": sum(self._iv.refresh_nj.values()) - before_nj,
            "buffer_leakage_nj": leakage_nj(self._buffer_mw, wall, self.options.clock_ghz),
        }

    # -- the access path ---------------------------------------------------

    def access(self, acc: MemoryAccess) -> None:
        tick = acc.tick
        if self._segment_start is None:
            self._segment_start = tick
        self._last_tick = tick
        mode = self.mode
        if mode == MODE_EXPIRE and self._queue.next_tick() is not None \
                and self._queue.next_tick() <= tick:
            self.advance_time(tick)
        is_write = acc.kind == "W"
        kind, set_index, way, block, victim = self.state.access_raw(
            acc.address, is_write, tick, acc.core_id
        )
        g = self._bank_at[set_index // self._sets_per_range][way]
        iv = self._iv
        stats = iv.stats
        bc = iv.bank_counters[g]
        hit = kind == HIT
        if hit:
            if is_write:
                if mode == MODE_REFRESH:
                    self._settle_block_refresh(block, g, tick)
                    block.refresh_origin = tick
                elif mode == MODE_EXPIRE:
                    self._schedule_expiry(block, set_index, way, g, tick)
                stats.write_hits += 1
                bc.writes += 1
                stats.latency_cycles += self._wl[g]
                iv.dyn_nj[g] += self._we[g]
            else:
                if self.options.stale_check and mode == MODE_EXPIRE:
                    age = tick - block.write_tick
                    if age > self._retention[g]:
                        raise AssertionError(
                            f"stale read at tick {tick}: age {age} exceeds "
                            f"retention {self._retention[g]} in bank {g}"
                        )
                stats.read_hits += 1
                bc.read_hits += 1
                stats.latency_cycles += self._hl[g]
                iv.dyn_nj[g] += self._he[g]
        else:
            if victim is not None:
                if mode == MODE_REFRESH:
                    self._settle_block_refresh(victim, g, tick)
                if victim.dirty:
                    bc.writebacks += 1
                    stats.writebacks += 1
                    iv.dyn_nj[g] += self._we[g]
            if is_write:
                stats.write_misses += 1
            else:
                stats.read_misses += 1
                stats.fills += 1
            stats.latency_cycles += self.options.miss_penalty_cycles
            # The install writes the array once; if the line previously
            # expired, the refetch write is charged to the expiring bank.
            attr_g = g
            if mode == MODE_EXPIRE and self._expired_from:
                line = acc.address // self.config.line_bytes
                owner = self._expired_from.pop(line, None)
                if owner is not None:
                    attr_g = owner
                    iv.bank_counters[owner].expiration_misses += 1
            abc = iv.bank_counters[attr_g] if attr_g != g else bc
            abc.writes += 1
            iv.dyn_nj[attr_g] += self._we[attr_g]
            stats.latency_cycles += self._wl[g]
            if mode == MODE_REFRESH:
                block.refresh_origin = tick
            elif mode == MODE_EXPIRE:
                self._schedule_expiry(block, set_index, way, g, tick)
        hook = self.options.access_hook
        if hook is not None:
            hook(acc, hit, g, self._retention[g] if mode == MODE_EXPIRE else None)

    # -- intervals ----------------------------------------------------------

    def close_interval(self, end_tick: int | None = None) -> IntervalResult:
        """Close the current accounting interval and fold it into run totals."""
        end = self._last_tick if end_tick is None else end_tick
        if self.mode == MODE_EXPIRE:
            self.advance_time(end)
        elif self.mode == MODE_REFRESH:
            self._settle_all_refreshes(end)
        iv = self._iv
        start = self._segment_start if self._segment_start is not None else end
        wall = max(0, end - start)
        iv.stats.wall_cycles = wall
        ledger = EnergyLedger()
        clock = self.options.clock_ghz
        for g in sorted(iv.dyn_nj):
            ledger.add(g, "dynamic_nj", iv.dyn_nj[g])
            if iv.refresh_nj[g]:
                ledger.add(g, "refresh_nj", iv.refresh_nj[g])
            if g in self._leak:
                ledger.add(g, "leakage_nj", leakage_nj(self._leak[g], wall, clock))
        if self._buffer_mw:
            ledger.add(SYSTEM_ROW, "buffer_leakage_nj", leakage_nj(self._buffer_mw, wall, clock))
        if iv.reconfig_nj:
            ledger.add(SYSTEM_ROW, "reconfig_nj", iv.reconfig_nj)
        result = IntervalResult(
            stats=iv.stats,
            ledger=ledger,
            latency_cycles=iv.stats.latency_cycles,
            wall_cycles=wall,
            end_tick=end,
        )
        self.run_stats.add(iv.stats)
        self.run_ledger.merge(ledger)
        self.intervals.append(result)
        self._segment_start = end
        self._iv = _Accum(self._powered)
        return result


class TraceCursor:
    """Sequential reader over a trace."""

    def __init__(self, accesses: list[MemoryAccess]):
        self._accesses = accesses
        self._pos = 0

    @property
    def done(self) -> bool:
        return self._pos >= len(self._accesses)

    @property
    def position(self) -> int:
        return self._pos

    def peek(self) -> MemoryAccess:
        return self._accesses[self._pos]

    def take(self) -> MemoryAccess:
        acc = self._accesses[self._pos]
        self._pos += 1
        return acc


def run_interval(
    sim: BankedCache, cursor: TraceCursor, instr_limit: int | None
) -> tuple[IntervalResult | None, bool]:
    """Feed the simulator until the instruction threshold is crossed.

    The interval spans whole accesses and ends at the first access whose
    instructions_retired reaches start + instr_limit (that access is
    included).  With instr_limit None the rest of the trace is consumed.
    Returns (result, complete); complete is False when the trace ran out
    before the threshold.
    """
    if cursor.done:
        return None, False
    threshold = None
    if instr_limit is not None:
        threshold = cursor.peek().instructions_retired + instr_limit
    complete = threshold is None
    last_tick = None
    while not cursor.done:
        acc = cursor.take()
        sim.access(acc)
        last_tick = acc.tick
        if threshold is not None and acc.instructions_retired >= threshold:
            complete = True
            break
    end = last_tick
    if cursor.done and sim.options.min_wall_cycles:
        start = sim._segment_start if sim._segment_start is not None else 0
        end = max(end, start + sim.options.min_wall_cycles)
    return sim.close_interval(end), complete
