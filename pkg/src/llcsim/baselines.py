"""Reference systems: an SRAM LLC and the uniform-retention refresh baseline.

The refresh baseline (DRS) keeps one retention class on every bank and
models a perfect refresher: no refresh-induced misses, no unnecessary
refreshes, no latency impact - only the refresh energy and the refresh
buffer's leakage are charged.  Its default retention class is 10ms.

Either baseline can optionally run the configuration tuning descent first
(using its own parameters) before the steady-state phase, mirroring the
adaptable-configuration comparison mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .banks import MappingTable, build_layout, identity_mapping
from .cache import CacheConfig
from .energy import EnergyLedger, ParamTable, SimStats
from .retention import NO_REFRESH, RefreshMode, RefreshModel, RetentionClass
from .simulator import (
    BankedCache,
    SimOptions,
    TraceCursor,
    run_interval,
    sram_devices,
    uniform_stt_devices,
)
from .trace import MemoryAccess
from .tuner import (
    ConfigTuningResult,
    DEFAULT_SPACE,
    DesignSpace,
    TuningIntervalSpec,
    tune_configuration,
)

SYSTEM_SRAM = "sram"
SYSTEM_DRS = "drs"

BASE_CONFIG = CacheConfig(1 << 20, 64, 16)


@dataclass(frozen=True)
class BaselineKind:
    device: str  # SYSTEM_SRAM or SYSTEM_DRS
    retention: RetentionClass = RetentionClass.R10MS
    adaptable_config: bool = False

    def __post_init__(self):
        if self.device not in (SYSTEM_SRAM, SYSTEM_DRS):
            raise ValueError(f"unknown baseline device {self.device!r}")

    def label(self) -> str:
        if self.device == SYSTEM_SRAM:
            return "sram"
        return f"drs-{self.retention.label}"


@dataclass
class BaselineRunResult:
    kind: BaselineKind
    sim: BankedCache
    final_config: CacheConfig
    final_mapping: MappingTable
    config_tuning: ConfigTuningResult | None
    tuning_log: list = field(default_factory=list)

    @property
    def stats(self) -> SimStats:
        return self.sim.run_stats

    @property
    def ledger(self) -> EnergyLedger:
        return self.sim.run_ledger


def _baseline_sim(
    kind: BaselineKind,
    params: ParamTable,
    config: CacheConfig,
    options: SimOptions,
    refresh: RefreshModel | None,
) -> BankedCache:
    if kind.device == SYSTEM_SRAM:
        devices = sram_devices()
        opts_refresh = NO_REFRESH
    else:
        devices = uniform_stt_devices(kind.retention)
        opts_refresh = refresh if refresh is not None else RefreshModel(RefreshMode.PERFECT_DRS)
    opts = SimOptions(
        clock_ghz=options.clock_ghz,
        miss_penalty_cycles=options.miss_penalty_cycles,
        seed=options.seed,
        refresh=opts_refresh,
        hit_latency_override=options.hit_latency_override,
        min_wall_cycles=options.min_wall_cycles,
        access_hook=options.access_hook,
        stale_check=options.stale_check,
    )
    return BankedCache(params, devices, config, identity_mapping(build_layout(config)), opts)


def run_baseline(
    kind: BaselineKind,
    trace: list[MemoryAccess],
    params: ParamTable,
    options: SimOptions | None = None,
    config: CacheConfig = BASE_CONFIG,
    refresh: RefreshModel | None = None,
    interval: TuningIntervalSpec = TuningIntervalSpec(),
    space: DesignSpace = DEFAULT_SPACE,
) -> BaselineRunResult:
    """Run one baseline over a trace.

    With adaptable_config the configuration tuning descent runs first,
    consuming tuning intervals from the trace and charging reconfiguration
    costs, exactly as the adaptive system does; otherwise the fixed config
    (default: the 1MB/64B/16-way base) is used throughout.
    """
    if options is None:
        options = SimOptions()
    tuning_log: list = []
    cfg_result = None
    if kind.adaptable_config:
        start = CacheConfig(space.sizes[0], space.line_sizes[0], space.ways[0])
        sim = _baseline_sim(kind, params, start, options, refresh)
        cursor = TraceCursor(trace)
        n = interval.instructions_per_interval

        def sample_config(candidate: CacheConfig) -> float | None:
            if cursor.done:
                return None
            sim.apply(candidate, identity_mapping(build_layout(candidate)))
            result, complete = run_interval(sim, cursor, n)
            if result is not None:
                tuning_log.append(("config", candidate.label(), result, None))
            return float(result.latency_cycles) if complete else None

        cfg_result = tune_configuration(sample_config, space)
        final = cfg_result.best_config
        sim.apply(final, identity_mapping(build_layout(final)))
        if not cursor.done:
            result, _ = run_interval(sim, cursor, None)
            tuning_log.append(("steady", final.label(), result, None))
    else:
        final = config
        sim = _baseline_sim(kind, params, final, options, refresh)
        cursor = TraceCursor(trace)
        if cursor.done:
            # Empty trace: still account leakage over any requested wall time.
            sim._segment_start = 0
            sim.close_interval(sim.options.min_wall_cycles)
        else:
            result, _ = run_interval(sim, cursor, None)
            tuning_log.append(("steady", final.label(), result, None))
    return BaselineRunResult(
        kind=kind,
        sim=sim,
        final_config=sim.config,
        final_mapping=sim.mapping,
        config_tuning=cfg_result,
        tuning_log=tuning_log,
    )
