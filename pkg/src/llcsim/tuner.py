"""Runtime tuning: configuration search and retention-time assignment.

Configuration tuning starts from the maximum configuration (1MB, 64B lines,
16 ways) and walks the parameters in order of energy impact - size, then
line size, then associativity - halving each parameter while the sampled
interval latency strictly improves and stopping at the first
non-improvement.  Later parameters explore from the retained best
configuration, so at most 1 + 3 + 2 + 4 = 10 intervals are ever sampled.

Retention tuning samples four rotation sets (virtual bank i visits cluster
(i + set) % 4), records each virtual bank's observed per-bank EDP under
every cluster, then assigns banks greedily in ascending vbank order: each
takes its minimum-EDP cluster among clusters that still have free banks,
popping the lowest-index free bank.  Ties resolve to the lower cluster id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .banks import (
    BANKS_PER_CLUSTER,
    CLUSTER_COUNT,
    MappingTable,
    PhysicalBankId,
    VirtualBank,
    build_layout,
    rotation_mapping,
)
from .cache import CacheConfig, VALID_LINES, VALID_SIZES, VALID_WAYS
from .energy import ParamTable
from .retention import RefreshMode
from .simulator import (
    BankedCache,
    IntervalResult,
    SimOptions,
    TraceCursor,
    clustered_devices,
    run_interval,
)
from .trace import MemoryAccess

DEFAULT_INTERVAL_INSTRUCTIONS = 10_000_000


@dataclass(frozen=True)
class TuningIntervalSpec:
    instructions_per_interval: int = DEFAULT_INTERVAL_INSTRUCTIONS

    def __post_init__(self):
        if self.instructions_per_interval <= 0:
            raise ValueError("instructions_per_interval must be positive")


@dataclass(frozen=True)
class DesignSpace:
    """Candidate values per parameter, each in descending order."""

    sizes: tuple = tuple(sorted(VALID_SIZES, reverse=True))
    line_sizes: tuple = tuple(sorted(VALID_LINES, reverse=True))
    ways: tuple = tuple(sorted(VALID_WAYS, reverse=True))


DEFAULT_SPACE = DesignSpace()


@dataclass
class ConfigSample:
    config: CacheConfig
    latency_cycles: float


@dataclass
class ConfigTuningResult:
    best_config: CacheConfig
    min_latency: float
    samples: list[ConfigSample]
    intervals_used: int
    truncated: bool


def tune_configuration(
    sample_latency: Callable[[CacheConfig], float | None],
    space: DesignSpace = DEFAULT_SPACE,
) -> ConfigTuningResult:
    """Greedy halving descent over (size, line size, ways) on latency.

    sample_latency runs one tuning interval under the candidate and returns
    its latency, or None when the trace is exhausted (the search then stops
    and reports best-so-far with the truncation flag).
    """
    best = CacheConfig(space.sizes[0], space.line_sizes[0], space.ways[0])
    samples: list[ConfigSample] = []
    lat = sample_latency(best)
    if lat is None:
        return ConfigTuningResult(best, math.inf, samples, 0, True)
    samples.append(ConfigSample(best, lat))
    min_latency = lat
    axes = (
        ("size_bytes", space.sizes),
        ("line_bytes", space.line_sizes),
        ("ways", space.ways),
    )
    for attr, values in axes:
        idx = values.index(getattr(best, attr)) + 1
        while idx < len(values):
            kwargs = {
                "size_bytes": best.size_bytes,
                "line_bytes": best.line_bytes,
                "ways": best.ways,
            }
            kwargs[attr] = values[idx]
            candidate = CacheConfig(**kwargs)
            lat = sample_latency(candidate)
            if lat is None:
                return ConfigTuningResult(best, min_latency, samples, len(samples), True)
            samples.append(ConfigSample(candidate, lat))
            if lat < min_latency:
                min_latency = lat
                best = candidate
                idx += 1
            else:
                break
    return ConfigTuningResult(best, min_latency, samples, len(samples), False)


@dataclass
class RetentionSetSample:
    set_id: int
    mapping: MappingTable
    result: IntervalResult
    bank_edp: dict  # global bank index -> EDP (nJ*cycles)


@dataclass
class RetentionTuningResult:
    mapping: MappingTable
    edp_by_vbank: dict  # vbank_id -> {cluster_id: EDP}
    samples: list[RetentionSetSample]
    intervals_used: int
    truncated: bool


def allocate_clusters(
    edp_by_vbank: dict, banks_per_cluster: int = BANKS_PER_CLUSTER
) -> MappingTable:
    """Assign each virtual bank its best available cluster.

    Virtual banks are served in ascending id order; each takes the
    minimum-EDP cluster that still has a free bank (missing EDP entries
    rank as +inf; ties go to the lower cluster id) and pops that cluster's
    lowest-index free bank.
    """
    free = {c: list(range(banks_per_cluster)) for c in range(CLUSTER_COUNT)}
    entries = {}
    for vbank_id in sorted(edp_by_vbank):
        table = edp_by_vbank[vbank_id]
        available = [c for c in range(CLUSTER_COUNT) if free[c]]
        if not available:
            raise ValueError("no free physical banks left")
        cluster = min(available, key=lambda c: (table.get(c, math.inf), c))
        entries[vbank_id] = PhysicalBankId(cluster, free[cluster].pop(0))
    return MappingTable(entries)


def tune_retention(
    sample_edp: Callable[[MappingTable, int], dict | None],
    layout: list[VirtualBank],
) -> RetentionTuningResult:
    """Sample the four rotation sets, then allocate clusters greedily.

    sample_edp runs one tuning interval under the given rotation mapping
    and returns per-physical-bank EDP keyed by global bank index, or None
    when the trace is exhausted.
    """
    edp_by_vbank: dict = {vb.vbank_id: {} for vb in layout}
    samples: list[RetentionSetSample] = []
    truncated = False
    for set_id in range(CLUSTER_COUNT):
        mapping = rotation_mapping(layout, set_id)
        bank_edp = sample_edp(mapping, set_id)
        if bank_edp is None:
            truncated = True
            break
        for vb in layout:
            bank = mapping.bank_of(vb.vbank_id)
            edp_by_vbank[vb.vbank_id][bank.cluster_id] = bank_edp[bank.global_index]
        samples.append(RetentionSetSample(set_id, mapping, None, bank_edp))
    mapping = allocate_clusters(edp_by_vbank)
    return RetentionTuningResult(mapping, edp_by_vbank, samples, len(samples), truncated)


def per_bank_edp(result: IntervalResult, powered: list[int]) -> dict:
    """EDP of each powered bank over one interval.

    Per-bank EDP multiplies the bank's energy share (dynamic + leakage +
    refresh) by the interval's total latency.
    """
    out = {}
    for g in powered:
        row = result.ledger.rows.get(g)
        bank_energy = 0.0
        if row is not None:
            bank_energy = row["dynamic_nj"] + row["leakage_nj"] + row["refresh_nj"]
        out[g] = bank_energy * result.latency_cycles
    return out


@dataclass
class TuningOutcome:
    best_config: CacheConfig
    min_latency: float
    mapping: MappingTable
    intervals_consumed: int
    edp_by_vbank: dict
    truncated: bool


@dataclass
class AdaptiveRunResult:
    outcome: TuningOutcome
    config_tuning: ConfigTuningResult
    retention_tuning: RetentionTuningResult
    sim: BankedCache
    tuning_log: list = field(default_factory=list)

    @property
    def stats(self):
        return self.sim.run_stats

    @property
    def ledger(self):
        return self.sim.run_ledger


def run_adaptive(
    trace: list[MemoryAccess],
    params: ParamTable,
    options: SimOptions | None = None,
    interval: TuningIntervalSpec = TuningIntervalSpec(),
    space: DesignSpace = DEFAULT_SPACE,
) -> AdaptiveRunResult:
    """Full adaptive flow: configuration tuning, retention tuning, steady state.

    Phase 1 samples candidate configurations (virtual banks mapped per the
    Set-0 rotation, expiration active, no refresh) and applies the best one,
    charging reconfiguration costs on every sampled change.  Phase 2 samples
    the four retention tuning sets and installs the resulting mapping.  The
    remaining trace then runs under the final configuration.
    """
    if options is None:
        options = SimOptions()
    if options.refresh.mode != RefreshMode.NONE:
        raise ValueError("the adaptive cache runs without a refresh mechanism")
    cursor = TraceCursor(trace)
    max_config = CacheConfig(space.sizes[0], space.line_sizes[0], space.ways[0])
    sim = BankedCache(
        params,
        clustered_devices(),
        max_config,
        rotation_mapping(build_layout(max_config), 0),
        options,
    )
    tuning_log: list = []
    n = interval.instructions_per_interval

    def sample_config(config: CacheConfig) -> float | None:
        if cursor.done:
            return None
        sim.apply(config, rotation_mapping(build_layout(config), 0))
        result, complete = run_interval(sim, cursor, n)
        if result is not None:
            tuning_log.append(("config", config.label(), result, None))
        if not complete:
            return None
        return float(result.latency_cycles)

    cfg = tune_configuration(sample_config, space)
    layout = build_layout(cfg.best_config)

    def sample_set(mapping: MappingTable, set_id: int) -> dict | None:
        if cursor.done:
            return None
        sim.apply(cfg.best_config, mapping)
        result, complete = run_interval(sim, cursor, n)
        if not complete:
            if result is not None:
                tuning_log.append(("retention", f"set{set_id}", result, None))
            return None
        edp = per_bank_edp(result, sim.powered)
        tuning_log.append(("retention", f"set{set_id}", result, edp))
        return edp

    ret = tune_retention(sample_set, layout)
    if ret.intervals_used == 0:
        # Trace exhausted before any rotation set completed: fall back to
        # the Set-0 mapping rather than an EDP-blind allocation.
        ret.mapping = rotation_mapping(layout, 0)
    sim.apply(cfg.best_config, ret.mapping)
    if not cursor.done:
        result, _ = run_interval(sim, cursor, None)
        tuning_log.append(("steady", cfg.best_config.label(), result, None))
    outcome = TuningOutcome(
        best_config=cfg.best_config,
        min_latency=cfg.min_latency,
        mapping=ret.mapping,
        intervals_consumed=cfg.intervals_used + ret.intervals_used,
        edp_by_vbank=ret.edp_by_vbank,
        truncated=cfg.truncated or ret.truncated,
    )
    return AdaptiveRunResult(outcome, cfg, ret, sim, tuning_log)
