"""Energy, latency, and EDP accounting.

Counter conventions (shared by the whole simulator):

  * hits        - read requests that hit; one hit energy / hit latency each.
  * writes      - cache-array block writes: every write request (hit or
                  miss) plus the fill performed on a read miss; one write
                  energy / write latency each.
  * writebacks  - dirty blocks leaving the array (replacement victims,
                  expirations, reconfiguration flushes); one write energy
                  each.
  * misses      - read or write requests that missed; each costs the main
                  memory penalty in latency.

Energy parameters are keyed by (memory device, cache configuration).  The
shipped default table carries the measured values for the thirteen
characterized configurations and log-space-fitted values for the rest of
the design-space lattice; configurations absent from a table are rejected,
never interpolated at runtime.  Leakage is split evenly across the powered
banks for banked accounting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

from .cache import CacheConfig
from .retention import RefreshModel, RefreshMode, RetentionClass

DEVICE_SRAM = "SRAM"

_STT_DEVICES = {rc: f"STT-{rc.label}" for rc in RetentionClass}


def stt_device(rc: RetentionClass) -> str:
    return _STT_DEVICES[rc]


def parse_device(text: str) -> str:
    t = text.strip()
    if t.upper() == DEVICE_SRAM:
        return DEVICE_SRAM
    if t.upper().startswith("STT-"):
        return stt_device(RetentionClass.parse(t[4:]))
    raise ValueError(f"unknown memory device {text!r}")


@dataclass(frozen=True)
class EnergyParams:
    write_energy_nj: float
    hit_energy_nj: float
    leakage_mw: float
    hit_latency_cycles: int
    write_latency_cycles: int

    def __post_init__(self):
        for name in ("write_energy_nj", "hit_energy_nj", "leakage_mw"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.hit_latency_cycles < 0 or self.write_latency_cycles < 0:
            raise ValueError("latencies must be non-negative")


class ParamLookupError(KeyError):
    def __init__(self, device: str, config: CacheConfig):
        self.device = device
        self.config = config
        super().__init__(f"no energy parameters for device {device}, config {config.label()}")

    def __str__(self):
        return f"no energy parameters for device {self.device}, config {self.config.label()}"


_FIELDS = ("write_nj", "hit_nj", "leak_mw", "hit_cycles", "write_cycles")


class ParamTable:
    """Immutable lookup of EnergyParams by (device, config)."""

    def __init__(self, table: dict[tuple[str, CacheConfig], EnergyParams]):
        self._table = dict(table)

    @classmethod
    def loads(cls, text: str) -> "ParamTable":
        """Parse the key=value record format, one record per line:

        device=SRAM config=128K-1W-16B write_nj=0.033 hit_nj=0.035 \\
            leak_mw=277.744 hit_cycles=2 write_cycles=2
        """
        table = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            kv = {}
            for token in line.split():
                if "=" not in token:
                    raise ValueError(f"params line {lineno}: bad token {token!r}")
                key, value = token.split("=", 1)
                kv[key] = value
            try:
                device = parse_device(kv.pop("device"))
                config = CacheConfig.parse_label(kv.pop("config"))
                params = EnergyParams(
                    write_energy_nj=float(kv.pop("write_nj")),
                    hit_energy_nj=float(kv.pop("hit_nj")),
                    leakage_mw=float(kv.pop("leak_mw")),
                    hit_latency_cycles=int(kv.pop("hit_cycles")),
                    write_latency_cycles=int(kv.pop("write_cycles")),
                )
            except KeyError as exc:
                raise ValueError(f"params line {lineno}: missing field {exc}")
            if kv:
                raise ValueError(f"params line {lineno}: unknown fields {sorted(kv)}")
            table[(device, config)] = params
        return cls(table)

    @classmethod
    def load(cls, path) -> "ParamTable":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read())

    @classmethod
    def default(cls) -> "ParamTable":
        text = resources.files("llcsim.data").joinpath("params_default.txt").read_text()
        return cls.loads(text)

    def get(self, device: str, config: CacheConfig) -> EnergyParams:
        try:
            return self._table[(device, config)]
        except KeyError:
            raise ParamLookupError(device, config)

    def has(self, device: str, config: CacheConfig) -> bool:
        return (device, config) in self._table

    def per_bank_leakage_mw(self, device: str, config: CacheConfig) -> float:
        return self.get(device, config).leakage_mw / config.bank_count

    def items(self):
        return self._table.items()


class BankCounters:
    __slots__ = ("read_hits", "writes", "writebacks", "expirations", "refreshes",
                 "expiration_misses")

    def __init__(self):
        self.read_hits = 0
        self.writes = 0
        self.writebacks = 0
        self.expirations = 0
        self.refreshes = 0
        self.expiration_misses = 0

    def add(self, other: "BankCounters") -> None:
        self.read_hits += other.read_hits
        self.writes += other.writes
        self.writebacks += other.writebacks
        self.expirations += other.expirations
        self.refreshes += other.refreshes
        self.expiration_misses += other.expiration_misses


class SimStats:
    """Run or interval counters, global plus per physical bank."""

    def __init__(self):
        self.read_hits = 0
        self.read_misses = 0
        self.write_hits = 0
        self.write_misses = 0
        self.fills = 0  # read-miss installs (each is a cache-array write)
        self.writebacks = 0
        self.expirations = 0
        self.refreshes = 0
        self.reconfig_count = 0
        self.reconfig_latency_cycles = 0
        self.latency_cycles = 0
        self.wall_cycles = 0
        self.banks: dict[int, BankCounters] = {}

    def bank(self, index: int) -> BankCounters:
        bc = self.banks.get(index)
        if bc is None:
            bc = BankCounters()
            self.banks[index] = bc
        return bc

    @property
    def hits(self) -> int:
        return self.read_hits

    @property
    def misses(self) -> int:
        return self.read_misses + self.write_misses

    @property
    def writes(self) -> int:
        return self.write_hits + self.write_misses + self.fills

    @property
    def accesses(self) -> int:
        return self.read_hits + self.read_misses + self.write_hits + self.write_misses

    @property
    def hit_rate(self) -> float:
        total = self.accesses
        return (self.read_hits + self.write_hits) / total if total else 0.0

    def add(self, other: "SimStats") -> None:
        self.read_hits += other.read_hits
        self.read_misses += other.read_misses
        self.write_hits += other.write_hits
        self.write_misses += other.write_misses
        self.fills += other.fills
        self.writebacks += other.writebacks
        self.expirations += other.expirations
        self.refreshes += other.refreshes
        self.reconfig_count += other.reconfig_count
        self.reconfig_latency_cycles += other.reconfig_latency_cycles
        self.latency_cycles += other.latency_cycles
        self.wall_cycles += other.wall_cycles
        for index, bc in other.banks.items():
            self.bank(index).add(bc)


LEDGER_COMPONENTS = ("dynamic_nj", "leakage_nj", "refresh_nj", "buffer_leakage_nj",
                     "reconfig_nj")

SYSTEM_ROW = "system"


class EnergyLedger:
    """Energy totals in nanojoules, per physical bank plus a system row.

    The system row holds energy not attributable to a single bank (refresh
    buffer leakage and reconfiguration costs).  Sums run in a fixed
    (bank index, component) order so additivity checks are reproducible.
    """

    def __init__(self):
        self.rows: dict = {}

    def row(self, key) -> dict:
        r = self.rows.get(key)
        if r is None:
            r = {c: 0.0 for c in LEDGER_COMPONENTS}
            self.rows[key] = r
        return r

    def add(self, key, component: str, nj: float) -> None:
        self.row(key)[component] += nj

    def _ordered_keys(self):
        banks = sorted(k for k in self.rows if k != SYSTEM_ROW)
        if SYSTEM_ROW in self.rows:
            banks.append(SYSTEM_ROW)
        return banks

    def component_total(self, component: str) -> float:
        return sum(self.rows[k][component] for k in self._ordered_keys())

    def total_nj(self) -> float:
        total = 0.0
        for key in self._ordered_keys():
            row = self.rows[key]
            for c in LEDGER_COMPONENTS:
                total += row[c]
        return total

    def row_total(self, key) -> float:
        row = self.rows[key]
        return sum(row[c] for c in LEDGER_COMPONENTS)

    def merge(self, other: "EnergyLedger") -> None:
        for key, row in other.rows.items():
            mine = self.row(key)
            for c in LEDGER_COMPONENTS:
                mine[c] += row[c]

    def totals(self) -> dict:
        return {c: self.component_total(c) for c in LEDGER_COMPONENTS}


def leakage_nj(leak_mw: float, wall_cycles: int, clock_ghz: float) -> float:
    """mW over a cycle count -> nJ (1 mW * 1 ns = 1 pJ)."""
    return leak_mw * (wall_cycles / clock_ghz) / 1000.0


def energy_of_interval(
    stats: SimStats,
    params: EnergyParams,
    wall_cycles: int,
    clock_ghz: float,
    refresh_model: RefreshModel | None = None,
    reconfig_energy_nj: float = 0.0,
) -> EnergyLedger:
    """Combine interval counters with uniform-device parameters.

    dynamic = hits*hit_energy + (writes + writebacks)*write_energy, leakage
    accrues over the wall time, refresh and buffer terms come from the
    refresh model, reconfiguration energy is passed through.  Per-bank
    counters, when present, yield per-bank dynamic rows; leakage is split
    evenly over the banks that appear.
    """
    if wall_cycles < 0:
        raise ValueError("wall_cycles must be non-negative")
    ledger = EnergyLedger()
    if stats.banks:
        share = params.leakage_mw / len(stats.banks)
        for index in sorted(stats.banks):
            bc = stats.banks[index]
            dyn = (
                bc.read_hits * params.hit_energy_nj
                + (bc.writes + bc.writebacks) * params.write_energy_nj
            )
            ledger.add(index, "dynamic_nj", dyn)
            ledger.add(index, "leakage_nj", leakage_nj(share, wall_cycles, clock_ghz))
            if refresh_model is not None and refresh_model.mode == RefreshMode.PERFECT_DRS:
                ledger.add(index, "refresh_nj", bc.refreshes * refresh_model.per_refresh_energy_nj)
    else:
        dyn = (
            stats.hits * params.hit_energy_nj
            + (stats.writes + stats.writebacks) * params.write_energy_nj
        )
        ledger.add(0, "dynamic_nj", dyn)
        ledger.add(0, "leakage_nj", leakage_nj(params.leakage_mw, wall_cycles, clock_ghz))
        if refresh_model is not None and refresh_model.mode == RefreshMode.PERFECT_DRS:
            ledger.add(0, "refresh_nj", stats.refreshes * refresh_model.per_refresh_energy_nj)
    if refresh_model is not None and refresh_model.mode == RefreshMode.PERFECT_DRS:
        ledger.add(
            SYSTEM_ROW,
            "buffer_leakage_nj",
            leakage_nj(refresh_model.buffer_leakage_mw, wall_cycles, clock_ghz),
        )
    if reconfig_energy_nj:
        ledger.add(SYSTEM_ROW, "reconfig_nj", reconfig_energy_nj)
    return ledger


def edp(energy_nj: float, latency_cycles: float) -> float:
    """Energy-delay product in nJ*cycles."""
    if not (math.isfinite(energy_nj) and math.isfinite(latency_cycles)):
        raise ValueError("EDP inputs must be finite")
    if energy_nj < 0 or latency_cycles < 0:
        raise ValueError("EDP inputs must be non-negative")
    return energy_nj * latency_cycles


def interval_latency(stats: SimStats, params: EnergyParams, miss_penalty_cycles: int) -> int:
    """Uniform-device interval latency from counters."""
    return (
        stats.hits * params.hit_latency_cycles
        + stats.writes * params.write_latency_cycles
        + stats.misses * miss_penalty_cycles
        + stats.reconfig_latency_cycles
    )
