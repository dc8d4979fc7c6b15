"""Physical bank organization of the LLC.

The physical cache is 32 banks of 32KB, grouped into four 8-bank clusters.
Cluster0..Cluster3 carry the 100us, 1ms, 10ms, and 100ms retention times.
The logical cache (whatever geometry is currently configured) is carved
into 32KB *virtual banks*; a mapping table assigns each virtual bank to a
physical (cluster, bank) pair, and the set-address decoder dispatches each
request's index/tag to the physical bank hosting every way of the decoded
set.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cache import BANK_BYTES, CacheConfig, MAX_ADDRESS_BITS
from .retention import RetentionClass

CLUSTER_COUNT = 4
BANKS_PER_CLUSTER = 8
TOTAL_BANKS = CLUSTER_COUNT * BANKS_PER_CLUSTER


class MappingError(ValueError):
    """Mapping table violates the physical bank constraints."""


@dataclass(frozen=True, order=True)
class PhysicalBankId:
    cluster_id: int
    bank_index: int

    def __post_init__(self):
        if not 0 <= self.cluster_id < CLUSTER_COUNT:
            raise ValueError(f"cluster_id {self.cluster_id} out of range")
        if not 0 <= self.bank_index < BANKS_PER_CLUSTER:
            raise ValueError(f"bank_index {self.bank_index} out of range")

    @property
    def retention_class(self) -> RetentionClass:
        return RetentionClass(self.cluster_id)

    @property
    def global_index(self) -> int:
        return self.cluster_id * BANKS_PER_CLUSTER + self.bank_index

    @classmethod
    def from_global(cls, index: int) -> "PhysicalBankId":
        return cls(index // BANKS_PER_CLUSTER, index % BANKS_PER_CLUSTER)

    def label(self) -> str:
        return f"C{self.cluster_id}B{self.bank_index}"


@dataclass(frozen=True)
class VirtualBank:
    """A 32KB chunk of the logical cache: a way range over a set range."""

    vbank_id: int
    way_lo: int
    way_hi: int  # inclusive
    set_lo: int
    set_hi: int  # inclusive

    @property
    def way_count(self) -> int:
        return self.way_hi - self.way_lo + 1

    @property
    def set_count(self) -> int:
        return self.set_hi - self.set_lo + 1

    def covers(self, way: int, set_index: int) -> bool:
        return self.way_lo <= way <= self.way_hi and self.set_lo <= set_index <= self.set_hi


def build_layout(config: CacheConfig) -> list[VirtualBank]:
    """Enumerate the virtual banks of a configuration.

    Set ranges vary slowest and ways fastest, so for the 128K 2-way 64B
    example VBank0 is (way0, sets 0-511), VBank1 (way1, sets 0-511),
    VBank2 (way0, sets 512-1023), VBank3 (way1, sets 512-1023).  Ways
    larger than 32KB split into multiple set ranges; ways smaller than
    32KB are packed whole into a single virtual bank so a way never spans
    clusters.
    """
    sets = config.sets
    way_bytes = sets * config.line_bytes
    vbanks: list[VirtualBank] = []
    if way_bytes >= BANK_BYTES:
        n_ranges = way_bytes // BANK_BYTES
        sets_per_range = sets // n_ranges
        vid = 0
        for r in range(n_ranges):
            for way in range(config.ways):
                vbanks.append(
                    VirtualBank(
                        vid,
                        way,
                        way,
                        r * sets_per_range,
                        (r + 1) * sets_per_range - 1,
                    )
                )
                vid += 1
    else:
        ways_per_vbank = BANK_BYTES // way_bytes
        vid = 0
        for group in range(config.ways // ways_per_vbank):
            vbanks.append(
                VirtualBank(
                    vid,
                    group * ways_per_vbank,
                    (group + 1) * ways_per_vbank - 1,
                    0,
                    sets - 1,
                )
            )
            vid += 1
    assert len(vbanks) == config.bank_count
    for vb in vbanks:
        assert vb.way_count * vb.set_count * config.line_bytes == BANK_BYTES
    return vbanks


class MappingTable:
    """Injective assignment of virtual banks to physical banks."""

    def __init__(self, entries: dict[int, PhysicalBankId]):
        self.entries = dict(entries)
        seen = {}
        per_cluster: dict[int, int] = {}
        for vid, bank in self.entries.items():
            if bank in seen:
                raise MappingError(
                    f"bank {bank.label()} assigned to both VBank{seen[bank]} and VBank{vid}"
                )
            seen[bank] = vid
            per_cluster[bank.cluster_id] = per_cluster.get(bank.cluster_id, 0) + 1
        for cluster, count in per_cluster.items():
            if count > BANKS_PER_CLUSTER:
                raise MappingError(f"cluster {cluster} hosts {count} virtual banks (max 8)")
        # Bank-local ids: allocation order of a cluster's vbanks, ascending.
        self.bank_local_id: dict[int, int] = {}
        order: dict[int, int] = {}
        for vid in sorted(self.entries):
            cluster = self.entries[vid].cluster_id
            self.bank_local_id[vid] = order.get(cluster, 0)
            order[cluster] = order.get(cluster, 0) + 1

    def __eq__(self, other):
        return isinstance(other, MappingTable) and self.entries == other.entries

    def bank_of(self, vbank_id: int) -> PhysicalBankId:
        return self.entries[vbank_id]

    def powered_banks(self) -> set[PhysicalBankId]:
        return set(self.entries.values())

    def validate_covers(self, layout: list[VirtualBank]) -> None:
        missing = [vb.vbank_id for vb in layout if vb.vbank_id not in self.entries]
        if missing:
            raise MappingError(f"mapping does not cover virtual banks {missing}")
        extra = set(self.entries) - {vb.vbank_id for vb in layout}
        if extra:
            raise MappingError(f"mapping has entries for unknown virtual banks {sorted(extra)}")

    def csv_rows(self, layout: list[VirtualBank]) -> list[dict]:
        rows = []
        for vb in layout:
            bank = self.entries[vb.vbank_id]
            rows.append(
                {
                    "vbank_id": vb.vbank_id,
                    "way_range": f"{vb.way_lo}-{vb.way_hi}",
                    "set_range": f"{vb.set_lo}-{vb.set_hi}",
                    "cluster_id": bank.cluster_id,
                    "bank_index": bank.bank_index,
                }
            )
        return rows


def rotation_mapping(layout: list[VirtualBank], set_id: int) -> MappingTable:
    """Tuning-set mapping: virtual bank i goes to cluster (i + set_id) % 4.

    Over the four tuning sets every virtual bank visits every cluster
    exactly once.  Banks within a cluster are taken lowest index first in
    ascending vbank order.
    """
    if not 0 <= set_id < CLUSTER_COUNT:
        raise ValueError(f"tuning set id {set_id} out of range")
    free = {c: list(range(BANKS_PER_CLUSTER)) for c in range(CLUSTER_COUNT)}
    entries = {}
    for vb in sorted(layout, key=lambda v: v.vbank_id):
        cluster = (vb.vbank_id + set_id) % CLUSTER_COUNT
        entries[vb.vbank_id] = PhysicalBankId(cluster, free[cluster].pop(0))
    return MappingTable(entries)


def identity_mapping(layout: list[VirtualBank]) -> MappingTable:
    """Uniform-device mapping: virtual bank i occupies global bank i."""
    return MappingTable(
        {vb.vbank_id: PhysicalBankId.from_global(vb.vbank_id) for vb in layout}
    )


def power_state(mapping: MappingTable) -> set[PhysicalBankId]:
    """Powered banks under a mapping; every other bank is shut down."""
    return mapping.powered_banks()


@dataclass(frozen=True)
class DecodeResult:
    index: int
    tag: int
    # One entry per way of the decoded set: (way, vbank_id, bank, bank_local_id)
    dispatch: tuple


class SetAddressDecoder:
    """Resolves addresses to (index, tag) and physical bank dispatch lists."""

    def __init__(self, config: CacheConfig, layout: list[VirtualBank], mapping: MappingTable):
        mapping.validate_covers(layout)
        self.config = config
        self.layout = layout
        self.mapping = mapping
        way_bytes = config.sets * config.line_bytes
        if way_bytes >= BANK_BYTES:
            self._sets_per_range = BANK_BYTES // config.line_bytes
        else:
            self._sets_per_range = config.sets
        n_ranges = config.sets // self._sets_per_range
        # _vbank_at[range][way] -> vbank_id
        self._vbank_at = [[-1] * config.ways for _ in range(n_ranges)]
        for vb in layout:
            for way in range(vb.way_lo, vb.way_hi + 1):
                r = vb.set_lo // self._sets_per_range
                self._vbank_at[r][way] = vb.vbank_id
        self._bank_at = [
            [mapping.bank_of(v) for v in row] for row in self._vbank_at
        ]
        self._bank_global_at = [
            [b.global_index for b in row] for row in self._bank_at
        ]

    def vbank_of(self, way: int, set_index: int) -> int:
        return self._vbank_at[set_index // self._sets_per_range][way]

    def bank_global_of(self, way: int, set_index: int) -> int:
        return self._bank_global_at[set_index // self._sets_per_range][way]

    def decode(self, address: int) -> DecodeResult:
        if address < 0 or address >= (1 << MAX_ADDRESS_BITS):
            raise ValueError(f"address 0x{address:X} outside modeled range")
        cfg = self.config
        line = address // cfg.line_bytes
        index = line % cfg.sets
        tag = line // cfg.sets
        r = index // self._sets_per_range
        dispatch = tuple(
            (
                way,
                self._vbank_at[r][way],
                self._bank_at[r][way],
                self.mapping.bank_local_id[self._vbank_at[r][way]],
            )
            for way in range(cfg.ways)
        )
        return DecodeResult(index, tag, dispatch)


def address_of(tag: int, index: int, offset: int, config: CacheConfig) -> int:
    """Inverse of decode: reassemble an address from (tag, index, offset)."""
    if not 0 <= index < config.sets:
        raise ValueError(f"index {index} out of range for {config.label()}")
    if not 0 <= offset < config.line_bytes:
        raise ValueError(f"offset {offset} out of range for {config.label()}")
    return (tag * config.sets + index) * config.line_bytes + offset
