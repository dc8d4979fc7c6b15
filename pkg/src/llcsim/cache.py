"""Set-associative cache engine with runtime-reconfigurable geometry.

One engine backs every simulated system (SRAM, uniform-retention STT-RAM,
and the retention-clustered adaptive cache).  Replacement is random over the
ways of the victim set - invalid ways are filled first, lowest index first -
driven by a seeded xorshift generator so runs are reproducible.

Reconfiguration flushes the cache: dirty blocks are counted as writebacks
and the fixed context-switch cost (114688 cycles, 14.844 uJ) is charged
whenever the geometry actually changes.
"""

from __future__ import annotations

from dataclasses import dataclass

VALID_SIZES = (131072, 262144, 524288, 1048576)
VALID_LINES = (16, 32, 64)
VALID_WAYS = (1, 2, 4, 8, 16)

BANK_BYTES = 32768

RECONFIG_LATENCY_CYCLES = 114688
RECONFIG_ENERGY_NJ = 14844.0

# Addresses beyond 48 bits are outside the modeled range.
MAX_ADDRESS_BITS = 48

HIT = "hit"
MISS_CLEAN = "miss_clean"
MISS_DIRTY = "miss_dirty"


def _size_label(size_bytes: int) -> str:
    if size_bytes >= 1 << 20 and size_bytes % (1 << 20) == 0:
        return f"{size_bytes >> 20}M"
    return f"{size_bytes >> 10}K"


@dataclass(frozen=True)
class CacheConfig:
    """A (size, line size, associativity) point in the design space."""

    size_bytes: int
    line_bytes: int
    ways: int

    def __post_init__(self):
        if self.size_bytes not in VALID_SIZES:
            raise ValueError(f"size_bytes {self.size_bytes} not in {VALID_SIZES}")
        if self.line_bytes not in VALID_LINES:
            raise ValueError(f"line_bytes {self.line_bytes} not in {VALID_LINES}")
        if self.ways not in VALID_WAYS:
            raise ValueError(f"ways {self.ways} not in {VALID_WAYS}")
        if self.size_bytes % (self.line_bytes * self.ways) != 0:
            raise ValueError("size must be divisible by line_bytes * ways")

    @property
    def sets(self) -> int:
        return self.size_bytes // (self.line_bytes * self.ways)

    @property
    def bank_count(self) -> int:
        return self.size_bytes // BANK_BYTES

    def label(self) -> str:
        return f"{_size_label(self.size_bytes)}-{self.ways}W-{self.line_bytes}B"

    @classmethod
    def parse_label(cls, text: str) -> "CacheConfig":
        """Parse labels like '128K-1W-16B' or '1M-16W-64B'."""
        try:
            size_s, ways_s, line_s = text.strip().split("-")
            if size_s.endswith("M"):
                size = int(size_s[:-1]) << 20
            elif size_s.endswith("K"):
                size = int(size_s[:-1]) << 10
            else:
                size = int(size_s)
            ways = int(ways_s.rstrip("Ww"))
            line = int(line_s.rstrip("Bb"))
        except (ValueError, AttributeError):
            raise ValueError(f"cannot parse cache config label {text!r}")
        return cls(size, line, ways)


class XorShift64:
    """xorshift64 PRNG; deterministic and platform-independent."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = (seed ^ 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
        if self.state == 0:
            self.state = 0x9E3779B97F4A7C15

    def next(self) -> int:
        x = self.state
        x ^= (x << 13) & 0xFFFFFFFFFFFFFFFF
        x ^= x >> 7
        x ^= (x << 17) & 0xFFFFFFFFFFFFFFFF
        self.state = x
        return x

    def below(self, n: int) -> int:
        return self.next() % n


class Block:
    """Metadata of one cached line."""

    __slots__ = ("tag", "dirty", "write_tick", "gen", "refresh_origin", "last_writer_core")

    def __init__(self, tag: int, dirty: bool, write_tick: int, core: int):
        self.tag = tag
        self.dirty = dirty
        self.write_tick = write_tick
        self.gen = 0  # bumped by the volatility layer on every (re)write
        self.refresh_origin = write_tick
        self.last_writer_core = core


@dataclass
class AccessOutcome:
    kind: str  # HIT / MISS_CLEAN / MISS_DIRTY
    set_index: int
    way: int
    block: Block
    installed: bool
    victim_writeback: int | None = None  # address of the evicted dirty line
    victim_block: Block | None = None
    serviced_bank: object = None  # filled by the banked layer


@dataclass(frozen=True)
class ReconfigCost:
    latency_cycles: int
    energy_nj: float


class CacheState:
    """Mutable state of one set-associative cache instance."""

    def __init__(self, config: CacheConfig, seed: int = 1):
        self.config = config
        self.rng = XorShift64(seed)
        self._sets: list[list[Block | None]] = [
            [None] * config.ways for _ in range(config.sets)
        ]

    def _split(self, address: int) -> tuple[int, int]:
        line = address // self.config.line_bytes
        return line % self.config.sets, line // self.config.sets

    def block_address(self, set_index: int, block: Block) -> int:
        """Reconstruct the line base address of a resident block."""
        return (block.tag * self.config.sets + set_index) * self.config.line_bytes

    def access_raw(self, address: int, is_write: bool, tick: int = 0, core: int = 0):
        """Perform one access; returns (kind, set, way, block, victim_block).

        A hit updates the dirty bit (and write bookkeeping) on writes.  A
        miss installs the line, preferring the lowest invalid way and
        otherwise evicting a random way.
        """
        if address < 0 or address >= (1 << MAX_ADDRESS_BITS):
            raise ValueError(f"address 0x{address:X} outside modeled range")
        set_index, tag = self._split(address)
        row = self._sets[set_index]
        for way, block in enumerate(row):
            if block is not None and block.tag == tag:
                if is_write:
                    block.dirty = True
                    block.write_tick = tick
                    block.last_writer_core = core
                return HIT, set_index, way, block, None
        victim_way = -1
        for way, block in enumerate(row):
            if block is None:
                victim_way = way
                break
        if victim_way < 0:
            victim_way = self.rng.below(self.config.ways)
        victim = row[victim_way]
        new = Block(tag, is_write, tick, core)
        row[victim_way] = new
        kind = MISS_DIRTY if (victim is not None and victim.dirty) else MISS_CLEAN
        return kind, set_index, victim_way, new, victim

    def lookup(self, address: int, is_write: bool, tick: int = 0, core: int = 0) -> AccessOutcome:
        kind, set_index, way, block, victim = self.access_raw(address, is_write, tick, core)
        victim_addr = None
        if kind == MISS_DIRTY:
            victim_addr = self.block_address(set_index, victim)
        return AccessOutcome(
            kind=kind,
            set_index=set_index,
            way=way,
            block=block,
            installed=(kind != HIT),
            victim_writeback=victim_addr,
            victim_block=victim,
        )

    def probe(self, address: int) -> bool:
        """Non-mutating presence check."""
        set_index, tag = self._split(address)
        return any(b is not None and b.tag == tag for b in self._sets[set_index])

    def invalidate(self, set_index: int, way: int) -> Block | None:
        block = self._sets[set_index][way]
        self._sets[set_index][way] = None
        return block

    def get(self, set_index: int, way: int) -> Block | None:
        return self._sets[set_index][way]

    def iter_blocks(self):
        for set_index, row in enumerate(self._sets):
            for way, block in enumerate(row):
                if block is not None:
                    yield set_index, way, block

    def flush(self) -> list[tuple[int, Block]]:
        """Empty the cache; returns (address, block) for every resident line."""
        out = []
        for set_index, way, block in self.iter_blocks():
            out.append((self.block_address(set_index, block), block))
        self._sets = [[None] * self.config.ways for _ in range(self.config.sets)]
        return out

    def set_config(self, new_config: CacheConfig) -> None:
        """Swap geometry on an already-empty cache (no flush accounting)."""
        self.config = new_config
        self._sets = [[None] * new_config.ways for _ in range(new_config.sets)]

    def reconfigure(self, new_config: CacheConfig) -> tuple[ReconfigCost, list[tuple[int, Block]]]:
        """Switch geometry.  Identity reconfiguration is free and keeps state.

        Otherwise the cache is flushed; the returned list holds every evicted
        line so the caller can count dirty ones as writebacks.
        """
        if new_config == self.config:
            return ReconfigCost(0, 0.0), []
        evicted = self.flush()
        self.config = new_config
        self._sets = [[None] * new_config.ways for _ in range(new_config.sets)]
        return ReconfigCost(RECONFIG_LATENCY_CYCLES, RECONFIG_ENERGY_NJ), evicted
