"""Fixed-slot buffer pools with LRU victim selection.

Pools track residency, dirtiness and a logical recency clock. They never
write anything back themselves: an insert into a full pool hands the victim
(and whether it was dirty) to the caller, which decides where it goes.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

from .devices import TierKind
from .errors import CapacityError, TraceFormatError


@dataclass
class PoolEntry:
    __slots__ = ("block", "dirty", "last_use")
    block: int
    dirty: bool
    last_use: int


class BufferPool:
    def __init__(self, tier: TierKind, capacity_slots: int):
        if capacity_slots < 0:
            raise CapacityError("capacity must be >= 0")
        self.tier = tier
        self.capacity_slots = int(capacity_slots)
        # Kept in ascending last_use order, so the first key is the LRU victim.
        self.entries: OrderedDict[int, PoolEntry] = OrderedDict()
        self.clock = 0

    def __len__(self):
        return len(self.entries)

    def __contains__(self, block):
        return block in self.entries

    def __repr__(self):
        return (f"BufferPool({self.tier.name}, {len(self.entries)}/"
                f"{self.capacity_slots} slots)")

    def _tick(self) -> int:
        self.clock += 1
        return self.clock

    def lookup(self, block: int) -> bool:
        """True on a hit. A hit refreshes the entry's recency."""
        entry = self.entries.get(block)
        if entry is None:
            return False
        entry.last_use = self._tick()
        self.entries.move_to_end(block)
        return True

    def insert(self, block: int, dirty: bool = False):
        """Install a non-resident block.

        Returns ``(victim, was_dirty)`` when something had to leave the pool,
        otherwise None. A zero-capacity pool passes the block straight back.
        """
        assert block not in self.entries, f"block {block} already resident in {self.tier.name}"
        if self.capacity_slots == 0:
            return block, dirty
        self.entries[block] = PoolEntry(block, dirty, self._tick())
        if len(self.entries) > self.capacity_slots:
            return self.evict()
        return None

    def evict(self):
        """Remove and return the least recently used entry as (block, dirty)."""
        _, victim = self.entries.popitem(last=False)
        return victim.block, victim.dirty

    def victim(self) -> int | None:
        return next(iter(self.entries), None)

    def mark_dirty(self, block: int) -> None:
        entry = self.entries.get(block)
        assert entry is not None, f"block {block} not resident in {self.tier.name}"
        entry.dirty = True
        entry.last_use = self._tick()
        self.entries.move_to_end(block)

    def is_dirty(self, block: int) -> bool:
        return self.entries[block].dirty

    def remove(self, block: int):
        entry = self.entries.pop(block)
        return entry.block, entry.dirty

    def resident(self) -> list[int]:
        """Resident blocks, least recently used first."""
        return list(self.entries)

    def clear(self):
        self.entries.clear()
        self.clock = 0


@dataclass
class Snapshot:
    """Initial DRAM/NVM residency. SSD implicitly holds every block.

    Each tier maps to an ordered list of ``(block, dirty)``; earlier entries
    are treated as less recently used.
    """

    tiers: dict = field(default_factory=dict)

    def blocks(self, tier: TierKind) -> list:
        return self.tiers.get(tier, [])

    def __len__(self):
        return sum(len(v) for v in self.tiers.values())


def load_snapshot(pools: dict, snapshot: Snapshot) -> None:
    """Reset ``pools`` (TierKind -> BufferPool) to the snapshot's residency."""
    for tier, items in snapshot.tiers.items():
        pool = pools.get(tier)
        cap = pool.capacity_slots if pool is not None else 0
        if len(items) > cap:
            raise CapacityError(
                f"snapshot places {len(items)} blocks in {tier.name}, capacity is {cap}")
        if len({b for b, _ in items}) != len(items):
            raise CapacityError(f"snapshot lists a {tier.name} block twice")
    for tier, pool in pools.items():
        pool.clear()
        for block, dirty in snapshot.blocks(tier):
            pool.insert(block, dirty)


_TIER_CODES = {"D": TierKind.DRAM, "N": TierKind.NVM}
_CODE_OF = {v: k for k, v in _TIER_CODES.items()}


def format_snapshot(snapshot: Snapshot) -> str:
    lines = []
    for tier in (TierKind.DRAM, TierKind.NVM):
        code = _CODE_OF[tier]
        lines.extend(f"{code} {b} {int(bool(d))}" for b, d in snapshot.blocks(tier))
    return "".join(line + "\n" for line in lines)


def parse_snapshot(text: str) -> Snapshot:
    tiers: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] not in _TIER_CODES or parts[2] not in ("0", "1"):
            raise TraceFormatError(f"snapshot line {lineno}: expected '<D|N> <block> <0|1>'")
        try:
            block = int(parts[1])
        except ValueError:
            raise TraceFormatError(f"snapshot line {lineno}: bad block id {parts[1]!r}") from None
        if block < 0:
            raise TraceFormatError(f"snapshot line {lineno}: negative block id")
        tiers.setdefault(_TIER_CODES[parts[0]], []).append((block, parts[2] == "1"))
    return Snapshot(tiers)


def read_snapshot(path) -> Snapshot:
    with open(path) as fh:
        return parse_snapshot(fh.read())


def write_snapshot(snapshot: Snapshot, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_snapshot(snapshot))
