import random

import pytest
from hypothesis import given, settings, strategies as st

from mtsim.buffer import (BufferPool, Snapshot, format_snapshot, load_snapshot, parse_snapshot)
from mtsim.devices import TierKind
from mtsim.errors import CapacityError, TraceFormatError


class ListLRU:
    """Brute-force LRU: a plain list ordered oldest touch first."""

    def __init__(self, capacity):
        self.capacity = capacity
        self.order = []
        self.dirty = {}

    def touch(self, b):
        self.order.remove(b)
        self.order.append(b)

    def lookup(self, b):
        if b in self.order:
            self.touch(b)
            return True
        return False

    def insert(self, b, dirty):
        if self.capacity == 0:
            return (b, dirty)
        self.order.append(b)
        self.dirty[b] = dirty
        if len(self.order) > self.capacity:
            v = self.order.pop(0)
            return (v, self.dirty.pop(v))
        return None

    def mark_dirty(self, b):
        self.dirty[b] = True
        self.touch(b)


def replay_random(seed, nops, capacity, universe):
    rng = random.Random(seed)
    pool, oracle = BufferPool(TierKind.DRAM, capacity), ListLRU(capacity)
    for _ in range(nops):
        b = rng.randrange(universe)
        r = rng.random()
        if b in pool:
            if r < 0.7:
                assert pool.lookup(b) and oracle.lookup(b)
            else:
                pool.mark_dirty(b)
                oracle.mark_dirty(b)
        else:
            assert not pool.lookup(b) and not oracle.lookup(b)
            dirty = r < 0.3
            assert pool.insert(b, dirty) == oracle.insert(b, dirty)
        assert len(pool) <= capacity
        assert pool.resident() == oracle.order
    return True


def test_lru_matches_list_oracle():
    for seed in range(20):
        assert replay_random(seed, 500, 1 + seed % 16, 40)


def test_lookup_examples():
    pool = BufferPool(TierKind.DRAM, 2)
    assert not pool.lookup(5)
    pool.insert(5)
    assert pool.lookup(5)
    assert pool.evict() == (5, False)
    assert not pool.lookup(5)


def test_insert_examples():
    one = BufferPool(TierKind.DRAM, 1)
    assert one.insert(7, False) is None
    assert one.insert(9, False) == (7, False)

    two = BufferPool(TierKind.DRAM, 2)
    two.insert(1)
    two.insert(2)
    two.lookup(1)
    assert two.insert(3)[0] == 2

    zero = BufferPool(TierKind.NVM, 0)
    assert zero.insert(4, True) == (4, True)
    assert len(zero) == 0


def test_duplicate_insert_is_contract_violation():
    pool = BufferPool(TierKind.DRAM, 2)
    pool.insert(1)
    with pytest.raises(AssertionError):
        pool.insert(1)
    with pytest.raises(AssertionError):
        pool.mark_dirty(99)


def test_mark_dirty():
    pool = BufferPool(TierKind.DRAM, 1)
    pool.insert(3, False)
    pool.mark_dirty(3)
    pool.mark_dirty(3)
    assert pool.is_dirty(3)
    assert pool.insert(4) == (3, True)

    pool = BufferPool(TierKind.DRAM, 1)
    pool.insert(3, True)
    pool.mark_dirty(3)
    assert pool.is_dirty(3)


def test_last_use_strictly_increases():
    pool = BufferPool(TierKind.DRAM, 4)
    pool.insert(1)
    seen = [pool.entries[1].last_use]
    for op in (pool.lookup, pool.mark_dirty, pool.lookup):
        op(1)
        seen.append(pool.entries[1].last_use)
    assert seen == sorted(set(seen))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 30), st.booleans()), max_size=300), st.integers(0, 8))
def test_dirtiness_never_cleared_silently(ops, cap):
    pool = BufferPool(TierKind.NVM, cap)
    dirty = set()
    for b, w in ops:
        if b in pool:
            if w:
                pool.mark_dirty(b)
                dirty.add(b)
        else:
            out = pool.insert(b, w)
            if w:
                dirty.add(b)
            if out is not None:
                victim, was_dirty = out
                assert was_dirty == (victim in dirty)
                dirty.discard(victim)
        for r in pool.resident():
            assert pool.is_dirty(r) == (r in dirty)
        assert len(pool) <= cap


def test_load_snapshot():
    pools = {TierKind.DRAM: BufferPool(TierKind.DRAM, 2), TierKind.NVM: BufferPool(TierKind.NVM, 4)}
    pools[TierKind.DRAM].insert(9)
    load_snapshot(pools, Snapshot())
    assert all(len(p) == 0 for p in pools.values())

    load_snapshot(pools, Snapshot({TierKind.DRAM: [(1, False), (2, True)]}))
    assert pools[TierKind.DRAM].resident() == [1, 2]
    assert pools[TierKind.DRAM].is_dirty(2)
    assert pools[TierKind.DRAM].victim() == 1

    with pytest.raises(CapacityError):
        load_snapshot(pools, Snapshot({TierKind.DRAM: [(1, False), (2, False), (3, False)]}))


def test_snapshot_file_roundtrip():
    snap = Snapshot({TierKind.DRAM: [(4, False), (1, True)], TierKind.NVM: [(7, True)]})
    text = format_snapshot(snap)
    assert text == "D 4 0\nD 1 1\nN 7 1\n"
    assert parse_snapshot(text) == snap


@pytest.mark.parametrize("bad", ["S 1 0", "D x 0", "D 1 2", "D 1", "N -3 0"])
def test_snapshot_parse_errors(bad):
    with pytest.raises(TraceFormatError, match="line 1"):
        parse_snapshot(bad)
