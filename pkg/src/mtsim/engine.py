"""Probabilistic data migration across a DRAM / NVM / SSD hierarchy.

The engine replays trace operations against two buffer pools (DRAM and NVM;
SSD holds every block) and routes each block along one of the data-flow
paths selected by the four migration probabilities:

``d_r``
    promote to DRAM on a read (NVM hit, or SSD fetch that went to NVM).
``d_w``
    install a non-resident block into DRAM on a write.
``n_r``
    install an SSD-fetched block into NVM on a read.
``n_w``
    admit a dirty DRAM victim into NVM (otherwise it goes straight to SSD).

Tiers are non-inclusive. Every probabilistic decision consumes exactly one
uniform draw from the engine's private ``random.Random`` stream, so runs are
replayable from ``rng_seed``.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field, fields

from .buffer import BufferPool, Snapshot, load_snapshot
from .devices import DEFAULT_BLOCK_SIZE, DeviceCatalog, DeviceSpec, TierKind, block_transfer_time, device_cost, format_size, parse_size
from .errors import ConfigError


@dataclass(frozen=True)
class MigrationPolicy:
    d_r: float = 1.0
    d_w: float = 1.0
    n_r: float = 1.0
    n_w: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            v = float(getattr(self, f.name))
            object.__setattr__(self, f.name, v)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{f.name} must be in [0, 1], got {v}")

    @classmethod
    def parse(cls, text: str) -> "MigrationPolicy":
        parts = text.split(",")
        if len(parts) != 4:
            raise ConfigError(f"policy must be 'dr,dw,nr,nw', got {text!r}")
        try:
            return cls(*(float(p) for p in parts))
        except ValueError:
            raise ConfigError(f"policy must be four numbers, got {text!r}") from None

    def as_tuple(self) -> tuple:
        return (self.d_r, self.d_w, self.n_r, self.n_w)

    def __str__(self):
        return ",".join(f"{v:g}" for v in self.as_tuple())


EAGER = MigrationPolicy(1.0, 1.0, 1.0, 1.0)

# Buffer management policies compared against each other in the evaluation.
POLICY_A = MigrationPolicy(1.0, 1.0, 0.01, 0.5)
POLICY_B = MigrationPolicy(0.01, 0.01, 0.2, 1.0)
POLICY_C = MigrationPolicy(0.01, 0.01, 0.2, 0.5)
POLICY_D = MigrationPolicy(0.01, 0.01, 0.2, 0.3)


@dataclass(frozen=True)
class Hierarchy:
    """DRAM / NVM / SSD devices with their capacities (bytes)."""

    dram: DeviceSpec
    nvm: DeviceSpec
    ssd: DeviceSpec
    block_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self):
        if self.block_size <= 0:
            raise ConfigError("block_size must be positive")
        for dev in (self.dram, self.nvm, self.ssd):
            dev.slots(self.block_size)

    @classmethod
    def build(cls, dram: int, nvm: int, ssd: int, catalog: DeviceCatalog | None = None,
              block_size: int = DEFAULT_BLOCK_SIZE) -> "Hierarchy":
        catalog = catalog or DeviceCatalog()
        return cls(catalog.device("dram", dram), catalog.device("nvm", nvm),
                   catalog.device("ssd", ssd), block_size)

    @classmethod
    def from_blocks(cls, dram: int, nvm: int, ssd: int, catalog: DeviceCatalog | None = None,
                    block_size: int = DEFAULT_BLOCK_SIZE) -> "Hierarchy":
        return cls.build(dram * block_size, nvm * block_size, ssd * block_size,
                         catalog, block_size)

    @property
    def capacities(self) -> tuple[int, int, int]:
        return (self.dram.capacity, self.nvm.capacity, self.ssd.capacity)

    @property
    def total_cost(self) -> float:
        return device_cost(self.dram) + device_cost(self.nvm) + device_cost(self.ssd)

    def slots(self, tier: TierKind) -> int:
        dev = {TierKind.DRAM: self.dram, TierKind.NVM: self.nvm, TierKind.SSD: self.ssd}[tier]
        return dev.slots(self.block_size)

    def __str__(self):
        return ",".join(f"{name}:{format_size(c)}"
                        for name, c in zip(("dram", "nvm", "ssd"), self.capacities))


def parse_hierarchy(text: str, catalog: DeviceCatalog | None = None,
                    block_size: int = DEFAULT_BLOCK_SIZE) -> Hierarchy:
    """Parse ``dram:16GB,nvm:1TB,ssd:2TB``. Missing tiers get capacity 0."""
    caps = {"dram": 0, "nvm": 0, "ssd": 0}
    seen = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        name, sep, size = part.partition(":")
        name = name.strip().lower()
        if not sep or name not in caps:
            raise ConfigError(f"bad hierarchy component {part!r}")
        if name in seen:
            raise ConfigError(f"tier {name!r} given twice")
        seen.add(name)
        caps[name] = parse_size(size)
    return Hierarchy.build(caps["dram"], caps["nvm"], caps["ssd"], catalog, block_size)


METRIC_KEYS = (
    "ops_total", "ops_measured", "sim_time_ns", "throughput_ops_per_s", "nvm_writes",
    "ssd_reads", "ssd_writes", "dram_hits", "nvm_hits", "dram_evictions",
    "nvm_evictions", "dram_reads", "dram_writes", "nvm_reads",
)

PATHS = ("read_dram_hit", "read_nvm_hit", "read_miss",
         "write_dram_hit", "write_dram_install", "write_nvm", "write_ssd")


@dataclass
class SimMetrics:
    ops_total: int = 0
    ops_measured: int = 0
    sim_time: int = 0
    read_ops: int = 0
    write_ops: int = 0
    dram_reads: int = 0
    dram_writes: int = 0
    nvm_reads: int = 0
    nvm_writes: int = 0
    ssd_reads: int = 0
    ssd_writes: int = 0
    dram_hits: int = 0
    nvm_hits: int = 0
    dram_evictions: int = 0
    nvm_evictions: int = 0
    # Path counts cover every replayed operation, warm-up included.
    paths: dict = field(default_factory=lambda: dict.fromkeys(PATHS, 0))

    @property
    def throughput(self) -> float:
        if self.sim_time <= 0:
            return 0.0
        return self.ops_measured / (self.sim_time * 1e-9)

    def reads(self, tier: TierKind) -> int:
        return {TierKind.DRAM: self.dram_reads, TierKind.NVM: self.nvm_reads,
                TierKind.SSD: self.ssd_reads}[tier]

    def writes(self, tier: TierKind) -> int:
        return {TierKind.DRAM: self.dram_writes, TierKind.NVM: self.nvm_writes,
                TierKind.SSD: self.ssd_writes}[tier]

    def as_dict(self) -> dict:
        d = asdict(self)
        d["sim_time_ns"] = d.pop("sim_time")
        d["throughput_ops_per_s"] = self.throughput
        return {k: d[k] for k in METRIC_KEYS}


@dataclass(frozen=True)
class EngineConfig:
    policy: MigrationPolicy = EAGER
    block_size: int = DEFAULT_BLOCK_SIZE
    warmup_fraction: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.warmup_fraction <= 1.0:
            raise ConfigError("warmup_fraction must be in [0, 1]")
        if self.block_size <= 0:
            raise ConfigError("block_size must be positive")


class MigrationEngine:
    """Live buffer state plus counters for one simulated hierarchy."""

    def __init__(self, config: EngineConfig, hierarchy: Hierarchy):
        if hierarchy.block_size != config.block_size:
            hierarchy = Hierarchy(hierarchy.dram, hierarchy.nvm, hierarchy.ssd, config.block_size)
        self.config = config
        self.hierarchy = hierarchy
        self.policy = config.policy
        self.rng = random.Random(config.rng_seed)
        self.dram = BufferPool(TierKind.DRAM, hierarchy.slots(TierKind.DRAM))
        self.nvm = BufferPool(TierKind.NVM, hierarchy.slots(TierKind.NVM))
        self.pools = {TierKind.DRAM: self.dram, TierKind.NVM: self.nvm}
        self.has_dram = self.dram.capacity_slots > 0
        self.has_nvm = self.nvm.capacity_slots > 0
        bs = config.block_size
        self.t_dram_r = block_transfer_time(hierarchy.dram, "read", bs)
        self.t_dram_w = block_transfer_time(hierarchy.dram, "write", bs)
        self.t_nvm_r = block_transfer_time(hierarchy.nvm, "read", bs)
        self.t_nvm_w = block_transfer_time(hierarchy.nvm, "write", bs)
        self.t_ssd_r = block_transfer_time(hierarchy.ssd, "read", bs)
        self.t_ssd_w = block_transfer_time(hierarchy.ssd, "write", bs)
        self.metrics = SimMetrics()
        self.paths = dict.fromkeys(PATHS, 0)

    def load_snapshot(self, snapshot: Snapshot | None, footprint_blocks: int | None = None):
        snapshot = snapshot or Snapshot()
        if footprint_blocks is not None:
            for items in snapshot.tiers.values():
                for b, _ in items:
                    if not 0 <= b < footprint_blocks:
                        raise ConfigError(f"snapshot block {b} outside trace footprint")
        load_snapshot(self.pools, snapshot)

    def reset_metrics(self):
        self.metrics = SimMetrics()

    # -- evictions -------------------------------------------------------

    def evict_from_dram(self, victim: int, was_dirty: bool) -> int:
        m = self.metrics
        m.dram_evictions += 1
        if not was_dirty:
            return 0
        nvm = self.nvm
        if victim in nvm.entries:
            nvm.mark_dirty(victim)
            m.nvm_writes += 1
            return self.t_nvm_w
        admit = self.rng.random() < self.policy.n_w
        if admit and self.has_nvm:
            m.nvm_writes += 1
            charge = self.t_nvm_w
            out = nvm.insert(victim, True)
            if out is not None:
                charge += self.evict_from_nvm(*out)
            return charge
        m.ssd_writes += 1
        return self.t_ssd_w

    def evict_from_nvm(self, victim: int, was_dirty: bool) -> int:
        m = self.metrics
        m.nvm_evictions += 1
        if not was_dirty:
            return 0
        m.ssd_writes += 1
        return self.t_ssd_w

    def _install_dram(self, block: int, dirty: bool) -> int:
        self.metrics.dram_writes += 1
        out = self.dram.insert(block, dirty)
        if out is not None:
            return self.t_dram_w + self.evict_from_dram(*out)
        return self.t_dram_w

    def _install_nvm(self, block: int, dirty: bool) -> int:
        self.metrics.nvm_writes += 1
        out = self.nvm.insert(block, dirty)
        if out is not None:
            return self.t_nvm_w + self.evict_from_nvm(*out)
        return self.t_nvm_w

    # -- operations ------------------------------------------------------

    def handle_read(self, block: int) -> int:
        m, policy = self.metrics, self.policy
        if self.dram.lookup(block):
            self.paths["read_dram_hit"] += 1
            m.dram_hits += 1
            m.dram_reads += 1
            return self.t_dram_r
        if self.nvm.lookup(block):
            self.paths["read_nvm_hit"] += 1
            m.nvm_hits += 1
            m.nvm_reads += 1
            charge = self.t_nvm_r
            if self.rng.random() < policy.d_r and self.has_dram:
                charge += self._install_dram(block, False)
            return charge

        self.paths["read_miss"] += 1
        m.ssd_reads += 1
        charge = self.t_ssd_r
        u_d = self.rng.random()
        u_n = self.rng.random()
        if not self.has_nvm:
            to_nvm = False
        elif not self.has_dram:
            to_nvm = True
        else:
            to_nvm = u_n < policy.n_r
        if to_nvm:
            charge += self._install_nvm(block, False)
            if u_d < policy.d_r and self.has_dram:
                charge += self._install_dram(block, False)
        elif self.has_dram:
            charge += self._install_dram(block, False)
        return charge

    def handle_write(self, block: int) -> int:
        dram = self.dram
        if block in dram.entries:
            self.paths["write_dram_hit"] += 1
            self.metrics.dram_writes += 1
            dram.mark_dirty(block)
            return self.t_dram_w
        if self.rng.random() < self.policy.d_w and self.has_dram:
            self.paths["write_dram_install"] += 1
            return self._install_dram(block, True)
        if self.has_nvm:
            self.paths["write_nvm"] += 1
            nvm = self.nvm
            if block in nvm.entries:
                self.metrics.nvm_writes += 1
                nvm.mark_dirty(block)
                return self.t_nvm_w
            return self._install_nvm(block, True)
        self.paths["write_ssd"] += 1
        self.metrics.ssd_writes += 1
        return self.t_ssd_w

    def run(self, trace, measure_from: int = 0) -> SimMetrics:
        """Replay ``trace``; only operations at index >= measure_from are counted."""
        n = len(trace)
        self.paths = dict.fromkeys(PATHS, 0)
        self.reset_metrics()
        handle_read, handle_write = self.handle_read, self.handle_write
        writes = trace.is_write.tolist()
        blocks = trace.blocks.tolist()
        split = min(max(measure_from, 0), n)
        for i in range(split):
            if writes[i]:
                handle_write(blocks[i])
            else:
                handle_read(blocks[i])
        self.reset_metrics()
        sim_time = 0
        n_writes = 0
        for i in range(split, n):
            if writes[i]:
                n_writes += 1
                sim_time += handle_write(blocks[i])
            else:
                sim_time += handle_read(blocks[i])
        m = self.metrics
        m.ops_total = n
        m.ops_measured = n - split
        m.write_ops = n_writes
        m.read_ops = m.ops_measured - n_writes
        m.sim_time = sim_time
        m.paths = dict(self.paths)
        return m


def warmup_index(n: int, warmup_fraction: float) -> int:
    return min(n, math.ceil(warmup_fraction * n))


def check_fits(hierarchy: Hierarchy, footprint_blocks: int) -> None:
    if hierarchy.slots(TierKind.SSD) < footprint_blocks:
        raise ConfigError(
            f"trace footprint ({footprint_blocks} blocks) exceeds SSD capacity "
            f"({hierarchy.slots(TierKind.SSD)} blocks)")


def run_trace(config: EngineConfig, hierarchy: Hierarchy, trace,
              snapshot: Snapshot | None = None) -> SimMetrics:
    """Replay a whole trace from a fresh engine, warming up on the leading fraction."""
    engine = MigrationEngine(config, hierarchy)
    check_fits(engine.hierarchy, trace.footprint_blocks)
    engine.load_snapshot(snapshot, trace.footprint_blocks)
    return engine.run(trace, warmup_index(len(trace), config.warmup_fraction))


def format_metrics_json(metrics: SimMetrics) -> str:
    return json.dumps(metrics.as_dict(), indent=2) + "\n"


def format_metrics_csv(metrics: SimMetrics, header: bool = True) -> str:
    d = metrics.as_dict()
    row = ",".join(_fmt(d[k]) for k in METRIC_KEYS)
    return (",".join(METRIC_KEYS) + "\n" if header else "") + row + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)
