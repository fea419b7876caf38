"""Storage hierarchy selection under a cost budget.

``enumerate_hierarchies`` filters the DRAM x NVM x SSD candidate grid by
budget and footprint, ``recommend`` measures every surviving hierarchy by
trace replay and ranks them by throughput per dollar. The closed-form
estimator (``effective_access_time``) assumes each level holds a copy of
everything above it; the simulator does not, so treat it as a screen only.
"""

from __future__ import annotations

import io
import json
import logging
from fractions import Fraction
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence, Union

import numpy as np

from .buffer import BufferPool
from .devices import GB, DeviceCatalog, TierKind, block_transfer_time, device_cost
from .engine import EAGER, METRIC_KEYS, EngineConfig, Hierarchy, MigrationPolicy, SimMetrics, run_trace
from .errors import ConfigError, ModelError
from .tuner import AnnealingConfig, PolicyGrid, anneal

log = logging.getLogger(__name__)


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class CandidateSets:
    """Candidate capacities (bytes) per tier; 0 stands for an absent tier.

    Non-zero entries must be powers of two. Sub-gigabyte powers of two are
    allowed so that desk-scale traces can be provisioned meaningfully.
    """

    dram: tuple
    nvm: tuple
    ssd: tuple

    def __post_init__(self):
        for name in ("dram", "nvm", "ssd"):
            caps = tuple(sorted(set(int(c) for c in getattr(self, name))))
            if not caps:
                raise ConfigError(f"{name} candidate set is empty")
            for c in caps:
                if c != 0 and not _is_pow2(c):
                    raise ConfigError(f"{name} candidate {c} is not a power of two")
            object.__setattr__(self, name, caps)


def enumerate_hierarchies(sets: CandidateSets, catalog: DeviceCatalog | None, budget: float,
                          footprint: int, block_size: int = 4096) -> list[Hierarchy]:
    """All affordable triples whose SSD holds the footprint and that buffer something."""
    if budget <= 0:
        raise ConfigError("budget must be positive")
    catalog = catalog or DeviceCatalog()
    dram_p, nvm_p, ssd_p = (catalog.get(n) for n in ("dram", "nvm", "ssd"))
    out = []
    for d, n, s in product(sets.dram, sets.nvm, sets.ssd):
        if d == 0 and n == 0:
            continue
        if s < footprint:
            continue
        cost = (device_cost(dram_p.with_capacity(d)) + device_cost(nvm_p.with_capacity(n))
                + device_cost(ssd_p.with_capacity(s)))
        if cost <= budget:
            out.append(Hierarchy(dram_p.with_capacity(d), nvm_p.with_capacity(n),
                                 ssd_p.with_capacity(s), block_size))
    return out


@dataclass(frozen=True)
class Fixed:
    policy: MigrationPolicy = EAGER


@dataclass(frozen=True)
class Tuned:
    config: AnnealingConfig
    grid: PolicyGrid = field(default_factory=PolicyGrid)


PolicySource = Union[Fixed, Tuned]


@dataclass
class Candidate:
    hierarchy: Hierarchy
    total_cost: float
    throughput: float
    perf_per_price: float
    metrics: SimMetrics
    policy: MigrationPolicy
    error: str | None = None

    def sort_key(self):
        return (-self.perf_per_price, self.total_cost, self.hierarchy.capacities)


@dataclass
class Recommendation:
    entries: list

    def __len__(self):
        return len(self.entries)

    @property
    def best(self) -> Candidate | None:
        return self.entries[0] if self.entries else None


def _evaluate(args) -> Candidate:
    hierarchy, trace, source, warmup, seed = args
    policy = source.policy if isinstance(source, Fixed) else None
    try:
        if isinstance(source, Tuned):
            policy = anneal(source.config, hierarchy, trace, source.grid).best_policy
        metrics = run_trace(EngineConfig(policy, hierarchy.block_size, warmup, seed),
                            hierarchy, trace)
        error = None
    except Exception as exc:  # a failed candidate ranks with zero throughput
        metrics, error = SimMetrics(), f"{type(exc).__name__}: {exc}"
        policy = policy or EAGER
    cost = hierarchy.total_cost
    tput = metrics.throughput
    ppp = tput / cost if cost > 0 else (float("inf") if tput > 0 else 0.0)
    return Candidate(hierarchy, cost, tput, ppp, metrics, policy, error)


def rank(candidates: Sequence[Candidate]) -> Recommendation:
    return Recommendation(sorted(candidates, key=Candidate.sort_key))


def recommend(sets: CandidateSets, catalog: DeviceCatalog | None, budget: float, trace,
              policy_source: PolicySource | None = None, block_size: int = 4096,
              warmup_fraction: float = 0.5, seed: int = 0, parallel: int = 1) -> Recommendation:
    policy_source = policy_source or Fixed()
    footprint = trace.footprint_blocks * block_size
    hierarchies = enumerate_hierarchies(sets, catalog, budget, footprint, block_size)
    if not hierarchies:
        log.warning("no candidate hierarchy fits a budget of $%.2f", budget)
        return Recommendation([])
    jobs = [(h, trace, policy_source, warmup_fraction, seed) for h in hierarchies]
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_evaluate, jobs))
    else:
        results = [_evaluate(j) for j in jobs]
    for c in results:
        if c.error:
            log.warning("candidate %s failed: %s", c.hierarchy, c.error)
    return rank(results)


REPORT_COLUMNS = ("rank", "dram_gb", "nvm_gb", "ssd_gb", "cost_usd", "throughput_ops_s",
                  "perf_per_price", "policy") + METRIC_KEYS


def report_rows(rec: Recommendation) -> list[dict]:
    rows = []
    for i, c in enumerate(rec.entries, 1):
        d, n, s = (cap / GB for cap in c.hierarchy.capacities)
        row = {"rank": i, "dram_gb": d, "nvm_gb": n, "ssd_gb": s,
               "cost_usd": round(c.total_cost, 6), "throughput_ops_s": c.throughput,
               "perf_per_price": c.perf_per_price, "policy": str(c.policy)}
        row.update(c.metrics.as_dict())
        rows.append(row)
    return rows


def format_report_csv(rec: Recommendation) -> str:
    out = io.StringIO()
    out.write(",".join(REPORT_COLUMNS) + "\n")
    for row in report_rows(rec):
        cells = []
        for k in REPORT_COLUMNS:
            v = row[k]
            cells.append(f'"{v}"' if k == "policy" else (repr(v) if isinstance(v, float) else str(v)))
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def format_report_json(rec: Recommendation) -> str:
    return json.dumps(report_rows(rec), indent=2) + "\n"


# -- analytical model --------------------------------------------------------

class HitRatioCurve:
    """Step function capacity -> hit fraction, with H(0) = 0.

    Lookups between measured capacities use the largest measured capacity not
    exceeding the query, which keeps the curve monotone.
    """

    def __init__(self, capacities, hits):
        caps = np.asarray(capacities, dtype=np.float64)
        h = np.asarray(hits, dtype=np.float64)
        order = np.argsort(caps)
        caps, h = caps[order], h[order]
        if caps.size == 0 or caps[0] != 0:
            caps = np.concatenate([[0.0], caps])
            h = np.concatenate([[0.0], h])
        if h[0] != 0:
            raise ModelError("H(0) must be 0")
        if np.any(np.diff(h) < 0) or h.max() > 1 or h.min() < 0:
            raise ModelError("hit ratio curve must be monotone and within [0, 1]")
        self.capacities = caps
        self.hits = h

    def __call__(self, capacity: float) -> float:
        i = np.searchsorted(self.capacities, capacity, side="right") - 1
        return float(self.hits[max(i, 0)])


def lru_hit_ratio(trace, capacity_slots: int) -> float:
    """Hit fraction of a single pure-LRU pool replaying every access in the trace."""
    if capacity_slots <= 0 or len(trace) == 0:
        return 0.0
    pool = BufferPool(TierKind.DRAM, capacity_slots)
    hits = 0
    for b in trace.blocks.tolist():
        if pool.lookup(b):
            hits += 1
        else:
            pool.insert(b)
    return hits / len(trace)


def hit_ratio_curve(trace, capacities_slots: Sequence[int]) -> HitRatioCurve:
    caps = sorted(set(int(c) for c in capacities_slots))
    return HitRatioCurve(caps, [lru_hit_ratio(trace, c) for c in caps])


def effective_access_time(curve, tiers: Sequence[tuple]) -> float:
    """Expected per-request time over a linear hierarchy.

    ``tiers`` is ``[(capacity, t), ...]`` from the top level down; the last
    level must hold everything (H = 1). A request that hits level i pays
    t_1 + ... + t_i.
    """
    if not tiers:
        raise ModelError("need at least one level")
    caps = [c for c, _ in tiers]
    times = [t for _, t in tiers]
    if any(b < a for a, b in zip(caps, caps[1:])):
        raise ModelError("capacities must be non-decreasing down the hierarchy")
    H = [0.0] + [curve(c) for c in caps]
    if abs(H[-1] - 1.0) > 1e-12:
        raise ModelError(f"lowest level must hold every block, H = {H[-1]}")
    # Exact rationals over the shortest decimal form of each input, so that
    # e.g. H = 0.9 behaves as 9/10 and hand-worked examples come out exact.
    H = [Fraction(repr(float(h))) for h in H[:-1]] + [Fraction(1)]
    t = [Fraction(repr(float(x))) for x in times]

    total = sum((H[i] - H[i - 1]) * sum(t[:i]) for i in range(1, len(H)))
    alternative = sum((1 - H[i - 1]) * t[i - 1] for i in range(1, len(H)))
    scale = max(abs(total), abs(alternative), Fraction(1, 10**300))
    assert abs(total - alternative) <= scale / 10**9, (total, alternative)
    return float(total)


def estimate_access_time(hierarchy: Hierarchy, trace) -> float:
    """Screening estimate (ns per request) for a hierarchy on a trace.

    Levels are the present tiers top-down; SSD is the last level and hits
    everything. Per-level time is the device's block read time.
    """
    bs = hierarchy.block_size
    levels = [d for d in (hierarchy.dram, hierarchy.nvm) if d.present]
    slots = [d.slots(bs) for d in levels]
    curve_pts = {s: lru_hit_ratio(trace, s) for s in slots}
    big = max([trace.footprint_blocks] + slots) + 1
    curve_pts[big] = 1.0

    tiers, prev = [], 0
    for dev, s in zip(levels, slots):
        s = max(s, prev)  # the model needs non-decreasing capacities
        tiers.append((s, block_transfer_time(dev, "read", bs)))
        prev = s
    tiers.append((big, block_transfer_time(hierarchy.ssd, "read", bs)))
    caps = sorted(curve_pts)
    hits = np.maximum.accumulate([curve_pts[c] for c in caps])
    return effective_access_time(HitRatioCurve(caps, hits), tiers)
