"""Simulated-annealing adaptation of the migration policy.

Energy is the negated objective ``throughput + lam / nvm_writes`` so that a
downhill move (dE < 0) is an improvement; worse moves are accepted with
probability ``exp(-dE / T)``. Temperature starts at ``t0`` and is multiplied
by ``alpha`` after each round until it drops to ``t_min``; a round ends after
``gamma`` accepted transitions or ``50 * gamma`` proposals, whichever comes
first.
"""

from __future__ import annotations

import enum
import io
import math
import random
from dataclasses import dataclass, field, replace

from .buffer import Snapshot
from .engine import EAGER, EngineConfig, Hierarchy, MigrationEngine, MigrationPolicy, SimMetrics, check_fits, warmup_index
from .errors import ConfigError

DEFAULT_GRID = (0.0, 0.001, 0.01, 0.1, 0.2, 0.3, 0.5, 1.0)
BINARY_GRID = (0.0, 1.0)
COORDS = ("d_r", "d_w", "n_r", "n_w")
PROPOSAL_CAP_FACTOR = 50


class Mode(str, enum.Enum):
    REPLAY = "replay"
    ONLINE = "online"


@dataclass(frozen=True)
class PolicyGrid:
    values: tuple = DEFAULT_GRID

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        object.__setattr__(self, "values", v)
        if len(v) < 2 or any(b <= a for a, b in zip(v, v[1:])):
            raise ConfigError("grid values must be strictly increasing with at least two entries")
        if v[0] != 0.0 or v[-1] != 1.0:
            raise ConfigError("grid must contain 0 and 1")

    def index(self, value: float) -> int:
        try:
            return self.values.index(value)
        except ValueError:
            raise ConfigError(f"{value} is not on the policy grid") from None

    def contains(self, policy: MigrationPolicy) -> bool:
        return all(v in self.values for v in policy.as_tuple())

    def policies(self):
        """Every policy on the grid (len(values) ** 4 of them)."""
        from itertools import product
        for combo in product(self.values, repeat=4):
            yield MigrationPolicy(*combo)


@dataclass(frozen=True)
class AnnealingConfig:
    alpha: float = 0.9
    gamma: int = 10
    t0: float = 800.0
    t_min: float = 0.00008
    lam: float = 0.0
    epoch_ops: int = 1_000_000
    mode: Mode = Mode.REPLAY
    seed: int = 0
    initial_policy: MigrationPolicy = EAGER
    # Settings of each epoch's engine.
    block_size: int = 4096
    warmup_fraction: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must be in (0, 1)")
        if self.gamma < 1:
            raise ConfigError("gamma must be >= 1")
        if not 0 < self.t_min < self.t0:
            raise ConfigError("need 0 < t_min < t0")
        if self.lam < 0:
            raise ConfigError("lambda must be >= 0")
        if self.epoch_ops < 1:
            raise ConfigError("epoch_ops must be >= 1")
        object.__setattr__(self, "mode", Mode(self.mode))


@dataclass
class Step:
    temperature: float
    policy: MigrationPolicy
    objective: float
    accepted: bool


@dataclass
class TuningResult:
    best_policy: MigrationPolicy
    best_objective: float
    history: list = field(default_factory=list)
    evaluations: int = 0


def objective(metrics: SimMetrics, lam: float) -> float:
    """Throughput plus ``lam`` over NVM writes; zero writes count as one."""
    return metrics.throughput + lam / max(metrics.nvm_writes, 1)


def acceptance_probability(delta_e: float, temperature: float) -> float:
    if delta_e < 0:
        return 1.0
    return math.exp(-delta_e / temperature)


def temperatures(t0: float, alpha: float, t_min: float):
    """t0, t0*alpha, t0*alpha**2, ... while above t_min."""
    k = 0
    t = t0
    while t > t_min:
        yield t
        k += 1
        t = t0 * alpha ** k


def neighbor(policy: MigrationPolicy, grid: PolicyGrid, rng: random.Random) -> MigrationPolicy:
    """Move one uniformly chosen coordinate one grid step up or down.

    A step off either end of the grid reflects back inward.
    """
    coord = COORDS[rng.randrange(4)]
    i = grid.index(getattr(policy, coord))
    step = 1 if rng.random() < 0.5 else -1
    j = i + step
    if j < 0 or j >= len(grid.values):
        j = i - step
    return replace(policy, **{coord: grid.values[j]})


class _ReplayEvaluator:
    """Every candidate replays the same window from the same starting state."""

    def __init__(self, config: AnnealingConfig, hierarchy, trace, snapshot):
        self.config = config
        self.hierarchy = hierarchy
        self.window = trace[:config.epoch_ops]
        self.snapshot = snapshot
        self.cache = {}
        self.evaluations = 0

    def __call__(self, policy: MigrationPolicy, epoch: int) -> float:
        # Replay is deterministic per policy, so repeated proposals are free.
        key = policy.as_tuple()
        if key not in self.cache:
            self.evaluations += 1
            metrics = evaluate_policy(policy, self.config, self.hierarchy, self.window,
                                      self.snapshot)
            self.cache[key] = objective(metrics, self.config.lam)
        return self.cache[key]


class _OnlineEvaluator:
    """Epochs consume successive trace windows on one live engine."""

    def __init__(self, config: AnnealingConfig, hierarchy, trace, snapshot):
        self.config = config
        self.trace = trace
        engine_cfg = EngineConfig(config.initial_policy, config.block_size, 0.0, config.seed)
        self.engine = MigrationEngine(engine_cfg, hierarchy)
        self.engine.load_snapshot(snapshot, trace.footprint_blocks)
        self.pos = 0
        self.evaluations = 0

    def _next_window(self):
        n, size = len(self.trace), self.config.epoch_ops
        if self.pos + size > n:
            self.pos = 0  # wrap around and keep running on the live state
        window = self.trace[self.pos:self.pos + size]
        self.pos += size
        return window

    def __call__(self, policy: MigrationPolicy, epoch: int) -> float:
        self.evaluations += 1
        self.engine.policy = policy
        metrics = self.engine.run(self._next_window())
        return objective(metrics, self.config.lam)


def evaluate_policy(policy: MigrationPolicy, config: AnnealingConfig, hierarchy: Hierarchy,
                    window, snapshot: Snapshot | None = None) -> SimMetrics:
    """One replay-mode epoch: fresh engine, snapshot, warm-up, measure."""
    engine = MigrationEngine(
        EngineConfig(policy, config.block_size, config.warmup_fraction, config.seed), hierarchy)
    engine.load_snapshot(snapshot, window.footprint_blocks)
    return engine.run(window, warmup_index(len(window), config.warmup_fraction))


def anneal(config: AnnealingConfig, hierarchy: Hierarchy, trace, grid: PolicyGrid | None = None,
           snapshot: Snapshot | None = None) -> TuningResult:
    grid = grid or PolicyGrid()
    if len(trace) < config.epoch_ops:
        raise ConfigError(
            f"trace has {len(trace)} operations, shorter than one epoch ({config.epoch_ops})")
    if not grid.contains(config.initial_policy):
        raise ConfigError(f"initial policy {config.initial_policy} is not on the grid")
    check_fits(hierarchy if hierarchy.block_size == config.block_size else
               Hierarchy(hierarchy.dram, hierarchy.nvm, hierarchy.ssd, config.block_size),
               trace.footprint_blocks)

    if config.mode is Mode.REPLAY:
        evaluate = _ReplayEvaluator(config, hierarchy, trace, snapshot)
    else:
        evaluate = _OnlineEvaluator(config, hierarchy, trace, snapshot)
    rng = random.Random(config.seed)
    cap = PROPOSAL_CAP_FACTOR * config.gamma

    current = config.initial_policy
    current_obj = evaluate(current, 0)
    best, best_obj = current, current_obj
    history = [Step(config.t0, current, current_obj, True)]

    for t in temperatures(config.t0, config.alpha, config.t_min):
        accepted = proposals = 0
        while accepted < config.gamma and proposals < cap:
            proposals += 1
            candidate = neighbor(current, grid, rng)
            cand_obj = evaluate(candidate, len(history))
            delta_e = current_obj - cand_obj  # E = -objective
            take = delta_e < 0 or rng.random() < acceptance_probability(delta_e, t)
            history.append(Step(t, candidate, cand_obj, take))
            if take:
                accepted += 1
                current, current_obj = candidate, cand_obj
                if cand_obj > best_obj:
                    best, best_obj = candidate, cand_obj
    return TuningResult(best, best_obj, history, evaluate.evaluations)


HISTORY_HEADER = "step,temperature,d_r,d_w,n_r,n_w,objective,accepted"


def format_history(result: TuningResult) -> str:
    out = io.StringIO()
    out.write(HISTORY_HEADER + "\n")
    for i, s in enumerate(result.history):
        p = s.policy
        out.write(f"{i},{s.temperature!r},{p.d_r!r},{p.d_w!r},{p.n_r!r},{p.n_w!r},"
                  f"{s.objective!r},{int(s.accepted)}\n")
    return out.getvalue()
