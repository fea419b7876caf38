"""Synthetic trace generation, the trace file format, and skew characterization."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Union

import numpy as np

from .buffer import Snapshot
from .devices import TierKind
from .errors import ConfigError, TraceFormatError

READ = "R"
WRITE = "W"


class TraceOperation(NamedTuple):
    kind: str   # "R" or "W"
    block: int


class Trace:
    """An immutable sequence of block reads/writes over ``footprint_blocks`` ids.

    Operations are held as two parallel numpy arrays; iterate to get
    :class:`TraceOperation` values.
    """

    __slots__ = ("footprint_blocks", "is_write", "blocks")

    def __init__(self, footprint_blocks: int, is_write, blocks):
        is_write = np.asarray(is_write, dtype=bool)
        blocks = np.asarray(blocks, dtype=np.int64)
        if is_write.shape != blocks.shape or blocks.ndim != 1:
            raise ValueError("is_write and blocks must be 1-d and the same length")
        if footprint_blocks < 1:
            raise TraceFormatError("footprint_blocks must be >= 1")
        if len(blocks) and (blocks.min() < 0 or blocks.max() >= footprint_blocks):
            raise TraceFormatError("block id outside [0, footprint_blocks)")
        is_write.setflags(write=False)
        blocks.setflags(write=False)
        self.footprint_blocks = int(footprint_blocks)
        self.is_write = is_write
        self.blocks = blocks

    @classmethod
    def from_ops(cls, footprint_blocks: int, ops) -> "Trace":
        ops = list(ops)
        return cls(footprint_blocks,
                   [op[0] == WRITE for op in ops],
                   [op[1] for op in ops])

    @property
    def ops(self) -> list[TraceOperation]:
        return list(self)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self) -> Iterator[TraceOperation]:
        for w, b in zip(self.is_write.tolist(), self.blocks.tolist()):
            yield TraceOperation(WRITE if w else READ, b)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Trace(self.footprint_blocks, self.is_write[item], self.blocks[item])
        return TraceOperation(WRITE if self.is_write[item] else READ, int(self.blocks[item]))

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (self.footprint_blocks == other.footprint_blocks
                and np.array_equal(self.is_write, other.is_write)
                and np.array_equal(self.blocks, other.blocks))

    def __repr__(self):
        return f"Trace(footprint_blocks={self.footprint_blocks}, ops={len(self)})"

    @property
    def num_reads(self) -> int:
        return int(len(self) - self.is_write.sum())

    @property
    def num_writes(self) -> int:
        return int(self.is_write.sum())

    def footprint(self) -> int:
        """Number of distinct blocks referenced at least once."""
        return int(np.unique(self.blocks).size)


# -- workload shapes ---------------------------------------------------------

@dataclass(frozen=True)
class Zipf:
    theta: float = 1.0


@dataclass(frozen=True)
class LogAppend:
    """Zipf data traffic interleaved with sequential log-block writes.

    The log region is the top ``log_blocks`` ids (default: a tenth of the
    footprint); data accesses use the ids below it.
    """

    log_fraction: float = 0.2
    theta: float = 1.0
    log_blocks: int | None = None


@dataclass(frozen=True)
class ShiftingHotSet:
    hot_set_blocks: int = 100
    shift_period: int = 10_000
    hot_probability: float = 0.9


Shape = Union[Zipf, LogAppend, ShiftingHotSet]


@dataclass(frozen=True)
class WorkloadSpec:
    shape: Shape
    blocks: int
    ops: int
    read_ratio: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.blocks < 1:
            raise ConfigError("blocks must be >= 1")
        if self.ops < 1:
            raise ConfigError("ops must be >= 1")
        if not 0.0 <= self.read_ratio <= 1.0:
            raise ConfigError("read_ratio must be in [0, 1]")
        s = self.shape
        if isinstance(s, (Zipf, LogAppend)) and s.theta < 0:
            raise ConfigError("theta must be >= 0")
        if isinstance(s, LogAppend):
            if not 0.0 <= s.log_fraction <= 1.0:
                raise ConfigError("log_fraction must be in [0, 1]")
            if self.blocks < 2:
                raise ConfigError("log workload needs at least 2 blocks")
            if s.log_blocks is not None and not 1 <= s.log_blocks < self.blocks:
                raise ConfigError("log_blocks must be in [1, blocks)")
        if isinstance(s, ShiftingHotSet):
            if not 1 <= s.hot_set_blocks <= self.blocks:
                raise ConfigError("hot_set_blocks must be in [1, blocks]")
            if s.shift_period < 1:
                raise ConfigError("shift_period must be >= 1")
            if not 0.0 <= s.hot_probability <= 1.0:
                raise ConfigError("hot_probability must be in [0, 1]")


def zipf_cdf(n: int, theta: float) -> np.ndarray:
    """Exact cumulative probabilities of ranks 1..n under P(k) ~ 1/k**theta."""
    weights = np.arange(1, n + 1, dtype=np.float64) ** -theta
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    return cdf


def sample_zipf(rng: np.random.Generator, n: int, theta: float, size: int) -> np.ndarray:
    """Zero-based ranks; rank 0 is the most popular."""
    cdf = zipf_cdf(n, theta)
    return np.searchsorted(cdf, rng.random(size), side="right").clip(max=n - 1)


def _log_blocks(spec: WorkloadSpec) -> int:
    shape = spec.shape
    if shape.log_blocks is not None:
        return shape.log_blocks
    return max(1, spec.blocks // 10)


def generate(spec: WorkloadSpec) -> Trace:
    rng = np.random.default_rng(spec.seed)
    n, shape = spec.ops, spec.shape
    is_write = rng.random(n) >= spec.read_ratio

    if isinstance(shape, Zipf):
        blocks = sample_zipf(rng, spec.blocks, shape.theta, n)
    elif isinstance(shape, LogAppend):
        nlog = _log_blocks(spec)
        data_blocks = spec.blocks - nlog
        is_log = rng.random(n) < shape.log_fraction
        blocks = sample_zipf(rng, data_blocks, shape.theta, n)
        # Log writes walk the log region in order, wrapping at the footprint.
        seq = np.cumsum(is_log) - 1
        blocks = np.where(is_log, data_blocks + seq % nlog, blocks)
        is_write = is_write | is_log
    elif isinstance(shape, ShiftingHotSet):
        hot = rng.random(n) < shape.hot_probability
        window = np.arange(n) // shape.shift_period
        start = (window * shape.hot_set_blocks) % spec.blocks
        in_window = rng.integers(0, shape.hot_set_blocks, size=n)
        anywhere = rng.integers(0, spec.blocks, size=n)
        blocks = np.where(hot, (start + in_window) % spec.blocks, anywhere)
    else:
        raise ConfigError(f"unknown workload shape {shape!r}")
    return Trace(spec.blocks, is_write, blocks)


def hotness_order(spec: WorkloadSpec) -> np.ndarray:
    """Block ids from hottest to coldest under the generator's distribution.

    Every shape assigns popularity by ascending id: Zipf rank k is block k,
    the log region sits above the data blocks, and the first hot window of a
    shifting workload starts at block 0.
    """
    return np.arange(spec.blocks)


def warm_snapshot(spec: WorkloadSpec, dram_slots: int, nvm_slots: int,
                  fill: float = 1.0) -> Snapshot:
    """Hottest blocks in DRAM, the next hottest in NVM, each tier filled to ``fill``.

    Within a tier the hottest block is listed last, i.e. most recently used.
    """
    if not 0.0 <= fill <= 1.0:
        raise ConfigError("fill must be in [0, 1]")
    order = hotness_order(spec).tolist()
    nd = min(int(dram_slots * fill), len(order))
    nn = min(int(nvm_slots * fill), len(order) - nd)
    dram = order[:nd]
    nvm = order[nd:nd + nn]
    tiers = {}
    if dram:
        tiers[TierKind.DRAM] = [(b, False) for b in reversed(dram)]
    if nvm:
        tiers[TierKind.NVM] = [(b, False) for b in reversed(nvm)]
    return Snapshot(tiers)


# -- skew characterization ---------------------------------------------------

@dataclass(frozen=True)
class SkewCdf:
    block_fraction: np.ndarray
    access_fraction: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.block_fraction.tolist(), self.access_fraction.tolist()))

    def access_at(self, block_fraction: float) -> float:
        """Fraction of accesses made to the coldest ``block_fraction`` of blocks."""
        idx = np.searchsorted(self.block_fraction, block_fraction, side="right") - 1
        return 0.0 if idx < 0 else float(self.access_fraction[idx])


def characterize(trace: Trace) -> SkewCdf:
    if len(trace) == 0:
        raise ConfigError("cannot characterize an empty trace")
    counts = np.bincount(trace.blocks, minlength=trace.footprint_blocks)
    counts = np.sort(counts[counts > 0])
    n = counts.size
    cum = np.cumsum(counts)
    bf = np.arange(1, n + 1, dtype=np.float64) / n
    af = cum / cum[-1]
    bf[-1] = af[-1] = 1.0
    return SkewCdf(bf, af)


def format_cdf(cdf: SkewCdf) -> str:
    out = io.StringIO()
    out.write("block_fraction,access_fraction\n")
    for x, y in cdf.points:
        out.write(f"{x:.6f},{y:.6f}\n")
    return out.getvalue()


# -- trace file format -------------------------------------------------------

MAGIC = "MTSIM"
VERSION = "v1"


def format_trace(trace: Trace) -> str:
    header = f"{MAGIC} {VERSION} blocks={trace.footprint_blocks} ops={len(trace)}\n"
    kinds = np.where(trace.is_write, WRITE, READ)
    body = "".join(f"{k} {b}\n" for k, b in zip(kinds.tolist(), trace.blocks.tolist()))
    return header + body


def write_trace(trace: Trace, destination) -> None:
    text = format_trace(trace)
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w") as fh:
            fh.write(text)
    else:
        destination.write(text)


def _parse_header(line: str) -> tuple[int, int]:
    parts = line.split()
    if len(parts) != 4 or parts[0] != MAGIC or parts[1] != VERSION:
        raise TraceFormatError(f"line 1: expected '{MAGIC} {VERSION} blocks=<n> ops=<n>'")
    fields = {}
    for part in parts[2:]:
        key, _, value = part.partition("=")
        try:
            fields[key] = int(value)
        except ValueError:
            raise TraceFormatError(f"line 1: bad header field {part!r}") from None
    if set(fields) != {"blocks", "ops"}:
        raise TraceFormatError("line 1: header needs blocks= and ops=")
    return fields["blocks"], fields["ops"]


def parse_trace(text: str) -> Trace:
    lines = text.splitlines()
    if not lines:
        raise TraceFormatError("line 1: empty trace file")
    footprint, nops = _parse_header(lines[0])
    if footprint < 1:
        raise TraceFormatError("line 1: blocks must be >= 1")
    is_write = np.empty(nops, dtype=bool)
    blocks = np.empty(nops, dtype=np.int64)
    i = 0
    for lineno, raw in enumerate(lines[1:], 2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] not in (READ, WRITE):
            raise TraceFormatError(f"line {lineno}: expected 'R <id>' or 'W <id>'")
        try:
            block = int(parts[1])
        except ValueError:
            raise TraceFormatError(f"line {lineno}: bad block id {parts[1]!r}") from None
        if not 0 <= block < footprint:
            raise TraceFormatError(
                f"line {lineno}: block {block} outside footprint of {footprint} blocks")
        if i >= nops:
            raise TraceFormatError(f"line {lineno}: more operations than header ops={nops}")
        is_write[i] = parts[0] == WRITE
        blocks[i] = block
        i += 1
    if i != nops:
        raise TraceFormatError(f"header says ops={nops} but file has {i}")
    return Trace(footprint, is_write, blocks)


def read_trace(source) -> Trace:
    if isinstance(source, (str, os.PathLike)):
        with open(source) as fh:
            return parse_trace(fh.read())
    return parse_trace(source.read())
