"""Storage device characteristics and per-block transfer timing."""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field, replace

from .errors import ConfigError

KB = 1024
MB = 1024 ** 2
GB = 1024 ** 3
TB = 1024 ** 4

DEFAULT_BLOCK_SIZE = 4096


class TierKind(enum.IntEnum):
    """Device classes ordered fastest to slowest."""

    DRAM = 0
    NVM = 1
    SSD = 2
    HDD = 3

    @classmethod
    def parse(cls, text: str) -> "TierKind":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ConfigError(f"unknown tier kind {text!r}") from None


@dataclass(frozen=True)
class DeviceSpec:
    kind: TierKind
    read_latency: float   # ns
    write_latency: float  # ns
    bandwidth: float      # bytes per second
    cost_per_gb: float    # dollars
    capacity: int = 0     # bytes; 0 means the tier is absent

    def __post_init__(self):
        if self.read_latency <= 0 or self.write_latency <= 0:
            raise ConfigError(f"{self.kind.name}: latencies must be positive")
        if self.bandwidth <= 0:
            raise ConfigError(f"{self.kind.name}: bandwidth must be positive")
        if self.cost_per_gb < 0:
            raise ConfigError(f"{self.kind.name}: cost_per_gb must be >= 0")
        if self.capacity < 0:
            raise ConfigError(f"{self.kind.name}: capacity must be >= 0")

    @property
    def present(self) -> bool:
        return self.capacity > 0

    def with_capacity(self, capacity: int) -> "DeviceSpec":
        return replace(self, capacity=int(capacity))

    def slots(self, block_size: int = DEFAULT_BLOCK_SIZE) -> int:
        if self.capacity % block_size:
            raise ConfigError(
                f"{self.kind.name} capacity {self.capacity} is not a multiple "
                f"of the block size {block_size}")
        return self.capacity // block_size


def block_transfer_time(spec: DeviceSpec, direction: str, block_size: int) -> int:
    """Nanoseconds to move one block: access latency plus size over bandwidth."""
    if block_size <= 0:
        raise ValueError("block_size must be positive")
    if direction == "read":
        latency = spec.read_latency
    elif direction == "write":
        latency = spec.write_latency
    else:
        raise ValueError(f"direction must be 'read' or 'write', not {direction!r}")
    ns = latency + block_size / spec.bandwidth * 1e9
    return int(math.floor(ns + 0.5))


def device_cost(spec: DeviceSpec) -> float:
    return spec.cost_per_gb * spec.capacity / GB


# Table of candidate technologies: DRAM, PCM-class NVM, RRAM, SSD, HDD.
DEFAULT_PROFILES = {
    "dram": DeviceSpec(TierKind.DRAM, 50, 50, 60e9, 10.0),
    "nvm": DeviceSpec(TierKind.NVM, 50, 200, 10e9, 1.0),
    "rram": DeviceSpec(TierKind.NVM, 100, 100, 10e9, 1.0),
    "ssd": DeviceSpec(TierKind.SSD, 25_000, 300_000, 1e9, 0.2),
    "hdd": DeviceSpec(TierKind.HDD, 10_000_000, 10_000_000, 0.1e9, 0.02),
}


@dataclass(frozen=True)
class DeviceCatalog:
    """Named device profiles plus an optional NVM latency multiplier.

    When ``nvm_latency_mult`` is set, every NVM profile's read and write
    latency become ``mult`` times the DRAM read latency. The multiplier
    replaces the profile values; it never compounds with an earlier one.
    """

    profiles: dict = field(default_factory=lambda: dict(DEFAULT_PROFILES))
    nvm_latency_mult: float | None = None

    def with_multiplier(self, mult: float | None) -> "DeviceCatalog":
        if mult is not None and mult <= 0:
            raise ConfigError("NVM latency multiplier must be positive")
        return replace(self, nvm_latency_mult=mult)

    def _dram_latency(self) -> float:
        for spec in self.profiles.values():
            if spec.kind is TierKind.DRAM:
                return spec.read_latency
        return DEFAULT_PROFILES["dram"].read_latency

    def get(self, name: str) -> DeviceSpec:
        name = name.lower()
        if name in self.profiles:
            spec = self.profiles[name]
        else:
            kind = TierKind.parse(name)
            matches = [s for s in self.profiles.values() if s.kind is kind]
            if not matches:
                raise ConfigError(f"catalog has no profile for {name!r}")
            spec = matches[0]
        if spec.kind is TierKind.NVM and self.nvm_latency_mult is not None:
            lat = self.nvm_latency_mult * self._dram_latency()
            spec = replace(spec, read_latency=lat, write_latency=lat)
        return spec

    def device(self, name: str, capacity: int) -> DeviceSpec:
        return self.get(name).with_capacity(capacity)


def parse_catalog(text: str) -> DeviceCatalog:
    profiles = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 7:
            raise ConfigError(f"catalog line {lineno}: expected 7 fields, got {len(parts)}")
        name, kind = parts[0], parts[1]
        try:
            read_ns, write_ns, bw, cost = (float(p) for p in parts[2:6])
            capacity = int(parts[6])
        except ValueError:
            raise ConfigError(f"catalog line {lineno}: malformed number") from None
        try:
            profiles[name.lower()] = DeviceSpec(
                TierKind.parse(kind), read_ns, write_ns, bw, cost, capacity)
        except ConfigError as exc:
            raise ConfigError(f"catalog line {lineno}: {exc}") from None
    return DeviceCatalog(profiles)


def load_catalog(path: str | os.PathLike | None = None) -> DeviceCatalog:
    """Read a catalog file; falls back to $MTSIM_CATALOG, then the defaults."""
    path = path or os.environ.get("MTSIM_CATALOG")
    if not path:
        return DeviceCatalog()
    with open(path) as fh:
        return parse_catalog(fh.read())


def format_catalog(catalog: DeviceCatalog) -> str:
    lines = ["# name kind read_ns write_ns bw_bytes_per_s cost_per_gb capacity_bytes"]
    for name, s in catalog.profiles.items():
        lines.append(f"{name} {s.kind.name.lower()} {s.read_latency:g} {s.write_latency:g} "
                     f"{s.bandwidth:g} {s.cost_per_gb:g} {s.capacity}")
    return "\n".join(lines) + "\n"


_UNITS = {"": 1, "B": 1, "KB": KB, "MB": MB, "GB": GB, "TB": TB}


def parse_size(text: str) -> int:
    """'16GB' -> bytes. Units are binary (1 GB = 2**30 bytes)."""
    s = text.strip().upper()
    num = s.rstrip("KMGTB")
    unit = s[len(num):]
    if unit not in _UNITS or not num:
        raise ConfigError(f"bad size {text!r}")
    try:
        value = float(num)
    except ValueError:
        raise ConfigError(f"bad size {text!r}") from None
    size = value * _UNITS[unit]
    if size < 0 or size != int(size):
        raise ConfigError(f"bad size {text!r}")
    return int(size)


def format_size(nbytes: int) -> str:
    if nbytes == 0:
        return "0"
    for unit in ("TB", "GB", "MB", "KB"):
        if nbytes % _UNITS[unit] == 0:
            return f"{nbytes // _UNITS[unit]}{unit}"
    return f"{nbytes}B"
