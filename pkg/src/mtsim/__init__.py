"""Trace-driven simulation, tuning and provisioning for DRAM/NVM/SSD buffer hierarchies."""

from .buffer import BufferPool, Snapshot
from .devices import DeviceCatalog, DeviceSpec, TierKind, block_transfer_time, device_cost
from .engine import (EAGER, EngineConfig, Hierarchy, MigrationEngine, MigrationPolicy,
                     SimMetrics, parse_hierarchy, run_trace)
from .errors import CapacityError, ConfigError, ModelError, MtsimError, TraceFormatError
from .workload import (LogAppend, ShiftingHotSet, Trace, TraceOperation, WorkloadSpec, Zipf,
                       characterize, generate, read_trace, write_trace)

__version__ = "0.1.0"
