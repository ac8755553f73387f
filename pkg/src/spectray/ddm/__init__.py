"""Domain-decomposed parallel rendering.

The scene is split into a grid of sub-domains; rays march between them as
boundary records, shadow queries travel as probe records, and a gatherer
reassembles pixels.  Ordered gathering reproduces the monolithic tracer's
output bit for bit.
"""

from .coordinator import Coordinator, OwnershipRegistry, assign_round_robin
from .engine import run_distributed
from .partition import EXTERIOR, Partition, SubDomain, partition
from .records import (
    GATHERER,
    PROTOCOL_VERSION,
    Handshake,
    LedgerCounters,
    OwnershipUpdate,
    PixelContrib,
    ProtocolError,
    RayRecord,
    ShadowAnswer,
    ShadowProbe,
    Status,
    Terminate,
    Terminated,
    check_crossing,
)
from .worker import DdmTuning, Worker, advance, shadow_prefix

__all__ = [
    "Coordinator",
    "OwnershipRegistry",
    "assign_round_robin",
    "run_distributed",
    "EXTERIOR",
    "Partition",
    "SubDomain",
    "partition",
    "GATHERER",
    "PROTOCOL_VERSION",
    "Handshake",
    "LedgerCounters",
    "OwnershipUpdate",
    "PixelContrib",
    "ProtocolError",
    "RayRecord",
    "ShadowAnswer",
    "ShadowProbe",
    "Status",
    "Terminate",
    "Terminated",
    "check_crossing",
    "DdmTuning",
    "Worker",
    "advance",
    "shadow_prefix",
]
