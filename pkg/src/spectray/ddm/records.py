"""Message records exchanged between workers and the coordinator.

Every cross-worker interaction is one of these dataclasses; the socket
transport serializes them with :mod:`spectray.ddm.protocol`, the in-process
hub passes them as objects.  All routing is a star: workers only ever talk
to the coordinator, which forwards records to the current owner of the
destination cell.

A RayRecord carries the ORIGINAL ray origin alongside its entry point.
Re-basing the ray at each boundary would perturb hit parameters by a few
ulps; keeping the origin means every cell evaluates the exact same floats
as the monolithic tracer, which is what makes bit-equal output possible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

GATHERER = -2  # endpoint id of the coordinator/gatherer

PROTOCOL_VERSION = 1


@dataclass
class RayRecord:
    """A path node's visit to one cell (seed, local spawn, or crossing)."""

    pixel: int
    path_id: int
    depth: int
    kind: int                 # 0 primary, 1 reflected, 2 refracted
    dest: int                 # cell id
    origin: np.ndarray        # original ray origin, never re-based
    direction: np.ndarray
    throughput: np.ndarray
    t_min: float              # epsilon offset of the underlying ray
    window_lo: float          # exclusive lower bound of the untested range
    entry: np.ndarray         # where the ray enters the destination cell
    crossings: int = 0
    continuation: bool = False  # True for boundary crossings (not a new node)


@dataclass
class ShadowProbe:
    """Occlusion query for the part of a shadow segment inside one cell."""

    probe_id: int
    asker: int                # worker id awaiting the answer
    dest: int                 # cell id
    origin: np.ndarray        # the shaded hit position
    direction: np.ndarray     # unit, toward the light
    t_min: float
    t_light: float
    window_lo: float
    hops: int = 0


@dataclass
class ShadowAnswer:
    probe_id: int
    asker: int
    blocked: bool


@dataclass
class PixelContrib:
    pixel: int
    path_id: int
    value: np.ndarray


@dataclass
class Status:
    """Counter deltas plus a queue snapshot, flushed once per worker step.

    Within a flush, contributions precede the Status and records follow it;
    with FIFO links this makes the coordinator's ledger conservative: a
    node's creation is always recorded before any worker can report it
    completed, so in_flight never dips to zero while work remains.
    """

    created: int = 0
    completed: int = 0
    crossings: int = 0
    probe_hops: int = 0
    loads: int = 0
    unloads: int = 0
    cells: list[tuple[int, int, bool]] = field(default_factory=list)  # (id, pending, loaded)


@dataclass
class OwnershipUpdate:
    """Coordinator-issued change to a worker's assigned cell set."""

    version: int
    add: tuple[int, ...] = ()
    remove: tuple[int, ...] = ()


@dataclass
class Handshake:
    version: int
    worker_id: int
    start_nm: float
    end_nm: float
    bins: int


@dataclass
class Terminate:
    pass


@dataclass
class Terminated:
    pass


@dataclass
class LedgerCounters:
    """Global ray accounting; the termination signal is in_flight == 0."""

    created: int = 0
    completed: int = 0
    crossings: int = 0
    probe_hops: int = 0
    loads: int = 0
    unloads: int = 0
    migrations: int = 0

    @property
    def in_flight(self) -> int:
        return self.created - self.completed


class ProtocolError(RuntimeError):
    """A violated protocol invariant (bug, not a user error)."""


def check_crossing(record: RayRecord, part) -> Optional[str]:
    """Validate the boundary-record invariants; None when they hold.

    The entry point must lie on the destination box within a tolerance of
    1e-6 of the grid diagonal, and the direction must not point out of the
    box through the entry face.
    """
    cell = part.cells[record.dest]
    tol = 1e-6 * part.box.diagonal
    entry = record.entry
    clamped = np.clip(entry, cell.box.lo, cell.box.hi)
    if float(np.max(np.abs(entry - clamped))) > tol:
        return f"entry {entry} off cell {record.dest} box by more than {tol}"
    on_face = False
    for face in range(6):
        axis = (0, 0, 1, 1, 2, 2)[face]
        plane = cell.box.lo[axis] if face % 2 == 0 else cell.box.hi[axis]
        if abs(float(entry[axis]) - float(plane)) <= tol:
            outward = -1.0 if face % 2 == 0 else 1.0
            if outward * float(record.direction[axis]) <= 0.0:
                on_face = True
    if not on_face and record.continuation:
        return f"crossing entry {entry} not on an inbound face of cell {record.dest}"
    return None
