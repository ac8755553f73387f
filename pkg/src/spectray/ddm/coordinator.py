"""Coordinator: routing hub, ownership registry, gatherer, and ledger.

All worker traffic passes through here (star topology).  The coordinator
seeds primary rays into the cells that contain them, forwards records to
the current home of their destination cell, folds Status deltas into the
global ledger, and gathers pixel contributions.  Termination is purely
ledger-driven: once every created ray is completed (in_flight == 0) there
can be no work anywhere, because workers flush completions only after the
corresponding contributions, and creations before the records themselves.

Ownership is versioned.  A cell whose home worker keeps it unloaded while
its backlog grows can be re-homed to an idle worker; records caught in
transit bounce off the old home and are re-routed here, so every record
still arrives exactly once.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..render_local import RenderSettings, accumulate_ordered
from ..scene import Scene
from ..spectra import SpectralImage
from .partition import EXTERIOR, Partition
from .records import (
    GATHERER,
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
from .worker import DdmTuning


class OwnershipRegistry:
    """Versioned map of cell id to home worker."""

    def __init__(self, home: dict[int, int]):
        self.version = 1
        self._home = dict(home)

    def home(self, cid: int) -> int:
        try:
            return self._home[cid]
        except KeyError:
            raise ProtocolError(f"unknown destination cell {cid}") from None

    def route(self, dest: int) -> int:
        """Worker id owning ``dest``; Exterior routes to the gatherer."""
        if dest == EXTERIOR:
            return GATHERER
        return self.home(dest)

    def reassign(self, cid: int, wid: int) -> int:
        self.home(cid)  # existence check
        self._home[cid] = wid
        self.version += 1
        return self.version


def assign_round_robin(part: Partition, workers: int) -> dict[int, int]:
    """Initial distribution: biggest cells first, dealt round-robin."""
    order = sorted(range(len(part)), key=lambda c: (-part.cells[c].footprint_bytes, c))
    return {cid: i % workers for i, cid in enumerate(order)}


class Coordinator:
    def __init__(
        self,
        scene: Scene,
        part: Partition,
        settings: RenderSettings,
        workers: int,
        budget: int,
        tuning: DdmTuning,
        ordered: bool = True,
        strict: bool = True,
    ) -> None:
        self.scene = scene
        self.part = part
        self.settings = settings
        self.workers = workers
        self.budget = budget
        self.tuning = tuning
        self.ordered = ordered
        self.strict = strict
        self.registry = OwnershipRegistry(assign_round_robin(part, workers))
        self.ledger = LedgerCounters()
        self.image = SpectralImage(scene.camera.width, scene.camera.height, scene.grid)
        self._gather: dict[int, list[tuple[int, np.ndarray]]] = {}
        self._seen: dict[int, set[int]] = {}
        self._view: dict[int, dict[int, tuple[int, bool]]] = {}
        self._migrated: set[int] = set()
        self.done = False
        self.acks = 0
        self._seeded = False

    # -- startup ----------------------------------------------------------

    def start(self) -> list[tuple[int, object]]:
        """Initial ownership broadcast plus every primary ray, routed."""
        out: list[tuple[int, object]] = []
        by_worker: dict[int, list[int]] = {w: [] for w in range(self.workers)}
        for cid in range(len(self.part)):
            by_worker[self.registry.home(cid)].append(cid)
        for wid, cells in by_worker.items():
            out.append((wid, OwnershipUpdate(self.registry.version, add=tuple(cells))))
        cam = self.scene.camera
        directions = cam.all_pixel_directions()
        ones = np.ones(self.scene.grid.bin_count)
        for py in range(cam.height):
            for px in range(cam.width):
                d = directions[py, px]
                self.ledger.created += 1
                cid = self.part.seed(cam.position, d)
                if cid is None:
                    self.ledger.completed += 1
                    continue
                rec = RayRecord(
                    pixel=py * cam.width + px,
                    path_id=0,
                    depth=0,
                    kind=0,
                    dest=cid,
                    origin=cam.position,
                    direction=d,
                    throughput=ones,
                    t_min=0.0,
                    window_lo=0.0,
                    entry=cam.position,
                )
                out.append((self.registry.home(cid), rec))
        self._seeded = True
        out.extend(self._check_done())
        return out

    # -- message handling --------------------------------------------------

    def handle(self, src: int, msg) -> list[tuple[int, object]]:
        if isinstance(msg, (RayRecord, ShadowProbe)):
            if self.strict and isinstance(msg, RayRecord) and msg.continuation:
                problem = check_crossing(msg, self.part)
                if problem:
                    raise ProtocolError(problem)
            return [(self.registry.route(msg.dest), msg)]
        if isinstance(msg, ShadowAnswer):
            return [(msg.asker, msg)]
        if isinstance(msg, PixelContrib):
            self._collect(msg)
            return []
        if isinstance(msg, Status):
            self._apply_status(src, msg)
            out = self._maybe_migrate()
            out.extend(self._check_done())
            return out
        if isinstance(msg, Terminated):
            self.acks += 1
            return []
        raise ProtocolError(f"coordinator got unroutable {type(msg).__name__}")

    def _collect(self, msg: PixelContrib) -> None:
        seen = self._seen.setdefault(msg.pixel, set())
        if msg.path_id in seen:
            raise ProtocolError(
                f"duplicate contribution for pixel {msg.pixel} path {msg.path_id}"
            )
        seen.add(msg.path_id)
        if self.ordered:
            self._gather.setdefault(msg.pixel, []).append((msg.path_id, msg.value))
        else:
            py, px = divmod(msg.pixel, self.image.width)
            self.image.data[py, px] += msg.value

    def _apply_status(self, src: int, status: Status) -> None:
        led = self.ledger
        led.created += status.created
        led.completed += status.completed
        led.crossings += status.crossings
        led.probe_hops += status.probe_hops
        led.loads += status.loads
        led.unloads += status.unloads
        if led.completed > led.created:
            raise ProtocolError("ledger went negative; a status arrived out of order")
        self._view[src] = {cid: (pending, loaded) for cid, pending, loaded in status.cells}

    # -- load balancing ----------------------------------------------------

    def _maybe_migrate(self) -> list[tuple[int, object]]:
        """Re-home an unloaded, backlogged cell to an idle worker."""
        if not self.tuning.migration or self.workers < 2:
            return []
        out: list[tuple[int, object]] = []
        for wid, cells in self._view.items():
            for cid, (pending, loaded) in cells.items():
                if (
                    loaded
                    or pending <= self.tuning.u_high
                    or cid in self._migrated
                    or self.registry.home(cid) != wid
                ):
                    continue
                target = self._idle_worker_with_room(wid, cid)
                if target is None:
                    continue
                version = self.registry.reassign(cid, target)
                self._migrated.add(cid)
                self.ledger.migrations += 1
                out.append((wid, OwnershipUpdate(version, remove=(cid,))))
                out.append((target, OwnershipUpdate(version, add=(cid,))))
        return out

    def _idle_worker_with_room(self, except_wid: int, cid: int) -> Optional[int]:
        # An idle worker's loaded cells all have pending 0, so it can evict
        # them on demand; its whole budget counts as available.
        need = self.part.cells[cid].footprint_bytes
        if need > self.budget:
            return None
        for wid in range(self.workers):
            if wid == except_wid:
                continue
            cells = self._view.get(wid)
            if cells is not None and all(p == 0 for p, _ in cells.values()):
                return wid
        return None

    # -- termination and assembly -----------------------------------------

    def _check_done(self) -> list[tuple[int, object]]:
        if self.done or not self._seeded or self.ledger.in_flight != 0:
            return []
        self.done = True
        return [(wid, Terminate()) for wid in range(self.workers)]

    def finish(self) -> SpectralImage:
        """Assemble the image; only valid after the ledger closed."""
        if not self.done:
            raise ProtocolError(
                f"engine stalled with {self.ledger.in_flight} rays in flight"
            )
        if self.ordered:
            bins = self.scene.grid.bin_count
            width = self.image.width
            for pixel, contribs in self._gather.items():
                py, px = divmod(pixel, width)
                self.image.data[py, px] = accumulate_ordered(contribs, bins)
        return self.image
