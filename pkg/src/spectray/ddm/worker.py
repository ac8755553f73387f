"""Worker state machine for the distributed engine.

A worker owns a set of assigned cells, keeps at most ``budget`` bytes of
them loaded (triangle subset + BVH), and drains per-cell record queues.
Processing one record reproduces exactly what the monolithic tracer does
inside that cell's parametric window: same intersection floats, same
shading terms, same spawn rules.  Work that leaves the cell turns into
messages: boundary crossings, shadow probes, probe answers, and pixel
contributions, all sent to the coordinator for routing.

Outbox flush order is load-bearing: contributions first, then the Status
carrying counter deltas, then new records.  Over FIFO links this keeps the
coordinator's ledger conservative (a node is never reported completed
before its creation is known, and never before its contribution arrived),
which makes ``in_flight == 0`` a safe termination signal.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..geometry import Bvh
from ..render_local import LightTerm, RenderSettings, light_terms, specular_children, visible_sum
from ..scene import Hit, Ray, Scene
from .partition import EXTERIOR, Partition
from .records import (
    OwnershipUpdate,
    PixelContrib,
    ProtocolError,
    RayRecord,
    ShadowAnswer,
    ShadowProbe,
    Status,
    Terminate,
    Terminated,
)


@dataclass(frozen=True)
class DdmTuning:
    """Scheduling knobs; the defaults match the documented protocol."""

    u_low: int = 32            # unload a cell once its pending drops below this
    u_high: int = 256          # ... if some unloaded cell's backlog exceeds this
    max_crossings: int = 4096  # per-record hop guard against marching bugs
    batch: int = 256           # records processed per scheduler step
    migration: bool = True     # allow the coordinator to re-home backlogged cells

    def __post_init__(self) -> None:
        if self.u_low < 1 or self.u_high < self.u_low:
            raise ValueError("need 1 <= u_low <= u_high")
        if self.max_crossings < 8 or self.batch < 1:
            raise ValueError("max_crossings must be >= 8 and batch >= 1")


@dataclass
class PendingShade:
    """A shaded hit waiting for shadow-probe answers from other cells."""

    pixel: int
    path_id: int
    throughput: np.ndarray
    terms: list[LightTerm]
    vis: list[Optional[bool]]
    outstanding: int


@dataclass
class Outcome:
    """Result of advancing one record through one cell.

    Exactly one of: ``escaped`` set, ``crossing`` set, or ``hit`` set (with
    terms/vis/probes/children describing the shading work).
    """

    escaped: bool = False
    crossing: Optional[RayRecord] = None
    hit: Optional[Hit] = None
    terms: list[LightTerm] = field(default_factory=list)
    vis: list[Optional[bool]] = field(default_factory=list)
    probes: list[tuple[int, ShadowProbe]] = field(default_factory=list)
    children: list[RayRecord] = field(default_factory=list)


def shadow_prefix(
    part: Partition, accel: Bvh, cell_id: int, origin: np.ndarray, ws: np.ndarray,
    eps: float, t_light: float,
) -> tuple[Optional[bool], Optional[ShadowProbe]]:
    """Resolve the first-cell leg of a shadow segment.

    Returns (visibility, probe): visibility True/False when the segment is
    decided inside the hit's own cell (or leaves the grid), else None plus
    the probe record for the cell that owns the rest.  The probe id and
    asker are filled in by the caller.  A hit position that sits a few ulps
    past a face can seed the segment in a neighboring cell; that leg is not
    testable with the local accel, so it is routed as a probe instead.
    """
    cid = part.seed(origin, ws)
    if cid is None:
        raise ProtocolError("shadow segment starts outside the grid")
    if cid != cell_id:
        return None, ShadowProbe(
            probe_id=0, asker=0, dest=cid, origin=origin, direction=ws,
            t_min=eps, t_light=t_light, window_lo=0.0, hops=1,
        )
    enter, exit_, face = part.march(cid, origin, ws)
    if enter > exit_:
        raise ProtocolError("shadow segment misses its own cell")
    if t_light <= exit_:
        blocked = t_light > eps and accel.occluded(
            origin, ws, eps, t_light, inclusive_hi=False
        )
        return (not blocked), None
    if exit_ > eps and accel.occluded(origin, ws, eps, exit_, inclusive_hi=True):
        return False, None
    nxt = part.neighbor(cid, face)
    if nxt == EXTERIOR:
        return True, None
    probe = ShadowProbe(
        probe_id=0, asker=0, dest=nxt, origin=origin, direction=ws,
        t_min=eps, t_light=t_light, window_lo=exit_, hops=1,
    )
    return None, probe


def advance(
    scene: Scene,
    part: Partition,
    accel: Bvh,
    record: RayRecord,
    settings: RenderSettings,
    eps: float,
    max_crossings: int,
) -> Outcome:
    """Trace one record through its destination cell.

    The nearest local hit inside the cell's untested window is final (the
    window tiling guarantees no closer hit exists elsewhere); otherwise the
    ray crosses to the face neighbor or escapes.
    """
    o, d = record.origin, record.direction
    enter, exit_, face = part.march(record.dest, o, d)
    if enter > exit_:
        raise ProtocolError(
            f"record for cell {record.dest} misses the cell (pixel {record.pixel})"
        )
    t_lo = record.window_lo if record.window_lo > record.t_min else record.t_min
    got = accel.intersect(o, d, t_lo, exit_, inclusive_hi=True) if exit_ > t_lo else None
    out = Outcome()
    if got is None:
        nxt = part.neighbor(record.dest, face) if face >= 0 else EXTERIOR
        if nxt == EXTERIOR:
            out.escaped = True
            return out
        if record.crossings + 1 > max_crossings:
            raise ProtocolError(f"record crossed {record.crossings} times; marching bug")
        out.crossing = RayRecord(
            pixel=record.pixel,
            path_id=record.path_id,
            depth=record.depth,
            kind=record.kind,
            dest=nxt,
            origin=o,
            direction=d,
            throughput=record.throughput,
            t_min=record.t_min,
            window_lo=exit_,
            entry=o + exit_ * d,
            crossings=record.crossings + 1,
            continuation=True,
        )
        return out
    t, tri = got
    soup = accel.soup
    row = int(np.searchsorted(soup.ids, tri))
    hit = Hit(
        t=t,
        position=o + t * d,
        normal=soup.normals[row],
        material_id=int(soup.material_ids[row]),
        triangle_id=int(tri),
    )
    out.hit = hit
    wo = -d
    out.terms = light_terms(scene, hit, wo)
    for idx, term in enumerate(out.terms):
        visibility, probe = shadow_prefix(
            part, accel, record.dest, hit.position, term.ws, eps, term.t_light
        )
        out.vis.append(visibility)
        if visibility is None:
            out.probes.append((idx, probe))
    ray = Ray(
        origin=o, direction=d, throughput=record.throughput, pixel=record.pixel,
        depth=record.depth, t_min=record.t_min, t_max=np.inf,
        path_id=record.path_id, kind=record.kind,
    )
    for child in specular_children(scene, settings, eps, ray, hit):
        dest = part.seed(child.origin, child.direction)
        if dest is None:
            raise ProtocolError("spawned child starts outside the grid")
        out.children.append(
            RayRecord(
                pixel=child.pixel,
                path_id=child.path_id,
                depth=child.depth,
                kind=child.kind,
                dest=dest,
                origin=child.origin,
                direction=child.direction,
                throughput=child.throughput,
                t_min=child.t_min,
                window_lo=0.0,
                entry=child.origin,
            )
        )
    return out


class Worker:
    """One share-nothing computational unit; all I/O via the message hub."""

    def __init__(
        self,
        wid: int,
        scene: Scene,
        part: Partition,
        settings: RenderSettings,
        eps: float,
        budget: int,
        tuning: DdmTuning,
    ) -> None:
        self.wid = wid
        self.scene = scene
        self.part = part
        self.settings = settings
        self.eps = eps
        self.budget = budget
        self.tuning = tuning
        self.bins = scene.grid.bin_count
        self.assigned: set[int] = set()
        self.loaded: dict[int, Bvh] = {}
        self.queues: dict[int, deque] = {}
        self.shades: dict[tuple[int, int], PendingShade] = {}
        self.probe_map: dict[int, tuple[tuple[int, int], int]] = {}
        self.stopped = False
        self._probe_seq = 0
        self._delta = Status()
        self._contribs: list[PixelContrib] = []
        self._records: list = []
        self._last_cells: Optional[list] = None

    # -- queue and memory management ------------------------------------

    @property
    def runnable(self) -> bool:
        if self.stopped:
            return False
        if any(self.queues[c] for c in self.loaded):
            return True
        return any(self.queues[c] for c in self.assigned if c not in self.loaded)

    def _loaded_bytes(self) -> int:
        return sum(self.part.cells[c].footprint_bytes for c in self.loaded)

    def _load(self, cid: int) -> None:
        self.loaded[cid] = self.part.cells[cid].build_accel()
        self._delta.loads += 1
        if self._loaded_bytes() > self.budget:
            raise ProtocolError(f"cell {cid} load pushed worker {self.wid} over budget")

    def _unload(self, cid: int) -> None:
        del self.loaded[cid]
        self._delta.unloads += 1

    def _initial_load(self) -> None:
        order = sorted(
            (c for c in self.assigned if c not in self.loaded),
            key=lambda c: (-self.part.cells[c].footprint_bytes, c),
        )
        used = self._loaded_bytes()
        for cid in order:
            fp = self.part.cells[cid].footprint_bytes
            if used + fp <= self.budget:
                self._load(cid)
                used += fp

    def _maybe_swap(self) -> None:
        """Unload drained cells in favor of backlogged unloaded ones.

        The hysteresis pair (u_low, u_high) stops thrashing; the zero-pending
        case swaps unconditionally so a tight budget still makes progress.
        """
        backlog = sorted(
            (c for c in self.assigned if c not in self.loaded and self.queues[c]),
            key=lambda c: (-len(self.queues[c]), c),
        )
        if not backlog:
            return
        used = self._loaded_bytes()
        for cid in backlog:
            fp = self.part.cells[cid].footprint_bytes
            if used + fp <= self.budget:
                self._load(cid)
                used += fp
                continue
            big = len(self.queues[cid]) > self.tuning.u_high
            victims = sorted(
                self.loaded, key=lambda c: (len(self.queues[c]), c)
            )
            for victim in victims:
                pending = len(self.queues[victim])
                if pending == 0 or (pending < self.tuning.u_low and big):
                    self._unload(victim)
                    used -= self.part.cells[victim].footprint_bytes
                    if used + fp <= self.budget:
                        break
                else:
                    break
            if used + fp <= self.budget:
                self._load(cid)
                used += fp

    # -- message handling -------------------------------------------------

    def handle(self, msg) -> None:
        if self.stopped:
            if not isinstance(msg, (Terminate, OwnershipUpdate)):
                raise ProtocolError(f"worker {self.wid} got {type(msg).__name__} after stop")
            return
        if isinstance(msg, Terminate):
            self.stopped = True
            self._records.append(Terminated())
        elif isinstance(msg, OwnershipUpdate):
            for cid in msg.add:
                self.assigned.add(cid)
                self.queues.setdefault(cid, deque())
            for cid in msg.remove:
                if cid not in self.assigned:
                    continue
                self.assigned.discard(cid)
                if cid in self.loaded:
                    self._unload(cid)
                while self.queues[cid]:
                    self._records.append(self.queues[cid].popleft())
                del self.queues[cid]
            if msg.add:
                self._initial_load()
        elif isinstance(msg, (RayRecord, ShadowProbe)):
            if msg.dest in self.assigned:
                self.queues[msg.dest].append(msg)
            else:
                self._records.append(msg)  # bounce: the coordinator re-routes
        elif isinstance(msg, ShadowAnswer):
            self._resolve(msg.probe_id, msg.blocked)
        else:
            raise ProtocolError(f"worker {self.wid} got unroutable {type(msg).__name__}")

    def step(self) -> None:
        """One scheduler quantum: swap if useful, then drain some records."""
        if self.stopped:
            return
        self._maybe_swap()
        done = 0
        while done < self.tuning.batch:
            progressed = False
            for cid in sorted(self.loaded):
                q = self.queues[cid]
                if not q:
                    continue
                rec = q.popleft()
                if isinstance(rec, RayRecord):
                    self._process_ray(cid, rec)
                else:
                    self._process_probe(cid, rec)
                done += 1
                progressed = True
                if done >= self.tuning.batch:
                    break
            if not progressed:
                break

    # -- record processing ------------------------------------------------

    def _route(self, msg) -> None:
        if msg.dest in self.assigned:
            self.queues[msg.dest].append(msg)
        else:
            self._records.append(msg)

    def _process_ray(self, cid: int, rec: RayRecord) -> None:
        out = advance(
            self.scene, self.part, self.loaded[cid], rec,
            self.settings, self.eps, self.tuning.max_crossings,
        )
        if out.escaped:
            self._delta.completed += 1
            return
        if out.crossing is not None:
            self._delta.crossings += 1
            self._route(out.crossing)
            return
        self._delta.created += len(out.children)
        for child in out.children:
            self._route(child)
        n_pending = len(out.probes)
        if n_pending == 0:
            self._finish_shade(rec.pixel, rec.path_id, rec.throughput, out.terms, out.vis)
            return
        key = (rec.pixel, rec.path_id)
        self.shades[key] = PendingShade(
            rec.pixel, rec.path_id, rec.throughput, out.terms, out.vis, n_pending
        )
        for idx, probe in out.probes:
            self._probe_seq += 1
            probe.probe_id = (self.wid << 32) | self._probe_seq
            probe.asker = self.wid
            self.probe_map[probe.probe_id] = (key, idx)
            self._delta.probe_hops += 1
            self._route(probe)

    def _process_probe(self, cid: int, probe: ShadowProbe) -> None:
        enter, exit_, face = self.part.march(cid, probe.origin, probe.direction)
        if enter > exit_:
            raise ProtocolError("probe routed to a cell its segment misses")
        t_lo = probe.window_lo if probe.window_lo > probe.t_min else probe.t_min
        accel = self.loaded[cid]
        if probe.t_light <= exit_:
            blocked = probe.t_light > t_lo and accel.occluded(
                probe.origin, probe.direction, t_lo, probe.t_light, inclusive_hi=False
            )
            self._answer(probe, blocked)
            return
        if exit_ > t_lo and accel.occluded(
            probe.origin, probe.direction, t_lo, exit_, inclusive_hi=True
        ):
            self._answer(probe, True)
            return
        nxt = self.part.neighbor(cid, face)
        if nxt == EXTERIOR:
            self._answer(probe, False)
            return
        if probe.hops + 1 > self.tuning.max_crossings:
            raise ProtocolError("shadow probe exceeded the crossing guard")
        self._delta.probe_hops += 1
        self._route(
            ShadowProbe(
                probe_id=probe.probe_id, asker=probe.asker, dest=nxt,
                origin=probe.origin, direction=probe.direction,
                t_min=probe.t_min, t_light=probe.t_light,
                window_lo=exit_, hops=probe.hops + 1,
            )
        )

    def _answer(self, probe: ShadowProbe, blocked: bool) -> None:
        if probe.asker == self.wid:
            self._resolve(probe.probe_id, blocked)
        else:
            self._records.append(ShadowAnswer(probe.probe_id, probe.asker, blocked))

    def _resolve(self, probe_id: int, blocked: bool) -> None:
        key, idx = self.probe_map.pop(probe_id)
        shade = self.shades[key]
        shade.vis[idx] = not blocked
        shade.outstanding -= 1
        if shade.outstanding == 0:
            del self.shades[key]
            self._finish_shade(
                shade.pixel, shade.path_id, shade.throughput, shade.terms, shade.vis
            )

    def _finish_shade(self, pixel, path_id, throughput, terms, vis) -> None:
        radiance = visible_sum(terms, vis, self.bins)
        if radiance.any():
            self._contribs.append(PixelContrib(pixel, path_id, throughput * radiance))
        self._delta.completed += 1

    # -- outbox -----------------------------------------------------------

    def take_outbox(self) -> list:
        """Flush buffered output: contributions, then Status, then records."""
        out: list = list(self._contribs)
        self._contribs = []
        delta = self._delta
        cells = [(c, len(self.queues[c]), c in self.loaded) for c in sorted(self.assigned)]
        dirty = (
            delta.created or delta.completed or delta.crossings
            or delta.probe_hops or delta.loads or delta.unloads
        )
        if dirty or cells != self._last_cells:
            delta.cells = cells
            self._last_cells = cells
            out.append(delta)
            self._delta = Status()
        out.extend(self._records)
        self._records = []
        return out
