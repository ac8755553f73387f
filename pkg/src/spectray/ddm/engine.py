"""Entry point for domain-decomposed rendering.

``run_distributed`` partitions the scene, spins up workers and a
coordinator, and runs them to quiescence.  Two transports share all of the
protocol logic: "memory" drives worker objects from a simulated message
fabric in this process (deterministic, optionally with seeded delivery
delays, ideal for tests), "socket" forks real worker processes connected
over local sockets (see transport.py).

The memory fabric models what matters about a real deployment: per-link
FIFO order is preserved, but nothing else is.  With a delay seed, links
reorder against each other, workers step in shuffled order, and workers
randomly stall for whole ticks (a slow machine), which is how the stress
tests shake out termination, exactly-once, and migration bugs.
"""

from __future__ import annotations

import random
from collections import deque
from typing import Optional

from ..render_local import RenderSettings
from ..scene import Scene
from ..spectra import SpectralImage
from .coordinator import Coordinator
from .partition import Partition
from .records import GATHERER
from .worker import DdmTuning, Worker


class _Hub:
    """Simulated message fabric: per-link FIFO queues with release ticks."""

    def __init__(self, delay_seed: Optional[int] = None, max_delay: int = 5):
        self.rng = random.Random(delay_seed) if delay_seed is not None else None
        self.max_delay = max_delay
        self.clock = 0
        self._links: dict[tuple[int, int], deque] = {}
        self._release: dict[tuple[int, int], int] = {}

    def post(self, src: int, dst: int, msg) -> None:
        link = (src, dst)
        delay = self.rng.randint(0, self.max_delay) if self.rng else 0
        release = max(self.clock + delay, self._release.get(link, 0))
        self._release[link] = release
        self._links.setdefault(link, deque()).append((release, msg))

    def take_ready(self) -> list[tuple[int, int, object]]:
        """Deliverable messages this tick, FIFO within each link."""
        keys = sorted(k for k, q in self._links.items() if q)
        if self.rng:
            self.rng.shuffle(keys)
        ready = []
        for key in keys:
            q = self._links[key]
            while q and q[0][0] <= self.clock:
                ready.append((key[0], key[1], q.popleft()[1]))
        return ready

    @property
    def idle(self) -> bool:
        return all(not q for q in self._links.values())

    def advance(self) -> None:
        """Jump to the earliest pending release (the fabric is stalled)."""
        pending = [q[0][0] for q in self._links.values() if q]
        if pending:
            self.clock = max(self.clock, min(pending))


def _resolve_settings(scene: Scene, settings: Optional[RenderSettings]) -> RenderSettings:
    if settings is not None:
        return settings
    if isinstance(scene.settings, RenderSettings):
        return scene.settings
    return RenderSettings()


def run_distributed(
    scene: Scene,
    splits: tuple[int, int, int] = (1, 1, 1),
    workers: int = 1,
    budget_per_worker: Optional[int] = None,
    settings: Optional[RenderSettings] = None,
    *,
    tuning: Optional[DdmTuning] = None,
    ordered: bool = True,
    transport: str = "memory",
    delay_seed: Optional[int] = None,
    stats: Optional[dict] = None,
) -> SpectralImage:
    """Render ``scene`` with a grid decomposition across ``workers``.

    With ``ordered=True`` (the default) the output is bit-identical to
    ``render_local.render`` for any splits, worker count, budget, or delay
    seed.  ``ordered=False`` accumulates contributions in arrival order,
    which is faster to gather but only float-close, not bit-equal.

    ``budget_per_worker`` caps the bytes of loaded cell data per worker
    (geometry plus acceleration structure); None means no cell ever has to
    be evicted.  A budget smaller than the largest single cell cannot make
    progress and raises ValueError up front.

    ``stats``, when given a dict, receives the closed ledger counters and
    partition totals after the run.
    """
    if workers < 1:
        raise ValueError("need at least one worker")
    if transport not in ("memory", "socket"):
        raise ValueError(f"unknown transport {transport!r}")
    settings = _resolve_settings(scene, settings)
    tuning = tuning if tuning is not None else DdmTuning()
    part = Partition(scene.soup, scene.bounds, tuple(int(s) for s in splits))
    footprints = [cell.footprint_bytes for cell in part.cells]
    budget = budget_per_worker if budget_per_worker is not None else sum(footprints)
    biggest = max(range(len(part)), key=footprints.__getitem__)
    if footprints[biggest] > budget:
        raise ValueError(
            f"budget {budget} bytes cannot hold sub-domain {biggest} "
            f"({footprints[biggest]} bytes); no worker could ever load it"
        )
    eps = settings.resolve_epsilon(scene)
    coord = Coordinator(
        scene, part, settings, workers, budget, tuning, ordered=ordered
    )
    if transport == "socket":
        from .transport import run_socket

        image = run_socket(coord, scene, part, settings, eps, budget, tuning)
    else:
        crew = [
            Worker(w, scene, part, settings, eps, budget, tuning)
            for w in range(workers)
        ]
        image = _run_memory(coord, crew, delay_seed)
    if stats is not None:
        led = coord.ledger
        stats.update(
            created=led.created,
            completed=led.completed,
            crossings=led.crossings,
            probe_hops=led.probe_hops,
            loads=led.loads,
            unloads=led.unloads,
            migrations=led.migrations,
            subdomains=len(part),
            triangle_references=part.total_references,
        )
    return image


# Seeded fault model: workers fall into occasional multi-tick stalls, long
# enough for real backlog to pile up behind them.
_STALL_CHANCE = 0.02
_STALL_TICKS = (10, 60)


def _run_memory(coord: Coordinator, crew: list[Worker], delay_seed: Optional[int]) -> SpectralImage:
    hub = _Hub(delay_seed)
    stalled_until = [0] * len(crew)
    for dst, msg in coord.start():
        hub.post(GATHERER, dst, msg)
    while True:
        delivered = False
        touched = set()
        for src, dst, msg in hub.take_ready():
            delivered = True
            if dst == GATHERER:
                for fwd_dst, fwd in coord.handle(src, msg):
                    hub.post(GATHERER, fwd_dst, fwd)
            else:
                crew[dst].handle(msg)
                touched.add(dst)
        runnable = [w for w in crew if w.runnable]
        if hub.rng and len(runnable) > 1:
            hub.rng.shuffle(runnable)
        stepped = False
        for w in runnable:
            if hub.rng:
                if stalled_until[w.wid] > hub.clock:
                    continue
                if hub.rng.random() < _STALL_CHANCE:
                    stalled_until[w.wid] = hub.clock + hub.rng.randint(*_STALL_TICKS)
                    continue
            w.step()
            touched.add(w.wid)
            stepped = True
        for wid in sorted(touched):
            for msg in crew[wid].take_outbox():
                hub.post(wid, GATHERER, msg)
        hub.clock += 1
        if delivered or stepped:
            continue
        if not hub.idle:
            hub.advance()
        elif not runnable:
            break
    return coord.finish()
