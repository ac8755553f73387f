"""Scene partitioning for the distributed engine.

The scene bounding box (slightly padded, so flat scenes still have volume)
is sliced into a regular grid of axis-aligned cells.  Each cell carries the
subset of triangles whose bounds overlap its closed box; a triangle that
straddles a split plane is duplicated into every cell it touches, which is
what makes cell-local intersection exact.

Rays are marched cell to cell with half-open parametric windows
``(t_enter, t_exit]``.  Consecutive windows share their boundary value
bitwise (both sides evaluate ``(plane - origin) / direction`` with the same
floats), so the windows tile the ray with no gap and no overlap.  A hit
found inside a cell's window is therefore exactly the hit the monolithic
tracer would have found.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..geometry import Aabb, Bvh, TriangleSoup

EXTERIOR = -1

# face order: 0 -x, 1 +x, 2 -y, 3 +y, 4 -z, 5 +z
FACE_AXIS = (0, 0, 1, 1, 2, 2)
FACE_SIDE = (-1, +1, -1, +1, -1, +1)

_PAD_FRACTION = 1e-6


@dataclass
class SubDomain:
    """One grid cell: its box, its triangle subset, and face adjacency.

    ``neighbors[face]`` is the adjacent cell id or EXTERIOR.  The subset
    keeps global triangle ids, so hits reported from here are directly
    comparable with full-scene hits.
    """

    id: int
    box: Aabb
    soup: TriangleSoup
    neighbors: np.ndarray

    @cached_property
    def footprint_bytes(self) -> int:
        """Estimated resident size once loaded: soup + BVH arrays.

        The BVH duplicates the soup into per-leaf views and adds node
        arrays; the estimate errs high rather than low.
        """
        n = len(self.soup)
        leaves = max(1, -(-n // 64))
        nodes = 2 * leaves - 1
        return 2 * self.soup.nbytes() + nodes * 80 + 8 * n

    def build_accel(self) -> Bvh:
        return Bvh(self.soup)


class Partition:
    """Regular grid decomposition with ray-marching support."""

    def __init__(self, soup: TriangleSoup, bounds: Aabb, splits: tuple[int, int, int]):
        nx, ny, nz = (int(s) for s in splits)
        if min(nx, ny, nz) < 1:
            raise ValueError(f"splits must be >= 1 per axis, got {splits}")
        self.splits = (nx, ny, nz)
        pad = max(1e-9, _PAD_FRACTION * bounds.diagonal)
        self.box = Aabb(bounds.lo - pad, bounds.hi + pad)
        self.planes = [
            np.linspace(self.box.lo[a], self.box.hi[a], self.splits[a] + 1)
            for a in range(3)
        ]
        tri_lo, tri_hi = soup.bounds_per_triangle()
        self.cells: list[SubDomain] = []
        for iz in range(nz):
            for iy in range(ny):
                for ix in range(nx):
                    cid = self.cell_id(ix, iy, iz)
                    lo = np.array(
                        [self.planes[0][ix], self.planes[1][iy], self.planes[2][iz]]
                    )
                    hi = np.array(
                        [self.planes[0][ix + 1], self.planes[1][iy + 1], self.planes[2][iz + 1]]
                    )
                    if len(soup):
                        inside = np.flatnonzero(
                            np.all(tri_lo <= hi, axis=1) & np.all(tri_hi >= lo, axis=1)
                        )
                    else:
                        inside = np.empty(0, dtype=np.int64)
                    neighbors = np.array(
                        [
                            self.cell_id(ix - 1, iy, iz) if ix > 0 else EXTERIOR,
                            self.cell_id(ix + 1, iy, iz) if ix < nx - 1 else EXTERIOR,
                            self.cell_id(ix, iy - 1, iz) if iy > 0 else EXTERIOR,
                            self.cell_id(ix, iy + 1, iz) if iy < ny - 1 else EXTERIOR,
                            self.cell_id(ix, iy, iz - 1) if iz > 0 else EXTERIOR,
                            self.cell_id(ix, iy, iz + 1) if iz < nz - 1 else EXTERIOR,
                        ],
                        dtype=np.int64,
                    )
                    self.cells.append(
                        SubDomain(cid, Aabb(lo, hi), soup.subset(inside), neighbors)
                    )

    def cell_id(self, ix: int, iy: int, iz: int) -> int:
        nx, ny, _ = self.splits
        return ix + nx * (iy + ny * iz)

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def total_references(self) -> int:
        """Triangle references summed over cells (>= scene count; the excess
        is the duplication cost)."""
        return sum(len(cell.soup) for cell in self.cells)

    def neighbor(self, cid: int, face: int) -> int:
        return int(self.cells[cid].neighbors[face])

    def _axis_cell(self, axis: int, x: float, d: float) -> int:
        planes = self.planes[axis]
        n = self.splits[axis]
        i = int(np.searchsorted(planes, x, side="right")) - 1
        if i < 0:
            return 0
        if i > n - 1:
            return n - 1
        # exactly on an internal plane: the moving direction picks the cell
        if d < 0.0 and i > 0 and x == planes[i]:
            i -= 1
        return i

    def cell_of_point(self, p: np.ndarray, d: np.ndarray) -> int:
        return self.cell_id(
            self._axis_cell(0, float(p[0]), float(d[0])),
            self._axis_cell(1, float(p[1]), float(d[1])),
            self._axis_cell(2, float(p[2]), float(d[2])),
        )

    def march(self, cid: int, origin: np.ndarray, direction: np.ndarray) -> tuple[float, float, int]:
        """(t_enter, t_exit, exit face) of the ray against cell ``cid``.

        Same arithmetic as Aabb.slab_window, plus which face realizes the
        exit (x before y before z on exact ties).  enter > exit means the
        ray misses the cell, face -1.
        """
        box = self.cells[cid].box
        t_enter, t_exit = -np.inf, np.inf
        face = -1
        for a in range(3):
            d = direction[a]
            if d == 0.0:
                if origin[a] < box.lo[a] or origin[a] > box.hi[a]:
                    return np.inf, -np.inf, -1
                continue
            inv = 1.0 / d
            t1 = (box.lo[a] - origin[a]) * inv
            t2 = (box.hi[a] - origin[a]) * inv
            exit_face = 2 * a + 1 if d > 0.0 else 2 * a
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > t_enter:
                t_enter = t1
            if t2 < t_exit:
                t_exit = t2
                face = exit_face
        return t_enter, t_exit, face

    def seed(self, origin: np.ndarray, direction: np.ndarray) -> int | None:
        """Cell where tracing of this ray begins, or None if the ray never
        reaches the grid.

        For an origin inside the grid this is the containing cell (the
        direction breaks exact-on-plane ties).  For an outside origin the
        candidate cell from the entry point is walked backward along any
        axis whose slab starts past the grid entry, so float error in the
        entry point cannot skip a boundary cell.
        """
        enter, exit_ = self.box.slab_window(origin, direction)
        if enter > exit_ or exit_ <= 0.0:
            return None
        if self.box.contains(origin):
            return self.cell_of_point(origin, direction)
        p = np.clip(origin + max(enter, 0.0) * direction, self.box.lo, self.box.hi)
        cid = self.cell_of_point(p, direction)
        for _ in range(3):
            c_enter, c_exit, _ = self.march(cid, origin, direction)
            if not c_enter > enter:
                break
            moved = False
            box = self.cells[cid].box
            for a in range(3):
                d = direction[a]
                if d == 0.0:
                    continue
                inv = 1.0 / d
                near = box.lo[a] if d > 0.0 else box.hi[a]
                if (near - origin[a]) * inv == c_enter:
                    back_face = 2 * a if d > 0.0 else 2 * a + 1
                    prev = self.neighbor(cid, back_face)
                    if prev != EXTERIOR:
                        cid = prev
                        moved = True
                    break
            if not moved:
                break
        return cid


def partition(scene, splits: tuple[int, int, int]) -> Partition:
    """Decompose a scene's geometry into a grid of sub-domains."""
    return Partition(scene.soup, scene.bounds, splits)
