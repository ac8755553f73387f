"""Triangle geometry, ray intersection, and a binary BVH.

Determinism contract used across the renderer: the accelerated queries must
return exactly what the brute-force scan returns, bit for bit.  Three rules
make that hold:

* per-triangle intersection math is row-wise vectorized, so the floats for a
  given (ray, triangle) pair do not depend on which subset of triangles the
  batch contains;
* hit selection minimizes (t, triangle_id) lexicographically: a strictly
  smaller t wins, equal t goes to the lower global id;
* a BVH node is pruned only when its slab entry lies strictly beyond the
  current best t, so boundary-touching candidates are never skipped.

Parametric windows are half-open (t_lo, t_hi]; occlusion queries use the
open interval (t_lo, t_hi) since a blocker exactly at the light does not
occlude.  The same windows let the partitioned engine split a ray into
per-cell segments that tile the monolithic query exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BVH_LEAF_SIZE = 64

# Relative margin for node-window pruning, far wider than any rounding gap
# between slab windows and triangle-test parameters (see Bvh.intersect).
_WINDOW_SLACK = 1e-9
_DEGENERATE_AREA = 1e-14


@dataclass(frozen=True)
class Aabb:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        lo = np.array(self.lo, dtype=np.float64, copy=True)
        hi = np.array(self.hi, dtype=np.float64, copy=True)
        if lo.shape != (3,) or hi.shape != (3,) or np.any(lo > hi):
            raise ValueError(f"invalid box lo={lo} hi={hi}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, p: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(p >= self.lo - tol) and np.all(p <= self.hi + tol))

    def slab_window(self, origin: np.ndarray, direction: np.ndarray) -> tuple[float, float]:
        """(t_enter, t_exit) of the ray against the box; enter > exit means miss."""
        t_enter, t_exit = -np.inf, np.inf
        for a in range(3):
            d = direction[a]
            if d == 0.0:
                if origin[a] < self.lo[a] or origin[a] > self.hi[a]:
                    return np.inf, -np.inf
                continue
            inv = 1.0 / d
            t1 = (self.lo[a] - origin[a]) * inv
            t2 = (self.hi[a] - origin[a]) * inv
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > t_enter:
                t_enter = t1
            if t2 < t_exit:
                t_exit = t2
        return t_enter, t_exit


def aabb_union(a: Aabb, b: Aabb) -> Aabb:
    return Aabb(np.minimum(a.lo, b.lo), np.maximum(a.hi, b.hi))


class TriangleSoup:
    """Packed triangle arrays with stable global ids.

    Precomputed edge vectors and geometric normals; every instance derived by
    ``subset`` shares these arrays so subset math is bitwise identical to
    full-soup math.
    """

    def __init__(
        self,
        v0: np.ndarray,
        e1: np.ndarray,
        e2: np.ndarray,
        normals: np.ndarray,
        ids: np.ndarray,
        material_ids: np.ndarray,
    ) -> None:
        self.v0 = v0
        self.e1 = e1
        self.e2 = e2
        self.normals = normals
        self.ids = ids
        self.material_ids = material_ids

    @classmethod
    def build(
        cls, vertices: np.ndarray, triangles: np.ndarray, material_ids: np.ndarray
    ) -> tuple["TriangleSoup", np.ndarray]:
        """Pack (vertices, index triples) into a soup.

        Returns the soup and a mask of triangles dropped as degenerate.
        """
        vertices = np.asarray(vertices, dtype=np.float64)
        triangles = np.asarray(triangles, dtype=np.int64)
        material_ids = np.asarray(material_ids, dtype=np.int32)
        a = vertices[triangles[:, 0]]
        b = vertices[triangles[:, 1]]
        c = vertices[triangles[:, 2]]
        e1 = b - a
        e2 = c - a
        cross = np.cross(e1, e2)
        area2 = np.linalg.norm(cross, axis=1)
        degenerate = area2 < _DEGENERATE_AREA
        keep = ~degenerate
        normals = np.zeros_like(cross)
        normals[keep] = cross[keep] / area2[keep, None]
        ids = np.arange(keep.sum(), dtype=np.int64)
        soup = cls(a[keep], e1[keep], e2[keep], normals[keep], ids, material_ids[keep])
        return soup, degenerate

    def __len__(self) -> int:
        return len(self.v0)

    def subset(self, rows: np.ndarray) -> "TriangleSoup":
        return TriangleSoup(
            self.v0[rows],
            self.e1[rows],
            self.e2[rows],
            self.normals[rows],
            self.ids[rows],
            self.material_ids[rows],
        )

    def bounds_per_triangle(self) -> tuple[np.ndarray, np.ndarray]:
        b = self.v0 + self.e1
        c = self.v0 + self.e2
        lo = np.minimum(np.minimum(self.v0, b), c)
        hi = np.maximum(np.maximum(self.v0, b), c)
        return lo, hi

    def bounds(self) -> Aabb:
        if len(self) == 0:
            return Aabb(np.zeros(3), np.zeros(3))
        lo, hi = self.bounds_per_triangle()
        return Aabb(lo.min(axis=0), hi.max(axis=0))

    def nbytes(self) -> int:
        return sum(
            arr.nbytes
            for arr in (self.v0, self.e1, self.e2, self.normals, self.ids, self.material_ids)
        )


def _raw_intersect(
    soup: TriangleSoup, origin: np.ndarray, direction: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Möller-Trumbore over every triangle in the soup.

    Returns (t, valid) where valid marks hits with barycentrics inside the
    closed triangle (edges inclusive, so shared edges register on both
    neighbors and the id tie rule picks one deterministically).
    """
    pvec = np.cross(direction, soup.e2)
    det = np.einsum("ij,ij->i", soup.e1, pvec)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_det = 1.0 / det
        tvec = origin - soup.v0
        u = np.einsum("ij,ij->i", tvec, pvec) * inv_det
        qvec = np.cross(tvec, soup.e1)
        v = np.einsum("j,ij->i", direction, qvec) * inv_det
        t = np.einsum("ij,ij->i", soup.e2, qvec) * inv_det
        valid = (det != 0.0) & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & np.isfinite(t)
    return t, valid


def _select_best(
    t: np.ndarray, valid: np.ndarray, ids: np.ndarray
) -> tuple[float, int] | None:
    if not np.any(valid):
        return None
    tv = t[valid]
    iv = ids[valid]
    tmin = tv.min()
    return float(tmin), int(iv[tv == tmin].min())


def intersect_brute(
    soup: TriangleSoup,
    origin: np.ndarray,
    direction: np.ndarray,
    t_lo: float,
    t_hi: float,
    inclusive_hi: bool = True,
) -> tuple[float, int] | None:
    """Nearest hit in the window by linear scan; the BVH oracle."""
    t, valid = _raw_intersect(soup, origin, direction)
    upper = (t <= t_hi) if inclusive_hi else (t < t_hi)
    return _select_best(t, valid & (t > t_lo) & upper, soup.ids)


def occluded_brute(
    soup: TriangleSoup, origin: np.ndarray, direction: np.ndarray, t_lo: float, t_hi: float,
    inclusive_hi: bool = False,
) -> bool:
    t, valid = _raw_intersect(soup, origin, direction)
    upper = (t <= t_hi) if inclusive_hi else (t < t_hi)
    return bool(np.any(valid & (t > t_lo) & upper))


class Bvh:
    """Binary BVH, median split on the longest centroid axis.

    Nodes are stored in flat arrays; leaves reference a permutation of soup
    rows.  Build is deterministic: stable argsort with the triangle id as the
    tie key.
    """

    def __init__(self, soup: TriangleSoup, leaf_size: int = BVH_LEAF_SIZE) -> None:
        self.soup = soup
        self.leaf_size = leaf_size
        n = len(soup)
        self._node_lo: list[np.ndarray] = []
        self._node_hi: list[np.ndarray] = []
        self._node_left: list[int] = []   # child index, or -1 for leaf
        self._node_right: list[int] = []  # leaf: (start, count) packed here
        self._order = np.arange(n, dtype=np.int64)
        if n == 0:
            self._root = -1
        else:
            lo, hi = soup.bounds_per_triangle()
            centroids = (lo + hi) * 0.5
            self._tri_lo, self._tri_hi = lo, hi
            self._root = self._build(0, n, centroids)
            del self._tri_lo, self._tri_hi
        self.node_lo = np.array(self._node_lo) if self._node_lo else np.zeros((0, 3))
        self.node_hi = np.array(self._node_hi) if self._node_hi else np.zeros((0, 3))
        self.node_left = np.array(self._node_left, dtype=np.int64)
        self.node_right = np.array(self._node_right, dtype=np.int64)
        # Per-leaf soup views keep traversal math identical to brute force.
        self._leaf_soups: dict[int, TriangleSoup] = {}
        for ni in range(len(self.node_left)):
            if self.node_left[ni] == -1:
                start, count = divmod(self.node_right[ni], 1 << 32)
                rows = self._order[start : start + count]
                self._leaf_soups[ni] = soup.subset(rows)

    def _build(self, start: int, end: int, centroids: np.ndarray) -> int:
        rows = self._order[start:end]
        lo = self._tri_lo[rows].min(axis=0)
        hi = self._tri_hi[rows].max(axis=0)
        node = len(self._node_lo)
        self._node_lo.append(lo)
        self._node_hi.append(hi)
        self._node_left.append(0)
        self._node_right.append(0)
        count = end - start
        if count <= self.leaf_size:
            self._node_left[node] = -1
            self._node_right[node] = (start << 32) + count
            return node
        axis = int(np.argmax(hi - lo))
        keys = centroids[rows][:, axis]
        order = np.argsort(keys, kind="stable")
        self._order[start:end] = rows[order]
        mid = start + count // 2
        left = self._build(start, mid, centroids)
        right = self._build(mid, end, centroids)
        self._node_left[node] = left
        self._node_right[node] = right
        return node

    def nbytes(self) -> int:
        return (
            self.node_lo.nbytes
            + self.node_hi.nbytes
            + self.node_left.nbytes
            + self.node_right.nbytes
            + self._order.nbytes
        )

    def _node_window(self, ni: int, origin, direction) -> tuple[float, float]:
        t_enter, t_exit = -np.inf, np.inf
        lo, hi = self.node_lo[ni], self.node_hi[ni]
        for a in range(3):
            d = direction[a]
            if d == 0.0:
                if origin[a] < lo[a] or origin[a] > hi[a]:
                    return np.inf, -np.inf
                continue
            inv = 1.0 / d
            t1 = (lo[a] - origin[a]) * inv
            t2 = (hi[a] - origin[a]) * inv
            if t1 > t2:
                t1, t2 = t2, t1
            t_enter = max(t_enter, t1)
            t_exit = min(t_exit, t2)
        return t_enter, t_exit

    def intersect(
        self,
        origin: np.ndarray,
        direction: np.ndarray,
        t_lo: float,
        t_hi: float,
        inclusive_hi: bool = True,
    ) -> tuple[float, int] | None:
        """Nearest (t, triangle id) within the window, or None."""
        if self._root < 0:
            return None
        best_t = np.inf
        best_id = -1
        found = False
        # A triangle's reported t can stray a few ulps outside its node's
        # slab window, so pruning at the exact window edges can cull the node
        # holding the true hit when t_lo or t_hi sits on a node boundary
        # (routine for partitioned tracing, where windows start on cell
        # planes).  The edges get a relative slack; the leaf test stays
        # strict, so admitting extra nodes never changes the result.
        lo_edge = t_lo - _WINDOW_SLACK * (1.0 + abs(t_lo))
        stack = [self._root]
        while stack:
            ni = stack.pop()
            enter, exit_ = self._node_window(ni, origin, direction)
            limit = min(t_hi, best_t)
            if enter > exit_ or exit_ < lo_edge or enter > limit + _WINDOW_SLACK * (1.0 + abs(limit)):
                continue
            left = self.node_left[ni]
            if left == -1:
                leaf = self._leaf_soups[ni]
                t, valid = _raw_intersect(leaf, origin, direction)
                upper = (t <= t_hi) if inclusive_hi else (t < t_hi)
                got = _select_best(t, valid & (t > t_lo) & upper, leaf.ids)
                if got is not None:
                    t_new, id_new = got
                    if not found or t_new < best_t or (t_new == best_t and id_new < best_id):
                        best_t, best_id = t_new, id_new
                        found = True
                continue
            stack.append(int(self.node_right[ni]))
            stack.append(int(left))
        return (best_t, best_id) if found else None

    def occluded(
        self, origin: np.ndarray, direction: np.ndarray, t_lo: float, t_hi: float,
        inclusive_hi: bool = False,
    ) -> bool:
        """Any hit in the window; open upper end by default (see module doc)."""
        if self._root < 0:
            return False
        lo_edge = t_lo - _WINDOW_SLACK * (1.0 + abs(t_lo))
        hi_edge = t_hi + _WINDOW_SLACK * (1.0 + abs(t_hi))
        stack = [self._root]
        while stack:
            ni = stack.pop()
            enter, exit_ = self._node_window(ni, origin, direction)
            if enter > exit_ or exit_ < lo_edge or enter > hi_edge:
                continue
            left = self.node_left[ni]
            if left == -1:
                leaf = self._leaf_soups[ni]
                t, valid = _raw_intersect(leaf, origin, direction)
                upper = (t <= t_hi) if inclusive_hi else (t < t_hi)
                if np.any(valid & (t > t_lo) & upper):
                    return True
                continue
            stack.append(int(self.node_right[ni]))
            stack.append(int(left))
        return False
