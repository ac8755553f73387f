"""Procedural mesh builders for scenes and test fixtures."""

from __future__ import annotations

import numpy as np


def quad(a, b, c, d) -> tuple[np.ndarray, np.ndarray]:
    """Two triangles spanning the quad a-b-c-d (counterclockwise winding)."""
    verts = np.array([a, b, c, d], dtype=np.float64)
    tris = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)
    return verts, tris


def box(lo, hi, inward: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned box; inward=True flips windings for room interiors."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    verts = np.array(
        [
            [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
            [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
        ]
    )
    faces = [
        (0, 1, 2, 3),  # z = z0
        (5, 4, 7, 6),  # z = z1
        (4, 0, 3, 7),  # x = x0
        (1, 5, 6, 2),  # x = x1
        (4, 5, 1, 0),  # y = y0
        (3, 2, 6, 7),  # y = y1
    ]
    tris = []
    for f in faces:
        a, b, c, d = f
        tris.append([a, b, c])
        tris.append([a, c, d])
    tris = np.array(tris, dtype=np.int64)
    if inward:
        tris = tris[:, [0, 2, 1]]
    return verts, tris


def icosphere(center, radius: float, subdivisions: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Subdivided icosahedron; subdivisions=1 gives 80 triangles."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [v for v in verts]
    cache: dict[tuple[int, int], int] = {}

    def midpoint(i: int, j: int) -> int:
        key = (min(i, j), max(i, j))
        if key in cache:
            return cache[key]
        m = verts[i] + verts[j]
        m /= np.linalg.norm(m)
        verts.append(m)
        cache[key] = len(verts) - 1
        return cache[key]

    for _ in range(subdivisions):
        new_faces = []
        for a, b, c in faces:
            ab = midpoint(a, b)
            bc = midpoint(b, c)
            ca = midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    v = np.array(verts) * radius + np.asarray(center, dtype=np.float64)
    return v, np.array(faces, dtype=np.int64)


def merge(*parts: tuple[np.ndarray, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    verts = []
    tris = []
    offset = 0
    for v, t in parts:
        verts.append(v)
        tris.append(t + offset)
        offset += len(v)
    return np.concatenate(verts), np.concatenate(tris)
