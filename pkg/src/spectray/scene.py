"""Scene representation: meshes, lights, camera, and intersection queries.

The scene is immutable after load.  All triangles are merged into one
:class:`~spectray.geometry.TriangleSoup` with stable global ids; per-mesh
structure survives only for reporting.  ``intersect`` and ``occluded`` are
pure functions of the scene and are safe under any number of concurrent
callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .geometry import Aabb, Bvh, TriangleSoup
from .optics import Lambertian, Material
from .spectra import DEFAULT_GRID, Spectrum, WavelengthGrid

# Parametric shadow offset as a fraction of the scene diagonal.
SHADOW_EPSILON_SCALE = 1e-4


@dataclass
class Mesh:
    """One named triangle list bound to a material."""

    vertices: np.ndarray
    triangles: np.ndarray
    material: str
    name: str = ""

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(self.triangles) and (
            self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)
        ):
            raise ValueError(f"mesh {self.name!r}: triangle index out of range")


@dataclass(frozen=True)
class PointLight:
    """Isotropic point source; emission is radiant intensity (W sr^-1 nm^-1)."""

    position: np.ndarray
    emission: Spectrum

    def __post_init__(self) -> None:
        p = np.array(self.position, dtype=np.float64, copy=True)
        if p.shape != (3,):
            raise ValueError("light position must be a 3-vector")
        p.setflags(write=False)
        object.__setattr__(self, "position", p)
        if np.any(self.emission.samples < 0.0):
            raise ValueError("light emission must be non-negative")


@dataclass(frozen=True)
class DirectionalLight:
    """Parallel source; direction is the direction of travel of the light;
    emission is irradiance on a facing surface (W m^-2 nm^-1)."""

    direction: np.ndarray
    emission: Spectrum

    def __post_init__(self) -> None:
        d = np.asarray(self.direction, dtype=np.float64)
        norm = np.linalg.norm(d)
        if d.shape != (3,) or norm == 0.0:
            raise ValueError("light direction must be a nonzero 3-vector")
        d = d / norm
        d.setflags(write=False)
        object.__setattr__(self, "direction", d)
        if np.any(self.emission.samples < 0.0):
            raise ValueError("light emission must be non-negative")


Light = Union[PointLight, DirectionalLight]


@dataclass
class Camera:
    """Pinhole camera; fov is the full horizontal angle in radians.

    The camera is the single owner of the image dimensions.
    """

    position: np.ndarray
    forward: np.ndarray
    right: np.ndarray
    up: np.ndarray
    width: int
    height: int
    fov: float

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dims must be >= 1, got {self.width}x{self.height}")
        if not 0.0 < self.fov < math.pi:
            raise ValueError(f"fov must lie in (0, pi), got {self.fov}")
        for name in ("position", "forward", "right", "up"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))

    @classmethod
    def look_at(
        cls,
        position,
        target,
        up_hint=(0.0, 1.0, 0.0),
        width: int = 128,
        height: int = 128,
        fov: float = math.radians(60.0),
    ) -> "Camera":
        position = np.asarray(position, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - position
        norm = np.linalg.norm(forward)
        if norm == 0.0:
            raise ValueError("camera target coincides with position")
        forward = forward / norm
        right = np.cross(forward, np.asarray(up_hint, dtype=np.float64))
        rnorm = np.linalg.norm(right)
        if rnorm < 1e-12:
            raise ValueError("camera up direction is parallel to the view direction")
        right = right / rnorm
        up = np.cross(right, forward)
        return cls(position, forward, right, up, width, height, fov)

    def pixel_direction(self, px: int, py: int) -> np.ndarray:
        tan_half = math.tan(self.fov * 0.5)
        u = ((px + 0.5) / self.width * 2.0 - 1.0) * tan_half
        v = (1.0 - (py + 0.5) / self.height * 2.0) * tan_half * (self.height / self.width)
        d = self.forward + u * self.right + v * self.up
        # spelled-out norm so the scalar and vectorized paths share every
        # float op (np.linalg.norm may route through fused BLAS kernels)
        n = math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
        return d / n

    def all_pixel_directions(self) -> np.ndarray:
        """(H, W, 3) unit directions; same floats as pixel_direction per pixel."""
        tan_half = math.tan(self.fov * 0.5)
        px = np.arange(self.width)
        py = np.arange(self.height)
        u = ((px + 0.5) / self.width * 2.0 - 1.0) * tan_half
        v = (1.0 - (py + 0.5) / self.height * 2.0) * tan_half * (self.height / self.width)
        d = (
            self.forward[None, None, :]
            + u[None, :, None] * self.right[None, None, :]
            + v[:, None, None] * self.up[None, None, :]
        )
        n = np.sqrt(d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1] + d[..., 2] * d[..., 2])
        return d / n[..., None]


@dataclass
class Ray:
    """A traced path segment.

    ``throughput`` is the accumulated multiplicative spectral attenuation
    (dimensionless, starts at 1).  ``path_id`` uniquely identifies the node of
    the per-pixel specular branching tree this ray realizes; ``kind`` records
    how it was spawned (0 primary, 1 reflected, 2 refracted).
    """

    origin: np.ndarray
    direction: np.ndarray
    throughput: np.ndarray
    pixel: int
    depth: int
    t_min: float
    t_max: float
    path_id: int
    kind: int = 0


@dataclass(frozen=True)
class Hit:
    t: float
    position: np.ndarray
    normal: np.ndarray
    material_id: int
    triangle_id: int


class SceneError(ValueError):
    """Scene file problems; carries the full list of findings."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


class Scene:
    """Validated immutable scene: geometry + materials + lights + camera."""

    def __init__(
        self,
        meshes: list[Mesh],
        materials: dict[str, Material],
        lights: list[Light],
        camera: Camera,
        grid: WavelengthGrid = DEFAULT_GRID,
        settings: Optional["object"] = None,
        warnings: Optional[list[str]] = None,
        illuminant: str = "E",
    ) -> None:
        self.meshes = list(meshes)
        self.materials = dict(materials)
        self.lights = list(lights)
        self.camera = camera
        self.grid = grid
        self.settings = settings
        self.warnings = list(warnings or [])
        self.illuminant = illuminant

        names = sorted(self.materials)
        self.material_names = names
        self.material_list = [self.materials[n] for n in names]
        mat_index = {n: i for i, n in enumerate(names)}

        verts: list[np.ndarray] = []
        tris: list[np.ndarray] = []
        mats: list[np.ndarray] = []
        offset = 0
        for mesh in self.meshes:
            if mesh.material not in mat_index:
                raise SceneError([f"mesh {mesh.name!r} references unknown material {mesh.material!r}"])
            verts.append(mesh.vertices)
            tris.append(mesh.triangles + offset)
            mats.append(np.full(len(mesh.triangles), mat_index[mesh.material], dtype=np.int32))
            offset += len(mesh.vertices)
        if verts:
            all_verts = np.concatenate(verts)
            all_tris = np.concatenate(tris) if tris else np.zeros((0, 3), dtype=np.int64)
            all_mats = np.concatenate(mats) if mats else np.zeros(0, dtype=np.int32)
        else:
            all_verts = np.zeros((0, 3))
            all_tris = np.zeros((0, 3), dtype=np.int64)
            all_mats = np.zeros(0, dtype=np.int32)
        self.soup, dropped = TriangleSoup.build(all_verts, all_tris, all_mats)
        n_dropped = int(dropped.sum())
        if n_dropped:
            self.warnings.append(f"dropped {n_dropped} degenerate triangle(s)")
        self.bvh = Bvh(self.soup)
        self.bounds = self.soup.bounds() if len(self.soup) else Aabb(np.zeros(3), np.ones(3) * 1e-9)
        diag = self.bounds.diagonal
        self.shadow_epsilon = SHADOW_EPSILON_SCALE * (diag if diag > 0.0 else 1.0)
        # Per-material Lambertian BRDF arrays, shared by every shading call so
        # the division happens once and identically everywhere.
        self.brdf_cache = [
            m.reflectance.samples / np.pi if isinstance(m, Lambertian) else None
            for m in self.material_list
        ]

    @property
    def triangle_count(self) -> int:
        return len(self.soup)

    def material_of(self, material_id: int) -> Material:
        return self.material_list[material_id]


def intersect(scene_or_index, ray: Ray) -> Optional[Hit]:
    """Nearest hit of the ray within its parametric window, or None."""
    scene = scene_or_index
    got = scene.bvh.intersect(ray.origin, ray.direction, ray.t_min, ray.t_max)
    if got is None:
        return None
    t, tri = got
    row = int(np.searchsorted(scene.soup.ids, tri))
    return Hit(
        t=t,
        position=ray.origin + t * ray.direction,
        normal=scene.soup.normals[row],
        material_id=int(scene.soup.material_ids[row]),
        triangle_id=tri,
    )


def light_geometry(light: Light, point: np.ndarray) -> tuple[np.ndarray, float, float]:
    """(unit direction toward the light, parametric light distance, falloff).

    Point lights: falloff 1/d^2 and finite distance; directional lights:
    falloff 1 and infinite distance.
    """
    if isinstance(light, PointLight):
        delta = light.position - point
        d = float(np.linalg.norm(delta))
        if d == 0.0:
            return np.array([0.0, 0.0, 1.0]), 0.0, 0.0
        return delta / d, d, 1.0 / (d * d)
    return -light.direction, np.inf, 1.0


def occluded(scene: Scene, point: np.ndarray, to_light: Light) -> bool:
    """True iff geometry blocks the open segment between the epsilon-offset
    point and the light (or the epsilon-offset ray, for directional)."""
    ws, t_light, _ = light_geometry(to_light, point)
    if t_light == 0.0:
        return False
    return scene.bvh.occluded(point, ws, scene.shadow_epsilon, t_light)


def generate_primary_ray(cam: Camera, px: int, py: int, grid: WavelengthGrid = DEFAULT_GRID) -> Ray:
    if not (0 <= px < cam.width and 0 <= py < cam.height):
        raise ValueError(f"pixel ({px},{py}) outside {cam.width}x{cam.height}")
    return Ray(
        origin=cam.position,
        direction=cam.pixel_direction(px, py),
        throughput=np.ones(grid.bin_count),
        pixel=py * cam.width + px,
        depth=0,
        t_min=0.0,
        t_max=np.inf,
        path_id=0,
        kind=0,
    )
