"""Shared scene builders and oracles for the test suite."""

from __future__ import annotations

import numpy as np

from spectray import (
    Camera,
    ComplexIor,
    DirectionalLight,
    FresnelDielectric,
    Lambertian,
    Mesh,
    PointLight,
    Scene,
    Spectrum,
)
from spectray.meshgen import box, quad
from spectray.spectra import DEFAULT_GRID


def lambert(rho: float, grid=DEFAULT_GRID) -> Lambertian:
    return Lambertian(Spectrum.constant(rho, grid))


def glass(grid=DEFAULT_GRID) -> FresnelDielectric:
    return FresnelDielectric(ComplexIor.constant(1.5, 0.0, grid), ComplexIor.vacuum(grid))


def plane_scene(
    rho: float = 0.6,
    width: int = 8,
    height: int = 8,
    light: str = "directional",
    extent: float = 50.0,
) -> Scene:
    """A single large Lambertian quad at z=0 facing +z, camera on +z axis.

    With the directional light arriving along the normal, every pixel that
    hits the quad shades to exactly rho/pi.
    """
    v, t = quad(
        (-extent, -extent, 0.0),
        (extent, -extent, 0.0),
        (extent, extent, 0.0),
        (-extent, extent, 0.0),
    )
    mesh = Mesh(v, t, material="floor", name="floor")
    cam = Camera.look_at((0, 0, 5.0), (0, 0, 0.0), up_hint=(0, 1, 0), width=width, height=height)
    if light == "directional":
        lights = [DirectionalLight((0, 0, -1.0), Spectrum.constant(1.0))]
    else:
        lights = [PointLight((0, 0, 3.0), Spectrum.constant(1.0))]
    return Scene([mesh], {"floor": lambert(rho)}, lights, cam)


def room_scene(width: int = 16, height: int = 16, with_glass: bool = True) -> Scene:
    """Closed box room with a glass pane and a point light; exercises
    shadows, reflection, refraction, and multi-material shading."""
    rv, rt = box((-2.0, -1.0, -2.0), (2.0, 1.5, 2.0), inward=True)
    room = Mesh(rv, rt, material="walls", name="room")
    gv, gt = quad((-0.8, -0.99, 0.3), (0.8, -0.99, 0.3), (0.8, 0.9, 0.3), (-0.8, 0.9, 0.3))
    pane = Mesh(gv, gt, material="pane", name="pane")
    materials = {"walls": lambert(0.7), "pane": glass() if with_glass else lambert(0.2)}
    cam = Camera.look_at(
        (0.0, 0.2, 1.7), (0.0, 0.0, -1.0), up_hint=(0, 1, 0), width=width, height=height
    )
    lights = [
        PointLight((0.5, 1.2, 1.0), Spectrum.constant(2.0)),
        DirectionalLight((0.3, -1.0, -0.4), Spectrum.constant(0.4)),
    ]
    return Scene([room, pane], materials, lights, cam)


def random_soup_arrays(n: int, rng: np.random.Generator, scale: float = 4.0):
    """Vertices/triangles for n random triangles inside a cube."""
    base = rng.uniform(-scale, scale, size=(n, 3))
    e1 = rng.uniform(-1.0, 1.0, size=(n, 3))
    e2 = rng.uniform(-1.0, 1.0, size=(n, 3))
    verts = np.concatenate([base, base + e1, base + e2])
    tris = np.stack([np.arange(n), np.arange(n) + n, np.arange(n) + 2 * n], axis=1)
    return verts, tris


def random_unit(rng: np.random.Generator, size=None) -> np.ndarray:
    v = rng.standard_normal(3 if size is None else (size, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)
