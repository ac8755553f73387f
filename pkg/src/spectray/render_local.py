"""Direct-lighting inverse ray tracer with specular recursion.

The same building blocks drive both the monolithic renderer here and the
partitioned engine in :mod:`spectray.ddm`:

* :func:`light_terms` builds the per-light pre-visibility shading terms at a
  hit (BRDF x emission x clamped cosine x falloff);
* :func:`specular_children` spawns the reflected/refracted continuation rays
  with thresholds applied at spawn time;
* :func:`accumulate_ordered` folds per-path contributions into a pixel in
  ascending path-id order.

Because both engines call these functions with identical inputs (boundary
records keep the original ray origin, so hit positions are the same floats),
their outputs agree bit for bit, not just within tolerance.

Path ids name nodes of the per-pixel specular branching tree in heap order:
the primary ray is node 0, a reflection continues node n at 2n+1, a
refraction at 2n+2.  (pixel, path_id) is globally unique.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .optics import Directions, FresnelDielectric, Lambertian, eval_brdf, fresnel, reflect, refract
from .scene import Hit, Ray, Scene, intersect, light_geometry
from .spectra import SpectralImage, Spectrum

MAX_BOUNCES_LIMIT = 28  # keeps heap path ids inside 32 bits


@dataclass(frozen=True)
class RenderSettings:
    """Termination and offset controls for path tracing.

    Image dimensions live on the camera alone.  ``shadow_epsilon`` of None
    defers to the scene's diagonal-scaled default.
    """

    max_bounces: int = 4
    throughput_threshold: float = 1e-3
    shadow_epsilon: Optional[float] = None

    def __post_init__(self) -> None:
        if not 0 <= self.max_bounces <= MAX_BOUNCES_LIMIT:
            raise ValueError(f"max_bounces must be in [0, {MAX_BOUNCES_LIMIT}]")
        if not 0.0 <= self.throughput_threshold < 1.0:
            raise ValueError("throughput_threshold must be in [0, 1)")
        if self.shadow_epsilon is not None and self.shadow_epsilon <= 0.0:
            raise ValueError("shadow_epsilon must be positive")

    def resolve_epsilon(self, scene: Scene) -> float:
        return self.shadow_epsilon if self.shadow_epsilon is not None else scene.shadow_epsilon


@dataclass
class LightTerm:
    """One light's pre-visibility shading term at a hit point."""

    light_index: int
    value: np.ndarray       # F_r * L_s * cos * falloff, before throughput
    ws: np.ndarray          # unit direction toward the light
    t_light: float          # parametric distance to the light (inf directional)


def oriented(normal: np.ndarray, wo: np.ndarray) -> np.ndarray:
    return normal if float(np.dot(normal, wo)) >= 0.0 else -normal


def light_terms(scene: Scene, hit: Hit, wo: np.ndarray) -> list[LightTerm]:
    """Eq.-of-direct-lighting terms at a hit, in light-index order.

    Specular (delta) materials get no terms; their energy rides the
    continuation rays.
    """
    material = scene.material_of(hit.material_id)
    if isinstance(material, FresnelDielectric):
        return []
    n = oriented(hit.normal, wo)
    terms: list[LightTerm] = []
    for index, light in enumerate(scene.lights):
        ws, t_light, falloff = light_geometry(light, hit.position)
        cos_s = float(np.dot(n, ws))
        if cos_s <= 0.0 or falloff == 0.0:
            continue
        if isinstance(material, Lambertian):
            fr = scene.brdf_cache[hit.material_id]
        else:
            fr = eval_brdf(material, Directions(ws, wo, n)).samples
        value = fr * light.emission.samples * (cos_s * falloff)
        if not value.any():
            continue
        terms.append(LightTerm(index, value, ws, t_light))
    return terms


def specular_children(
    scene: Scene, settings: RenderSettings, eps: float, ray: Ray, hit: Hit
) -> list[Ray]:
    """Reflected/refracted continuations of a ray at a Fresnel interface.

    Spawn rules (applied here, identically in every engine): child depth must
    not exceed max_bounces and child throughput max must reach the threshold.
    """
    material = scene.material_of(hit.material_id)
    if not isinstance(material, FresnelDielectric) or ray.depth + 1 > settings.max_bounces:
        return []
    entering = float(np.dot(ray.direction, hit.normal)) < 0.0
    n = hit.normal if entering else -hit.normal
    if entering:
        ior_out, ior_in = material.exterior_ior, material.ior
    else:
        ior_out, ior_in = material.ior, material.exterior_ior
    cos_i = -float(np.dot(ray.direction, n))
    if cos_i < 0.0:  # exactly grazing; treat as tangent pass-through
        cos_i = 0.0
    r_spec, t_spec = fresnel(cos_i, ior_out, ior_in)
    children: list[Ray] = []
    thr_r = ray.throughput * r_spec.samples
    if float(thr_r.max()) >= settings.throughput_threshold:
        children.append(
            Ray(
                origin=hit.position,
                direction=reflect(ray.direction, n),
                throughput=thr_r,
                pixel=ray.pixel,
                depth=ray.depth + 1,
                t_min=eps,
                t_max=np.inf,
                path_id=2 * ray.path_id + 1,
                kind=1,
            )
        )
    wt = refract(ray.direction, n, ior_out.n_at() / ior_in.n_at())
    if wt is not None:
        thr_t = ray.throughput * t_spec.samples
        if float(thr_t.max()) >= settings.throughput_threshold:
            children.append(
                Ray(
                    origin=hit.position,
                    direction=wt,
                    throughput=thr_t,
                    pixel=ray.pixel,
                    depth=ray.depth + 1,
                    t_min=eps,
                    t_max=np.inf,
                    path_id=2 * ray.path_id + 2,
                    kind=2,
                )
            )
    return children


def visible_sum(terms: list[LightTerm], visibility: list[bool], bins: int) -> np.ndarray:
    """Ordered fold of the visible terms; the one true accumulation order."""
    out = np.zeros(bins)
    for term, vis in zip(terms, visibility):
        if vis:
            out += term.value
    return out


def shade_direct(hit: Hit, wo: np.ndarray, scene: Scene, eps: Optional[float] = None) -> Spectrum:
    """Direct radiance at a hit: sum over lights of BRDF x emission x cosine
    x falloff, occluded lights contributing zero."""
    eps = scene.shadow_epsilon if eps is None else eps
    terms = light_terms(scene, hit, wo)
    vis = [
        not scene.bvh.occluded(hit.position, t.ws, eps, t.t_light) for t in terms
    ]
    return Spectrum(visible_sum(terms, vis, scene.grid.bin_count), scene.grid)


def accumulate_ordered(contribs: list[tuple[int, np.ndarray]], bins: int) -> np.ndarray:
    """Sum contributions sorted by path id; shared by trace, render, and the
    partitioned gatherer so the float addition sequence is identical."""
    out = np.zeros(bins)
    for _, value in sorted(contribs, key=lambda item: item[0]):
        out += value
    return out


@dataclass
class PathStats:
    created: int = 0
    completed: int = 0


def run_path_tree(
    scene: Scene,
    settings: RenderSettings,
    eps: float,
    root: Ray,
    sink: Callable[[int, int, np.ndarray], None],
    stats: Optional[PathStats] = None,
    gi_estimate: Optional[Callable[[Hit, np.ndarray], np.ndarray]] = None,
) -> None:
    """Trace one primary ray's whole specular tree, monolithically.

    ``sink(pixel, path_id, contribution)`` receives throughput-weighted
    radiance per tree node.  ``gi_estimate``, when given, adds photon-map
    radiance at diffuse hits (see render_global).
    """
    stack = [root]
    if stats:
        stats.created += 1
    while stack:
        ray = stack.pop()
        hit = intersect(scene, ray)
        if hit is None:
            if stats:
                stats.completed += 1
            continue
        wo = -ray.direction
        terms = light_terms(scene, hit, wo)
        vis = [
            not scene.bvh.occluded(hit.position, t.ws, eps, t.t_light) for t in terms
        ]
        radiance = visible_sum(terms, vis, scene.grid.bin_count)
        if gi_estimate is not None:
            radiance = radiance + gi_estimate(hit, wo)
        if radiance.any():
            sink(ray.pixel, ray.path_id, ray.throughput * radiance)
        children = specular_children(scene, settings, eps, ray, hit)
        if stats:
            stats.created += len(children)
            stats.completed += 1
        stack.extend(children)


def trace(ray: Ray, scene: Scene, settings: RenderSettings) -> Spectrum:
    """Radiance gathered by one ray's specular tree (black background)."""
    eps = settings.resolve_epsilon(scene)
    contribs: list[tuple[int, np.ndarray]] = []
    run_path_tree(scene, settings, eps, ray, lambda _pix, node, v: contribs.append((node, v)))
    return Spectrum(accumulate_ordered(contribs, scene.grid.bin_count), scene.grid)


def render(
    scene: Scene,
    settings: RenderSettings,
    stats: Optional[PathStats] = None,
    gi_estimate: Optional[Callable[[Hit, np.ndarray], np.ndarray]] = None,
) -> SpectralImage:
    """One deterministic trace per pixel center."""
    cam = scene.camera
    eps = settings.resolve_epsilon(scene)
    directions = cam.all_pixel_directions()
    image = SpectralImage(cam.width, cam.height, scene.grid)
    bins = scene.grid.bin_count
    ones = np.ones(bins)
    for py in range(cam.height):
        for px in range(cam.width):
            root = Ray(
                origin=cam.position,
                direction=directions[py, px],
                throughput=ones.copy(),
                pixel=py * cam.width + px,
                depth=0,
                t_min=0.0,
                t_max=np.inf,
                path_id=0,
                kind=0,
            )
            contribs: list[tuple[int, np.ndarray]] = []
            run_path_tree(
                scene, settings, eps, root,
                lambda _pix, node, v: contribs.append((node, v)),
                stats=stats,
                gi_estimate=gi_estimate,
            )
            image.data[py, px] = accumulate_ordered(contribs, bins)
    return image
