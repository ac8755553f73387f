"""Two-pass global illumination: photon emission, then per-pixel gathering.

Radiance at a diffuse hit is the sum of four parts: direct light by shadow
rays (same code path as the local renderer), specular continuations (same),
a caustic estimate, and an indirect-diffuse estimate from the photon maps.

Map bookkeeping keeps the four parts disjoint.  A photon deposits at every
diffuse hit, but the deposit's map depends on the path so far:

* no prior interaction (straight from the light): direct map.  Shadow rays
  already account for this energy, so it never enters an estimate; the map
  exists for energy accounting and diagnostics.
* one or more specular interactions and nothing else: caustic map.
* any prior diffuse interaction: global map.

With zero photons per light both estimates vanish and render_gi reduces to
the local renderer exactly, byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .optics import (
    Directions,
    FresnelDielectric,
    Lambertian,
    TabulatedBrdf,
    eval_brdf,
    fresnel,
    is_diffuse,
    reflect,
    refract,
)
from .photonmap import PhotonMap
from .render_local import PathStats, RenderSettings, oriented, render
from .scene import DirectionalLight, Hit, PointLight, Ray, Scene, intersect
from .spectra import SpectralImage, Spectrum


def _caustic_rule(specular_before: int, diffuse_before: int) -> bool:
    """The L(S+)D filter: only specular interactions before this deposit."""
    return specular_before >= 1 and diffuse_before == 0


@dataclass(frozen=True)
class GiSettings:
    """Photon pass controls.

    ``photons_per_light`` of zero disables the pass entirely (the degenerate
    case the tests pin down); everything else must be positive.
    """

    photons_per_light: int = 20000
    k_nearest: int = 50
    max_photon_bounces: int = 12
    max_radius_fraction: float = 0.05
    caustic_filter: Callable[[int, int], bool] = field(default=_caustic_rule)

    def __post_init__(self) -> None:
        if self.photons_per_light < 0:
            raise ValueError("photons_per_light must be >= 0")
        if self.k_nearest < 1 or self.max_photon_bounces < 1:
            raise ValueError("k_nearest and max_photon_bounces must be positive")
        if self.max_radius_fraction <= 0.0:
            raise ValueError("max_radius_fraction must be positive")


def _albedo_spectrum(material) -> Optional[np.ndarray]:
    if isinstance(material, Lambertian):
        return material.reflectance.samples
    if isinstance(material, TabulatedBrdf):
        return np.clip(np.pi * material.values.mean(axis=(0, 1, 2)), 0.0, 1.0)
    return None


def _tangent_frame(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    t = np.cross(n, a)
    t /= np.linalg.norm(t)
    return t, np.cross(n, t)


def _cosine_direction(n: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u1, u2 = rng.random(), rng.random()
    r = np.sqrt(u1)
    phi = 2.0 * np.pi * u2
    t, b = _tangent_frame(n)
    return r * np.cos(phi) * t + r * np.sin(phi) * b + np.sqrt(1.0 - u1) * n


def _sphere_direction(rng: np.random.Generator) -> np.ndarray:
    z = 1.0 - 2.0 * rng.random()
    phi = 2.0 * np.pi * rng.random()
    s = np.sqrt(max(0.0, 1.0 - z * z))
    return np.array([s * np.cos(phi), s * np.sin(phi), z])


class _Deposits:
    def __init__(self) -> None:
        self.positions: list[np.ndarray] = []
        self.directions: list[np.ndarray] = []
        self.powers: list[np.ndarray] = []

    def add(self, position, direction, power) -> None:
        self.positions.append(position)
        self.directions.append(direction)
        self.powers.append(power)

    def build(self, scene: Scene, flag: str) -> PhotonMap:
        n = len(self.positions)
        if n == 0:
            return PhotonMap(
                np.empty((0, 3)), np.empty((0, 3)),
                np.empty((0, scene.grid.bin_count)), scene.grid, flag,
            )
        return PhotonMap(
            np.array(self.positions), np.array(self.directions),
            np.array(self.powers), scene.grid, flag,
        )


def _trace_photon(
    scene: Scene,
    settings: GiSettings,
    rng: np.random.Generator,
    origin: np.ndarray,
    direction: np.ndarray,
    power: np.ndarray,
    sinks: tuple[_Deposits, _Deposits, _Deposits],
) -> None:
    globals_, caustics, directs = sinks
    specular_before = 0
    diffuse_before = 0
    eps = scene.shadow_epsilon
    t_min = 0.0
    for _bounce in range(settings.max_photon_bounces):
        probe = Ray(
            origin=origin, direction=direction, throughput=power,
            pixel=-1, depth=0, t_min=t_min, t_max=np.inf, path_id=0, kind=0,
        )
        hit = intersect(scene, probe)
        if hit is None:
            return
        material = scene.material_of(hit.material_id)
        if is_diffuse(material):
            if diffuse_before > 0:
                sink = globals_
            elif settings.caustic_filter(specular_before, diffuse_before):
                sink = caustics
            else:
                sink = directs
            sink.add(hit.position, direction, power)
            albedo = _albedo_spectrum(material)
            survival = float(albedo.mean())
            if survival <= 0.0 or rng.random() >= survival:
                return
            n = oriented(hit.normal, -direction)
            direction = _cosine_direction(n, rng)
            power = power * (albedo / survival)
            diffuse_before += 1
        else:
            # Fresnel interface: continue along one branch, chosen by the
            # mean reflected share, reweighted to stay unbiased
            assert isinstance(material, FresnelDielectric)
            entering = float(np.dot(direction, hit.normal)) < 0.0
            n = hit.normal if entering else -hit.normal
            ior_out = material.exterior_ior if entering else material.ior
            ior_in = material.ior if entering else material.exterior_ior
            cos_i = max(0.0, -float(np.dot(direction, n)))
            r_spec, t_spec = fresnel(cos_i, ior_out, ior_in)
            wt = refract(direction, n, ior_out.n_at() / ior_in.n_at())
            p_reflect = float(r_spec.samples.mean()) if wt is not None else 1.0
            if wt is None or rng.random() < p_reflect:
                direction = reflect(direction, n)
                power = power * (r_spec.samples / p_reflect)
            else:
                direction = wt
                power = power * (t_spec.samples / (1.0 - p_reflect))
            specular_before += 1
        origin = hit.position
        t_min = eps
        if float(power.max()) <= 0.0:
            return


def emit_photons_full(
    scene: Scene, settings: GiSettings, rng_seed: int
) -> tuple[PhotonMap, PhotonMap, PhotonMap]:
    """Trace photon packets from every light; returns (global, caustic,
    direct) maps.  Deterministic for a fixed seed: each packet gets its own
    counter-derived generator, so tracing order cannot matter."""
    if not scene.lights:
        raise ValueError("photon emission needs at least one light")
    sinks = (_Deposits(), _Deposits(), _Deposits())
    n = settings.photons_per_light
    diag = scene.bounds.diagonal
    center = (scene.bounds.lo + scene.bounds.hi) * 0.5
    for light_index, light in enumerate(scene.lights):
        if isinstance(light, PointLight):
            packet_power = light.emission.samples * (4.0 * np.pi / max(n, 1))
        else:
            assert isinstance(light, DirectionalLight)
            radius = 0.5 * diag
            packet_power = light.emission.samples * (np.pi * radius * radius / max(n, 1))
            t, b = _tangent_frame(light.direction)
        for packet in range(n):
            rng = np.random.default_rng(
                np.random.SeedSequence((rng_seed, light_index, packet))
            )
            if isinstance(light, PointLight):
                origin = light.position
                direction = _sphere_direction(rng)
            else:
                r = radius * np.sqrt(rng.random())
                phi = 2.0 * np.pi * rng.random()
                start = center - light.direction * diag
                origin = start + r * np.cos(phi) * t + r * np.sin(phi) * b
                direction = light.direction
            _trace_photon(scene, settings, rng, origin, direction, packet_power.copy(), sinks)
    return (
        sinks[0].build(scene, "global"),
        sinks[1].build(scene, "caustic"),
        sinks[2].build(scene, "direct"),
    )


def emit_photons(scene: Scene, settings: GiSettings, rng_seed: int) -> tuple[PhotonMap, PhotonMap]:
    """(global, caustic) maps; the direct map stays internal (its energy is
    what the shadow rays already deliver)."""
    global_map, caustic_map, _direct = emit_photons_full(scene, settings, rng_seed)
    return global_map, caustic_map


def estimate_radiance(
    pmap: PhotonMap, hit: Hit, wo: np.ndarray, settings: GiSettings, scene: Scene
) -> Spectrum:
    """k-nearest density estimate L = sum F_r * power / (pi r^2) with r the
    k-th neighbor distance; zero when the radius holds fewer than k."""
    material = scene.material_of(hit.material_id)
    if not is_diffuse(material) or pmap.count < settings.k_nearest:
        return Spectrum.zeros(scene.grid)
    max_radius = settings.max_radius_fraction * scene.bounds.diagonal
    d, idx = pmap.k_nearest(hit.position, settings.k_nearest, max_radius)
    if len(idx) < settings.k_nearest:
        return Spectrum.zeros(scene.grid)
    r = float(d[-1])
    if r <= 0.0:
        return Spectrum.zeros(scene.grid)
    if isinstance(material, Lambertian):
        # constant lobe: one BRDF factor for the whole neighborhood
        total = pmap.powers[idx].sum(axis=0)
        out = scene.brdf_cache[hit.material_id] * total
    else:
        n = oriented(hit.normal, wo)
        out = np.zeros(scene.grid.bin_count)
        for j, i in enumerate(idx):
            wi = -pmap.directions[i]
            fr = eval_brdf(material, Directions(wi / np.linalg.norm(wi), wo, n)).samples
            out = out + fr * pmap.powers[i]
    return Spectrum(out / (np.pi * r * r), scene.grid)


def render_gi(
    scene: Scene,
    gi: GiSettings,
    settings: Optional[RenderSettings] = None,
    rng_seed: int = 0,
    stats: Optional[PathStats] = None,
    maps: Optional[tuple[PhotonMap, PhotonMap]] = None,
) -> SpectralImage:
    """Photon-mapped render: local-renderer direct+specular plus caustic and
    indirect-diffuse photon estimates at every diffuse hit."""
    if settings is None:
        settings = scene.settings if isinstance(scene.settings, RenderSettings) else RenderSettings()
    if gi.photons_per_light == 0 and maps is None:
        return render(scene, settings, stats=stats)
    if maps is None:
        global_map, caustic_map = emit_photons(scene, gi, rng_seed)
    else:
        global_map, caustic_map = maps

    def gi_estimate(hit: Hit, wo: np.ndarray) -> np.ndarray:
        caustic = estimate_radiance(caustic_map, hit, wo, gi, scene)
        indirect = estimate_radiance(global_map, hit, wo, gi, scene)
        return caustic.samples + indirect.samples

    return render(scene, settings, stats=stats, gi_estimate=gi_estimate)
