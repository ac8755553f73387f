"""spectray: spectral ray tracer with photon mapping and a domain-decomposed
parallel engine."""

from .spectra import DEFAULT_GRID, SpectralImage, Spectrum, WavelengthGrid
from .colorimetry import (
    CmfTable,
    ColorRGB,
    ColorXYZ,
    clip_negative,
    fundamental,
    metameric_black,
    rgb_to_spectrum,
    rgb_to_xyz,
    spectrum_to_xyz,
    xyz_to_rgb,
)
from .optics import (
    ComplexIor,
    Directions,
    FresnelDielectric,
    Lambertian,
    Material,
    TabulatedBrdf,
    eval_brdf,
    fresnel,
    kappa,
    reflect,
    refract,
)
from .scene import (
    Camera,
    DirectionalLight,
    Hit,
    Mesh,
    PointLight,
    Ray,
    Scene,
    SceneError,
    generate_primary_ray,
    intersect,
    light_geometry,
    occluded,
)
from .render_local import RenderSettings, render, shade_direct, trace
from .photonmap import Photon, PhotonMap
from .render_global import GiSettings, emit_photons, estimate_radiance, render_gi
from .scene_io import load_scene

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_GRID",
    "SpectralImage",
    "Spectrum",
    "WavelengthGrid",
    "CmfTable",
    "ColorRGB",
    "ColorXYZ",
    "clip_negative",
    "fundamental",
    "metameric_black",
    "rgb_to_spectrum",
    "rgb_to_xyz",
    "spectrum_to_xyz",
    "xyz_to_rgb",
    "ComplexIor",
    "Directions",
    "FresnelDielectric",
    "Lambertian",
    "Material",
    "TabulatedBrdf",
    "eval_brdf",
    "fresnel",
    "kappa",
    "reflect",
    "refract",
    "Camera",
    "DirectionalLight",
    "Hit",
    "Mesh",
    "PointLight",
    "Ray",
    "Scene",
    "SceneError",
    "generate_primary_ray",
    "intersect",
    "light_geometry",
    "occluded",
    "RenderSettings",
    "render",
    "shade_direct",
    "trace",
    "load_scene",
    "Photon",
    "PhotonMap",
    "GiSettings",
    "emit_photons",
    "estimate_radiance",
    "render_gi",
]
