"""Material models: complex-IOR Fresnel dielectrics, Lambertian reflectors,
and tabulated measured BRDFs.

Conventions: all directions are unit vectors pointing away from the surface
point.  ``fresnel`` takes the cosine of the incidence angle on the outside of
the interface and the full spectral complex IOR of both media, so reflectance
is computed per wavelength bin from the exact amplitude coefficients; the
geometric refraction direction, by contrast, uses the real index at a single
representative wavelength (dispersion is carried in amplitude, not in ray
splitting).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .spectra import Spectrum, WavelengthGrid
from . import tables

# Representative wavelength for the geometric refraction direction (sodium D).
GEOMETRIC_REF_WAVELENGTH_NM = 589.0

# Sellmeier coefficients for Schott N-BK7 (dispersion formula constants from
# the manufacturer datasheet; wavelength in micrometers).
BK7_SELLMEIER_B = (1.03961212, 0.231792344, 1.01046945)
BK7_SELLMEIER_C = (0.00600069867, 0.0200179144, 103.560653)


@dataclass(frozen=True)
class ComplexIor:
    """Spectral complex refractive index n(1 + i*kappa) with kappa = k/n."""

    n: Spectrum
    k: Spectrum

    def __post_init__(self) -> None:
        if self.n.grid != self.k.grid:
            raise ValueError("n and k must share one grid")
        if np.any(self.n.samples <= 0.0):
            raise ValueError("refractive index n must be positive everywhere")
        if np.any(self.k.samples < 0.0):
            raise ValueError("extinction k must be non-negative")

    @property
    def grid(self) -> WavelengthGrid:
        return self.n.grid

    def n_at(self, wavelength_nm: float = GEOMETRIC_REF_WAVELENGTH_NM) -> float:
        return float(self.n.samples[self.grid.index_of(wavelength_nm)])

    @property
    def is_lossless(self) -> bool:
        return not np.any(self.k.samples)

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, n: float, k: float = 0.0, grid: WavelengthGrid = None) -> "ComplexIor":
        from .spectra import DEFAULT_GRID

        grid = grid or DEFAULT_GRID
        return cls(Spectrum.constant(n, grid), Spectrum.constant(k, grid))

    @classmethod
    def vacuum(cls, grid: WavelengthGrid = None) -> "ComplexIor":
        return cls.constant(1.0, 0.0, grid)

    @classmethod
    def from_file(cls, path, grid: WavelengthGrid) -> "ComplexIor":
        n, k = tables.load_ior_table(path, grid)
        return cls(n, k)

    @classmethod
    def bk7(cls, grid: WavelengthGrid = None) -> "ComplexIor":
        """Schott BK7 crown glass via the Sellmeier form, k = 0."""
        from .spectra import DEFAULT_GRID

        grid = grid or DEFAULT_GRID
        lam_um2 = (grid.wavelengths() * 1e-3) ** 2
        n2 = 1.0 + sum(
            b * lam_um2 / (lam_um2 - c) for b, c in zip(BK7_SELLMEIER_B, BK7_SELLMEIER_C)
        )
        return cls(Spectrum(np.sqrt(n2), grid), Spectrum.zeros(grid))


def kappa(ior: ComplexIor) -> Spectrum:
    """Absorption index kappa = k/n of the n(1 + i*kappa) form."""
    return Spectrum(ior.k.samples / ior.n.samples, ior.grid)


def fresnel_amplitudes(
    cos_theta_i: float, ior_out: ComplexIor, ior_in: ComplexIor
) -> tuple[np.ndarray, np.ndarray]:
    """Complex Fresnel amplitude coefficients (r_s, r_p) per wavelength bin.

    ``ior_out`` is the medium the ray arrives from, ``ior_in`` the medium
    beyond the interface; cos_theta_i in [0, 1].
    """
    if not 0.0 <= cos_theta_i <= 1.0:
        raise ValueError(f"cos_theta_i must be in [0,1], got {cos_theta_i}")
    if ior_out.grid != ior_in.grid:
        raise ValueError("media must share one wavelength grid")
    n1 = ior_out.n.samples * (1.0 + 1j * (ior_out.k.samples / ior_out.n.samples))
    n2 = ior_in.n.samples * (1.0 + 1j * (ior_in.k.samples / ior_in.n.samples))
    ci = cos_theta_i
    sin2_i = 1.0 - ci * ci
    # Principal-branch complex cosine of the transmitted angle; for lossless
    # media past the critical angle this is purely imaginary, making |r|=1.
    ct = np.sqrt(1.0 - (n1 / n2) ** 2 * sin2_i + 0j)
    denom_s = n1 * ci + n2 * ct
    denom_p = n2 * ci + n1 * ct
    # A zero denominator needs ci == 0 and ct == 0 at once: grazing incidence
    # on index-matched media.  No interface, so no reflection.
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        rs = np.where(denom_s == 0.0, 0.0, (n1 * ci - n2 * ct) / denom_s)
        rp = np.where(denom_p == 0.0, 0.0, (n2 * ci - n1 * ct) / denom_p)
    return rs, rp


def fresnel(
    cos_theta_i: float, ior_out: ComplexIor, ior_in: ComplexIor
) -> tuple[Spectrum, Spectrum]:
    """Unpolarized interface reflectance and transmitted fraction per bin.

    R = (|r_s|^2 + |r_p|^2)/2; T = 1 - R.  For lossless media beyond the
    critical angle R is set to exactly 1 (the amplitude route lands there
    only up to rounding).  For absorbing media T is the fraction entering
    the medium at the interface, not a propagated transmittance.
    """
    rs, rp = fresnel_amplitudes(cos_theta_i, ior_out, ior_in)
    r = 0.5 * (np.abs(rs) ** 2 + np.abs(rp) ** 2)
    if ior_out.is_lossless and ior_in.is_lossless:
        eta = ior_out.n.samples / ior_in.n.samples
        tir = eta * eta * (1.0 - cos_theta_i * cos_theta_i) > 1.0
        if np.any(tir):
            r = np.where(tir, 1.0, r)
    r = np.clip(r, 0.0, 1.0)
    grid = ior_out.grid
    return Spectrum(r, grid), Spectrum(1.0 - r, grid)


def reflect(w: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Mirror of incident direction w (pointing toward the surface)."""
    return w - 2.0 * float(np.dot(w, normal)) * normal


def refract(w: np.ndarray, normal: np.ndarray, eta_ratio: float) -> Optional[np.ndarray]:
    """Snell refraction of w (toward the surface) across a normal that
    opposes it (dot(w, normal) < 0); eta_ratio = n_out / n_in.

    Returns None on total internal reflection.
    """
    cos_i = -float(np.dot(w, normal))
    sin2_t = eta_ratio * eta_ratio * (1.0 - cos_i * cos_i)
    if sin2_t > 1.0:
        return None
    cos_t = np.sqrt(1.0 - sin2_t)
    t = eta_ratio * w + (eta_ratio * cos_i - cos_t) * normal
    return t / np.linalg.norm(t)


@dataclass(frozen=True)
class Directions:
    """Incident / outgoing / normal triple, all unit within 1e-9."""

    wi: np.ndarray
    wo: np.ndarray
    normal: np.ndarray

    def __post_init__(self) -> None:
        for name in ("wi", "wo", "normal"):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            if v.shape != (3,) or abs(np.dot(v, v) - 1.0) > 2e-9:
                raise ValueError(f"{name} must be a unit 3-vector")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class Lambertian:
    """Ideal diffuse reflector; BRDF = reflectance/pi, view-independent."""

    reflectance: Spectrum

    def __post_init__(self) -> None:
        s = self.reflectance.samples
        if np.any(s < 0.0) or np.any(s > 1.0):
            raise ValueError("Lambertian reflectance must lie in [0,1] per bin")


@dataclass(frozen=True)
class FresnelDielectric:
    """Smooth interface between two media; purely specular (delta lobes)."""

    ior: ComplexIor
    exterior_ior: ComplexIor

    def __post_init__(self) -> None:
        if self.ior.grid != self.exterior_ior.grid:
            raise ValueError("interior and exterior media must share one grid")


class ClampDiagnostics:
    """Counts angular-range clamps in tabulated BRDF queries."""

    def __init__(self) -> None:
        self.clamped_queries = 0

    def reset(self) -> None:
        self.clamped_queries = 0


@dataclass(frozen=True)
class TabulatedBrdf:
    """Measured BRDF on a regular (theta_i, theta_o, delta_phi) grid, one
    spectrum per cell, trilinear interpolation, clamped outside the range."""

    theta_i_deg: np.ndarray
    theta_o_deg: np.ndarray
    dphi_deg: np.ndarray
    values: np.ndarray  # (n_ti, n_to, n_dp, bins)
    grid: WavelengthGrid
    diagnostics: ClampDiagnostics = field(
        default_factory=ClampDiagnostics, compare=False, repr=False
    )

    def __post_init__(self) -> None:
        for name in ("theta_i_deg", "theta_o_deg", "dphi_deg"):
            ax = np.array(getattr(self, name), dtype=np.float64, copy=True)
            if ax.ndim != 1 or ax.size < 1 or np.any(np.diff(ax) <= 0.0):
                raise ValueError(f"{name} must be 1-D strictly increasing")
            ax.setflags(write=False)
            object.__setattr__(self, name, ax)
        vals = np.array(self.values, dtype=np.float64, copy=True)
        expect = (
            self.theta_i_deg.size,
            self.theta_o_deg.size,
            self.dphi_deg.size,
            self.grid.bin_count,
        )
        if vals.shape != expect:
            raise ValueError(f"values shape {vals.shape}, expected {expect}")
        if np.any(vals < 0.0):
            raise ValueError("BRDF table values must be non-negative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def _axis_locate(self, axis: np.ndarray, q: float) -> tuple[int, float, bool]:
        # Returns (lower index, fraction, clamped?) for linear interpolation.
        if q <= axis[0]:
            return 0, 0.0, q < axis[0]
        if q >= axis[-1]:
            return max(axis.size - 2, 0), 1.0 if axis.size > 1 else 0.0, q > axis[-1]
        i = int(np.searchsorted(axis, q) - 1)
        f = (q - axis[i]) / (axis[i + 1] - axis[i])
        return i, f, False

    def lookup(self, theta_i_deg: float, theta_o_deg: float, dphi_deg: float) -> np.ndarray:
        axes = (self.theta_i_deg, self.theta_o_deg, self.dphi_deg)
        locs = [self._axis_locate(ax, q) for ax, q in zip(axes, (theta_i_deg, theta_o_deg, dphi_deg))]
        if any(clamped for _, _, clamped in locs):
            self.diagnostics.clamped_queries += 1
        out = np.zeros(self.grid.bin_count)
        for corner in range(8):
            w = 1.0
            idx = []
            for d in range(3):
                i, f, _ = locs[d]
                hi = (corner >> d) & 1
                if axes[d].size == 1:
                    idx.append(0)
                    w *= 1.0 if hi == 0 else 0.0
                else:
                    idx.append(min(i + hi, axes[d].size - 1))
                    w *= f if hi else (1.0 - f)
            if w != 0.0:
                out += w * self.values[idx[0], idx[1], idx[2]]
        return out


Material = Union[Lambertian, FresnelDielectric, TabulatedBrdf]


def _angles_from_directions(d: Directions) -> tuple[float, float, float]:
    ci = np.clip(np.dot(d.normal, d.wi), -1.0, 1.0)
    co = np.clip(np.dot(d.normal, d.wo), -1.0, 1.0)
    ti = np.degrees(np.arccos(ci))
    to = np.degrees(np.arccos(co))
    # Azimuth difference from the tangent-plane projections; degenerate
    # (normal-incidence) projections give dphi = 0.
    pi = d.wi - ci * d.normal
    po = d.wo - co * d.normal
    ni, no = np.linalg.norm(pi), np.linalg.norm(po)
    if ni < 1e-12 or no < 1e-12:
        return float(ti), float(to), 0.0
    c = np.clip(np.dot(pi / ni, po / no), -1.0, 1.0)
    return float(ti), float(to), float(np.degrees(np.arccos(c)))


def eval_brdf(m: Material, d: Directions) -> Spectrum:
    """F_r(wi, wo) per wavelength, sr^-1.  Delta materials return zero: their
    energy moves through the specular continuation rays, not the BRDF sum."""
    if isinstance(m, Lambertian):
        return Spectrum(m.reflectance.samples / np.pi, m.reflectance.grid)
    if isinstance(m, FresnelDielectric):
        return Spectrum.zeros(m.ior.grid)
    if isinstance(m, TabulatedBrdf):
        ti, to, dp = _angles_from_directions(d)
        return Spectrum(m.lookup(ti, to, dp), m.grid)
    raise TypeError(f"not a material: {m!r}")


def mean_albedo(m: Material) -> float:
    """Mean spectral reflectance used for photon-roulette survival."""
    if isinstance(m, Lambertian):
        return float(m.reflectance.samples.mean())
    if isinstance(m, FresnelDielectric):
        return 1.0  # splits all energy between R and T; survival decided there
    if isinstance(m, TabulatedBrdf):
        # Rough directional-hemispherical estimate: pi * mean table value.
        return float(min(1.0, np.pi * m.values.mean()))
    raise TypeError(f"not a material: {m!r}")


def is_diffuse(m: Material) -> bool:
    return not isinstance(m, FresnelDielectric)
