"""CIE colorimetry and RGB-to-spectrum reconstruction.

The central object is :class:`CmfTable`: the CIE 1931 color-matching functions
resampled onto the working wavelength grid, together with a reference
illuminant.  Its matrix ``A`` (one column per CMF, weighted by the illuminant)
drives both directions:

* ``spectrum_to_xyz``:  XYZ = Aᵀ·s · Δλ / N,  with N chosen so the unit
  spectrum (a perfect reflector under the reference illuminant) has Y = 1.
* ``rgb_to_spectrum``:  s_f = A (AᵀA)⁻¹ · xyz · N / Δλ, the fundamental
  metamer.  The round trip through spectrum_to_xyz is exact by construction,
  for any reference illuminant, because Aᵀ applied to the reconstruction
  collapses to the identity on XYZ.

Spectra reconstructed this way can carry negative lobes.  They are kept;
clipping is a separate, explicit, counted operation (:func:`clip_negative`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._cie_data import CIE_WAVELENGTHS_NM, CIE_XBAR, CIE_YBAR, CIE_ZBAR, D65_SPD
from .spectra import DEFAULT_GRID, Spectrum, WavelengthGrid

log = logging.getLogger(__name__)

# Linear sRGB primaries, D65 white (IEC 61966-2-1).  Rows map linear RGB
# to XYZ; the inverse is computed once so the pair is mutually consistent
# to machine precision.
RGB_TO_XYZ_MATRIX = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
XYZ_TO_RGB_MATRIX = np.linalg.inv(RGB_TO_XYZ_MATRIX)

# Integral drift allowed when resampling CMFs onto a different grid.
RESAMPLE_INTEGRAL_TOL = 0.005


@dataclass(frozen=True)
class ColorXYZ:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class ColorRGB:
    """Linear (pre-gamma) RGB. Out-of-gamut components stay negative."""

    r: float
    g: float
    b: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.g, self.b])


def _resample(src_wl: np.ndarray, src_values: np.ndarray, grid: WavelengthGrid) -> np.ndarray:
    return np.interp(grid.wavelengths(), src_wl, src_values, left=0.0, right=0.0)


@dataclass(frozen=True)
class CmfTable:
    """Color-matching functions + reference illuminant on a wavelength grid.

    ``cmf`` holds the bare resampled CMFs, shape (bins, 3); ``illuminant`` is
    the reference SPD on the same grid (all ones for illuminant E).  Derived
    matrices are cached at construction.
    """

    grid: WavelengthGrid
    cmf: np.ndarray
    illuminant: np.ndarray
    a_matrix: np.ndarray = field(init=False, repr=False, compare=False)
    normalization: float = field(init=False, repr=False, compare=False)
    _recon: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        cmf = np.array(self.cmf, dtype=np.float64, copy=True)
        illum = np.array(self.illuminant, dtype=np.float64, copy=True)
        if cmf.shape != (self.grid.bin_count, 3):
            raise ValueError(f"cmf shape {cmf.shape}, expected ({self.grid.bin_count}, 3)")
        if illum.shape != (self.grid.bin_count,):
            raise ValueError(f"illuminant shape {illum.shape}, expected ({self.grid.bin_count},)")
        if np.any(cmf < 0.0) or np.any(illum < 0.0):
            raise ValueError("CMFs and illuminant must be non-negative")
        for arr in (cmf, illum):
            arr.setflags(write=False)
        object.__setattr__(self, "cmf", cmf)
        object.__setattr__(self, "illuminant", illum)

        a = illum[:, None] * cmf
        norm = self.grid.step_nm * float((cmf[:, 1] * illum).sum())
        if norm <= 0.0:
            raise ValueError("reference illuminant has zero luminous response")
        gram = a.T @ a
        # CIE 1931 CMFs on any grid covering the visible range give a
        # well-conditioned Gram matrix; guard against degenerate custom input.
        if np.linalg.cond(gram) > 1e12:
            raise ValueError("CMF Gram matrix is numerically singular")
        recon = a @ np.linalg.inv(gram)
        a.setflags(write=False)
        recon.setflags(write=False)
        object.__setattr__(self, "a_matrix", a)
        object.__setattr__(self, "normalization", norm)
        object.__setattr__(self, "_recon", recon)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_table(
        cls,
        src_wavelengths: np.ndarray,
        src_cmf: np.ndarray,
        grid: WavelengthGrid = DEFAULT_GRID,
        src_illuminant: np.ndarray | None = None,
    ) -> "CmfTable":
        """Resample a source CMF tabulation (n, 3) onto ``grid``.

        Rejects grids that distort any CMF integral by more than
        ``RESAMPLE_INTEGRAL_TOL`` relative.
        """
        src_wl = np.asarray(src_wavelengths, dtype=np.float64)
        src = np.asarray(src_cmf, dtype=np.float64)
        if src.ndim != 2 or src.shape[1] != 3 or src.shape[0] != src_wl.shape[0]:
            raise ValueError(f"source cmf shape {src.shape} does not match wavelengths")
        cmf = np.column_stack([_resample(src_wl, src[:, j], grid) for j in range(3)])
        for j, name in enumerate(("xbar", "ybar", "zbar")):
            ref = np.trapezoid(src[:, j], src_wl)
            got = np.trapezoid(cmf[:, j], grid.wavelengths())
            if abs(got - ref) > RESAMPLE_INTEGRAL_TOL * abs(ref):
                raise ValueError(
                    f"resampling onto {grid} changes the {name} integral by "
                    f"{abs(got - ref) / abs(ref):.2%} (limit {RESAMPLE_INTEGRAL_TOL:.1%})"
                )
        if src_illuminant is None:
            illum = np.ones(grid.bin_count)
        else:
            illum = _resample(src_wl, np.asarray(src_illuminant, dtype=np.float64), grid)
        return cls(grid, cmf, illum)

    @classmethod
    def from_builtin(
        cls, grid: WavelengthGrid = DEFAULT_GRID, illuminant: str = "E"
    ) -> "CmfTable":
        """Builtin CIE 1931 2-degree observer; illuminant "E" or "D65"."""
        if illuminant == "E":
            spd = np.ones_like(D65_SPD)
        elif illuminant == "D65":
            spd = D65_SPD
        else:
            raise ValueError(f"unknown builtin illuminant {illuminant!r}")
        return cls.from_table(
            CIE_WAVELENGTHS_NM,
            np.column_stack([CIE_XBAR, CIE_YBAR, CIE_ZBAR]),
            grid,
            src_illuminant=spd,
        )


DEFAULT_CMF = CmfTable.from_builtin()


def _check_grid(s: Spectrum, cmf: CmfTable) -> None:
    if s.grid != cmf.grid:
        raise ValueError(f"spectrum grid {s.grid} does not match table grid {cmf.grid}")


def spectrum_to_xyz(s: Spectrum, cmf: CmfTable = DEFAULT_CMF) -> ColorXYZ:
    _check_grid(s, cmf)
    xyz = cmf.a_matrix.T @ s.samples * (cmf.grid.step_nm / cmf.normalization)
    return ColorXYZ(float(xyz[0]), float(xyz[1]), float(xyz[2]))


def xyz_to_rgb(c: ColorXYZ) -> ColorRGB:
    rgb = XYZ_TO_RGB_MATRIX @ c.as_array()
    return ColorRGB(float(rgb[0]), float(rgb[1]), float(rgb[2]))


def rgb_to_xyz(c: ColorRGB) -> ColorXYZ:
    xyz = RGB_TO_XYZ_MATRIX @ c.as_array()
    return ColorXYZ(float(xyz[0]), float(xyz[1]), float(xyz[2]))


def rgb_to_spectrum(c: ColorRGB, cmf: CmfTable = DEFAULT_CMF) -> Spectrum:
    """Fundamental metamer of an RGB color: the unique spectrum in the span
    of the illuminant-weighted CMFs whose XYZ is exactly the target."""
    xyz = RGB_TO_XYZ_MATRIX @ c.as_array()
    samples = cmf._recon @ xyz * (cmf.normalization / cmf.grid.step_nm)
    return Spectrum(samples, cmf.grid)


def fundamental(s: Spectrum, cmf: CmfTable = DEFAULT_CMF) -> Spectrum:
    """Orthogonal projection of ``s`` onto the span of the weighted CMFs."""
    _check_grid(s, cmf)
    coeffs = cmf.a_matrix.T @ s.samples
    return Spectrum(cmf._recon @ coeffs, cmf.grid)


def metameric_black(s: Spectrum, cmf: CmfTable = DEFAULT_CMF) -> Spectrum:
    """Residual of ``s`` after removing its fundamental; its XYZ vanishes."""
    return Spectrum(s.samples - fundamental(s, cmf).samples, s.grid)


class ClipStats:
    """Process-wide count of negative-lobe clips (see :func:`clip_negative`)."""

    def __init__(self) -> None:
        self.events = 0
        self.bins_total = 0

    def reset(self) -> None:
        self.events = 0
        self.bins_total = 0


clip_stats = ClipStats()


def clip_negative(s: Spectrum) -> tuple[Spectrum, int]:
    """Clamp negative samples to zero for radiometric ingestion.

    Returns the clipped spectrum and the number of bins touched; every
    clipping event is counted in :data:`clip_stats` and logged.  Callers that
    need the unclipped metamer simply keep the original.
    """
    negative = s.samples < 0.0
    n = int(negative.sum())
    if n == 0:
        return s, 0
    clip_stats.events += 1
    clip_stats.bins_total += n
    log.warning("clipped %d negative spectral bins (min was %.3e)", n, s.samples.min())
    return Spectrum(np.where(negative, 0.0, s.samples), s.grid), n
