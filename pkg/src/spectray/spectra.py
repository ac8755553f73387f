"""Sampled spectra on a shared uniform wavelength grid.

Every spectral quantity in the renderer (radiance, reflectance, refractive
index, photon power) is a vector of samples on one :class:`WavelengthGrid`.
Mixing grids is a programming error and raises immediately rather than
resampling silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_START_NM = 380.0
DEFAULT_END_NM = 780.0
DEFAULT_BIN_COUNT = 81


@dataclass(frozen=True)
class WavelengthGrid:
    """Uniform sampling of [start_nm, end_nm] inclusive with bin_count points."""

    start_nm: float = DEFAULT_START_NM
    end_nm: float = DEFAULT_END_NM
    bin_count: int = DEFAULT_BIN_COUNT

    def __post_init__(self) -> None:
        if not (self.start_nm > 0.0 and self.end_nm > self.start_nm):
            raise ValueError(
                f"wavelength range must satisfy 0 < start < end, "
                f"got [{self.start_nm}, {self.end_nm}]"
            )
        if self.bin_count < 2:
            raise ValueError(f"bin_count must be >= 2, got {self.bin_count}")

    @property
    def step_nm(self) -> float:
        return (self.end_nm - self.start_nm) / (self.bin_count - 1)

    def wavelengths(self) -> np.ndarray:
        return np.linspace(self.start_nm, self.end_nm, self.bin_count)

    def index_of(self, wavelength_nm: float) -> int:
        """Nearest sample index for a wavelength inside the grid."""
        if not (self.start_nm <= wavelength_nm <= self.end_nm):
            raise ValueError(f"{wavelength_nm} nm outside grid [{self.start_nm}, {self.end_nm}]")
        return int(round((wavelength_nm - self.start_nm) / self.step_nm))


DEFAULT_GRID = WavelengthGrid()


@dataclass(frozen=True)
class Spectrum:
    """Immutable sample vector tied to a grid.

    Samples may be negative: reconstructed spectra and metameric residuals
    legitimately carry negative lobes.  Radiometric call sites that require
    non-negativity (lights, reflectances, image pixels) validate at ingestion,
    see :func:`spectray.colorimetry.clip_negative`.
    """

    samples: np.ndarray
    grid: WavelengthGrid = DEFAULT_GRID

    def __post_init__(self) -> None:
        arr = np.array(self.samples, dtype=np.float64, copy=True)
        if arr.shape != (self.grid.bin_count,):
            raise ValueError(
                f"expected {self.grid.bin_count} samples, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("spectrum samples must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, grid: WavelengthGrid = DEFAULT_GRID) -> "Spectrum":
        return cls(np.zeros(grid.bin_count), grid)

    @classmethod
    def constant(cls, value: float, grid: WavelengthGrid = DEFAULT_GRID) -> "Spectrum":
        return cls(np.full(grid.bin_count, float(value)), grid)

    # -- arithmetic --------------------------------------------------------

    def _check_same_grid(self, other: "Spectrum") -> None:
        if other.grid != self.grid:
            raise ValueError(f"grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other: "Spectrum") -> "Spectrum":
        self._check_same_grid(other)
        return Spectrum(self.samples + other.samples, self.grid)

    def __sub__(self, other: "Spectrum") -> "Spectrum":
        self._check_same_grid(other)
        return Spectrum(self.samples - other.samples, self.grid)

    def __mul__(self, other):
        if isinstance(other, Spectrum):
            self._check_same_grid(other)
            return Spectrum(self.samples * other.samples, self.grid)
        return Spectrum(self.samples * float(other), self.grid)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "Spectrum":
        return Spectrum(self.samples / float(scalar), self.grid)

    # -- queries -----------------------------------------------------------

    def max_value(self) -> float:
        return float(self.samples.max())

    def mean_value(self) -> float:
        return float(self.samples.mean())

    def is_zero(self) -> bool:
        return not np.any(self.samples)

    def clipped(self, lo: float = 0.0) -> "Spectrum":
        return Spectrum(np.maximum(self.samples, lo), self.grid)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Spectrum):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.samples, other.samples)

    def __hash__(self):  # frozen dataclass would try to hash the array
        return hash((self.grid, self.samples.tobytes()))


@dataclass
class SpectralImage:
    """Dense per-pixel spectra, row-major, pixel (0, 0) at the top left."""

    width: int
    height: int
    grid: WavelengthGrid = DEFAULT_GRID
    data: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dims must be positive, got {self.width}x{self.height}")
        if self.data is None:
            self.data = np.zeros((self.height, self.width, self.grid.bin_count))
        else:
            self.data = np.asarray(self.data, dtype=np.float64)
            if self.data.shape != (self.height, self.width, self.grid.bin_count):
                raise ValueError(
                    f"data shape {self.data.shape} does not match "
                    f"{self.height}x{self.width}x{self.grid.bin_count}"
                )

    def pixel(self, px: int, py: int) -> Spectrum:
        return Spectrum(self.data[py, px], self.grid)

    def add(self, px: int, py: int, samples: np.ndarray) -> None:
        self.data[py, px] += samples

    def copy(self) -> "SpectralImage":
        return SpectralImage(self.width, self.height, self.grid, self.data.copy())

    @property
    def pixel_count(self) -> int:
        return self.width * self.height
