"""Loaders for whitespace-separated spectral table files.

Format shared by every table under data/: comment lines start with '#',
blank lines are skipped, data rows are "wavelength_nm v1 [v2 ...]" with
strictly increasing wavelengths.  Values are linearly interpolated onto the
working grid, constant-extrapolated at the ends (a material measured over
400-700 nm keeps its end values outside that range rather than dropping
to zero).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .spectra import Spectrum, WavelengthGrid


class TableError(ValueError):
    """Malformed table file; message carries path and line number."""


def load_columns(path: str | Path, n_values: int) -> tuple[np.ndarray, np.ndarray]:
    """Parse a table file into (wavelengths, values[n_rows, n_values])."""
    path = Path(path)
    wavelengths: list[float] = []
    rows: list[list[float]] = []
    try:
        text = path.read_text()
    except OSError as exc:
        raise TableError(f"{path}: {exc.strerror or exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 1 + n_values:
            raise TableError(
                f"{path}:{lineno}: expected {1 + n_values} columns, got {len(parts)}"
            )
        try:
            numbers = [float(p) for p in parts]
        except ValueError:
            raise TableError(f"{path}:{lineno}: non-numeric value in {line!r}") from None
        if not all(np.isfinite(numbers)):
            raise TableError(f"{path}:{lineno}: non-finite value")
        wavelengths.append(numbers[0])
        rows.append(numbers[1:])
    if len(wavelengths) < 2:
        raise TableError(f"{path}: need at least two data rows, got {len(wavelengths)}")
    wl = np.array(wavelengths)
    if np.any(np.diff(wl) <= 0.0):
        bad = int(np.argmax(np.diff(wl) <= 0.0)) + 2
        raise TableError(f"{path}: wavelengths must be strictly increasing (row {bad})")
    return wl, np.array(rows)


def resample_to_grid(wl: np.ndarray, values: np.ndarray, grid: WavelengthGrid) -> np.ndarray:
    """Interpolate one value column onto the grid, clamping at the ends."""
    return np.interp(grid.wavelengths(), wl, values)


def load_spectrum(path: str | Path, grid: WavelengthGrid) -> Spectrum:
    """Load a two-column (wavelength, value) file as a Spectrum."""
    wl, vals = load_columns(path, 1)
    return Spectrum(resample_to_grid(wl, vals[:, 0], grid), grid)


def load_ior_table(path: str | Path, grid: WavelengthGrid) -> tuple[Spectrum, Spectrum]:
    """Load a three-column (wavelength, n, k) refractive-index file."""
    wl, vals = load_columns(path, 2)
    n = resample_to_grid(wl, vals[:, 0], grid)
    k = resample_to_grid(wl, vals[:, 1], grid)
    if np.any(n <= 0.0):
        raise TableError(f"{path}: refractive index n must be positive")
    if np.any(k < 0.0):
        raise TableError(f"{path}: extinction k must be non-negative")
    return Spectrum(n, grid), Spectrum(k, grid)


def load_brdf_table(path: str | Path, grid: WavelengthGrid):
    """Load a measured-BRDF file.

    First data line is a header: n_theta_i n_theta_o n_dphi n_bins
    lambda_start lambda_end.  Each following row is theta_i theta_o dphi
    followed by n_bins sample values, in any order; the rows must cover the
    full angular grid exactly once.  Samples are resampled from the file's
    uniform wavelength axis onto the working grid.
    """
    from .optics import TabulatedBrdf

    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise TableError(f"{path}: {exc.strerror or exc}") from exc
    header = None
    rows: list[tuple[int, list[float]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            numbers = [float(p) for p in line.split()]
        except ValueError:
            raise TableError(f"{path}:{lineno}: non-numeric value in {line!r}") from None
        if header is None:
            if len(numbers) != 6:
                raise TableError(
                    f"{path}:{lineno}: header needs 6 values "
                    "(n_theta_i n_theta_o n_dphi n_bins lambda_start lambda_end)"
                )
            header = numbers
            continue
        rows.append((lineno, numbers))
    if header is None:
        raise TableError(f"{path}: missing header line")
    ni, no, np_, nb = (int(x) for x in header[:4])
    lam0, lam1 = header[4], header[5]
    if min(ni, no, np_) < 2 or nb < 2 or lam1 <= lam0:
        raise TableError(f"{path}: bad header {header}")
    if len(rows) != ni * no * np_:
        raise TableError(
            f"{path}: expected {ni * no * np_} data rows for the angular grid, got {len(rows)}"
        )
    angles = np.empty((len(rows), 3))
    samples = np.empty((len(rows), nb))
    for r, (lineno, numbers) in enumerate(rows):
        if len(numbers) != 3 + nb:
            raise TableError(f"{path}:{lineno}: expected {3 + nb} columns, got {len(numbers)}")
        angles[r] = numbers[:3]
        samples[r] = numbers[3:]
    axes = []
    for c, (name, want) in enumerate((("theta_i", ni), ("theta_o", no), ("dphi", np_))):
        vals = np.unique(angles[:, c])
        if len(vals) != want:
            raise TableError(f"{path}: {name} axis has {len(vals)} distinct values, expected {want}")
        axes.append(vals)
    file_wl = np.linspace(lam0, lam1, nb)
    values = np.empty((ni, no, np_, grid.bin_count))
    seen = np.zeros((ni, no, np_), dtype=bool)
    for r in range(len(rows)):
        idx = tuple(int(np.searchsorted(axes[c], angles[r, c])) for c in range(3))
        if seen[idx]:
            raise TableError(f"{path}:{rows[r][0]}: duplicate angle row {tuple(angles[r])}")
        seen[idx] = True
        values[idx] = np.interp(grid.wavelengths(), file_wl, samples[r])
    return TabulatedBrdf(axes[0], axes[1], axes[2], values, grid)
