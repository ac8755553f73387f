"""Photon storage with a kd-tree k-nearest service and a binary dump format.

The kd-tree (scipy cKDTree) is an infrastructure buy; ``k_nearest_brute``
stays as the independent reference the tests compare against.

Dump format (little-endian): magic b"SPM1", u32 version, u8 flag length +
ascii flag, u64 count, grid descriptor (f64 start_nm, f64 end_nm, u32 bins),
then per photon: 3*f64 position, 3*f64 direction, bins*f64 power.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .spectra import Spectrum, WavelengthGrid

MAGIC = b"SPM1"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Photon:
    """One stored packet: where it landed, how it arrived, what it carried."""

    position: np.ndarray
    direction: np.ndarray   # direction of travel at the deposit
    power: Spectrum         # W per nm


class PhotonMap:
    """Immutable bag of photons with k-nearest queries.

    ``flag`` names the map's role (global / caustic / direct); it travels
    with dumps so a restored map cannot be mistaken for another kind.
    """

    def __init__(
        self,
        positions: np.ndarray,
        directions: np.ndarray,
        powers: np.ndarray,
        grid: WavelengthGrid,
        flag: str,
    ) -> None:
        positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        directions = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
        powers = np.asarray(powers, dtype=np.float64).reshape(-1, grid.bin_count)
        if not (len(positions) == len(directions) == len(powers)):
            raise ValueError("photon array lengths disagree")
        if np.any(powers < 0.0):
            raise ValueError("photon power must be non-negative")
        for arr in (positions, directions, powers):
            arr.setflags(write=False)
        self.positions = positions
        self.directions = directions
        self.powers = powers
        self.grid = grid
        self.flag = flag
        self._tree = cKDTree(positions) if len(positions) else None

    @property
    def count(self) -> int:
        return len(self.positions)

    def photon(self, i: int) -> Photon:
        return Photon(self.positions[i], self.directions[i], Spectrum(self.powers[i], self.grid))

    def total_power(self) -> np.ndarray:
        return self.powers.sum(axis=0) if self.count else np.zeros(self.grid.bin_count)

    def k_nearest(self, point: np.ndarray, k: int, max_radius: float) -> tuple[np.ndarray, np.ndarray]:
        """(distances, indices) of up to k photons within max_radius, nearest
        first.  Fewer than k rows come back when the radius runs dry."""
        if self._tree is None or k < 1:
            return np.empty(0), np.empty(0, dtype=np.intp)
        d, i = self._tree.query(point, k=k, distance_upper_bound=max_radius)
        d, i = np.atleast_1d(d), np.atleast_1d(i)
        hit = np.isfinite(d)
        return d[hit], i[hit]

    def k_nearest_brute(self, point: np.ndarray, k: int, max_radius: float) -> tuple[np.ndarray, np.ndarray]:
        """Linear-scan reference for the kd-tree query."""
        if self.count == 0 or k < 1:
            return np.empty(0), np.empty(0, dtype=np.intp)
        d = np.sqrt(((self.positions - point) ** 2).sum(axis=1))
        order = np.argsort(d, kind="stable")
        order = order[d[order] <= max_radius][:k]
        return d[order], order

    # -- serialization -------------------------------------------------------

    def dump(self, path: str | Path) -> None:
        flag_bytes = self.flag.encode("ascii")
        header = MAGIC + struct.pack(
            "<IB", FORMAT_VERSION, len(flag_bytes)
        ) + flag_bytes + struct.pack(
            "<QddI", self.count, self.grid.start_nm, self.grid.end_nm, self.grid.bin_count
        )
        records = np.concatenate(
            [self.positions, self.directions, self.powers], axis=1
        ).astype("<f8") if self.count else np.empty((0, 6 + self.grid.bin_count))
        Path(path).write_bytes(header + records.tobytes())

    @classmethod
    def restore(cls, path: str | Path) -> "PhotonMap":
        blob = Path(path).read_bytes()
        if blob[:4] != MAGIC:
            raise ValueError(f"{path}: not a photon map (bad magic)")
        version, flag_len = struct.unpack_from("<IB", blob, 4)
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        offset = 9
        flag = blob[offset : offset + flag_len].decode("ascii")
        offset += flag_len
        count, start_nm, end_nm, bins = struct.unpack_from("<QddI", blob, offset)
        offset += struct.calcsize("<QddI")
        grid = WavelengthGrid(start_nm, end_nm, bins)
        width = 6 + bins
        expected = count * width * 8
        if len(blob) - offset != expected:
            raise ValueError(f"{path}: truncated records ({len(blob) - offset} of {expected} bytes)")
        records = np.frombuffer(blob, dtype="<f8", offset=offset).reshape(count, width)
        return cls(records[:, :3], records[:, 3:6], records[:, 6:], grid, flag)
