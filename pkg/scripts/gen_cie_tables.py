#!/usr/bin/env python3
"""Dump the embedded colorimetry tables to data/ as plain text.

Gives the file-loading route (CmfTable.from_table) a fixture that must agree
with the built-in arrays bit for bit after resampling.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from spectray._cie_data import (
    CIE_WAVELENGTHS_NM,
    CIE_XBAR,
    CIE_YBAR,
    CIE_ZBAR,
    D65_SPD,
)

DATA = pathlib.Path(__file__).resolve().parents[1] / "data"


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    cmf = DATA / "cie_xyz_5nm.txt"
    rows = ["# CIE 1931 2-degree color matching functions, 5 nm", "# wavelength_nm xbar ybar zbar"]
    for wl, x, y, z in zip(CIE_WAVELENGTHS_NM, CIE_XBAR, CIE_YBAR, CIE_ZBAR):
        rows.append(f"{wl:.1f} {x:.6f} {y:.6f} {z:.6f}")
    cmf.write_text("\n".join(rows) + "\n")

    d65 = DATA / "illum_d65.txt"
    rows = ["# CIE standard illuminant D65, relative SPD (100 at 560 nm)", "# wavelength_nm value"]
    for wl, v in zip(CIE_WAVELENGTHS_NM, D65_SPD):
        rows.append(f"{wl:.1f} {v:.4f}")
    d65.write_text("\n".join(rows) + "\n")
    print(f"wrote {cmf} and {d65}")


if __name__ == "__main__":
    main()
