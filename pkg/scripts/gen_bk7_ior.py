#!/usr/bin/env python3
"""Write data/bk7.ior from the three-term Sellmeier fit for N-BK7.

The file route and the built-in Sellmeier evaluation are kept as two
independent paths on purpose; the test suite cross-checks them.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import numpy as np

from spectray.optics import BK7_SELLMEIER_B, BK7_SELLMEIER_C

OUT = pathlib.Path(__file__).resolve().parents[1] / "data" / "bk7.ior"


def main() -> None:
    wl_nm = np.arange(380.0, 781.0, 5.0)
    lam2 = (wl_nm * 1e-3) ** 2  # Sellmeier wants micrometers squared
    n2 = 1.0 + sum(
        b * lam2 / (lam2 - c) for b, c in zip(BK7_SELLMEIER_B, BK7_SELLMEIER_C)
    )
    n = np.sqrt(n2)
    lines = ["# N-BK7 refractive index, Sellmeier fit", "# wavelength_nm n k"]
    lines += [f"{wl:.1f} {ni:.8f} 0.0" for wl, ni in zip(wl_nm, n)]
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("\n".join(lines) + "\n")
    print(f"wrote {OUT} ({len(wl_nm)} rows)")


if __name__ == "__main__":
    main()
