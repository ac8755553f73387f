#!/usr/bin/env python3
"""Write scenes/cornell_glass.scene and its glass-sphere sidecar mesh.

A closed 2x2x2 box (inward faces) with colored side walls, a glass sphere
on the floor, and a point light near the ceiling.  The box spans exactly
[-1,1]^3 so tests can check the loaded bounds against these coordinates.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from spectray.meshgen import box, icosphere

ROOT = pathlib.Path(__file__).resolve().parents[1]
SCENES = ROOT / "scenes"


def mesh_lines(verts, tris):
    out = [f"v = {x:.9g} {y:.9g} {z:.9g}" for x, y, z in verts]
    out += [f"tri = {a} {b} {c}" for a, b, c in tris]
    return out


def main() -> None:
    SCENES.mkdir(parents=True, exist_ok=True)

    sv, st = icosphere((0.0, -0.55, 0.0), 0.42, subdivisions=2)
    sphere = SCENES / "glass_sphere.mesh"
    sphere.write_text(
        "# icosphere, 2 subdivisions\n" + "\n".join(mesh_lines(sv, st)) + "\n"
    )

    bv, bt = box((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0), inward=True)
    scene = [
        "# Cornell-style box with a glass sphere",
        "",
        "[camera]",
        "position = 0 0 0.95",
        "target = 0 -0.15 0",
        "up = 0 1 0",
        "fov_deg = 75",
        "width = 128",
        "height = 128",
        "",
        "[render]",
        "max_bounces = 6",
        "threshold = 1e-4",
        "illuminant = E",
        "",
        "[material white]",
        "type = lambertian",
        "reflectance_rgb = 0.73 0.73 0.73",
        "",
        "[material glass]",
        "type = dielectric",
        "ior_file = ../data/bk7.ior",
        "",
        "[light ceiling]",
        "type = point",
        "position = 0 0.85 0",
        "emission = 1.0",
        "",
        "[mesh walls]",
        "material = white",
    ]
    scene += mesh_lines(bv, bt)
    scene += [
        "",
        "[mesh sphere]",
        "material = glass",
        "file = glass_sphere.mesh",
        "",
    ]
    out = SCENES / "cornell_glass.scene"
    out.write_text("\n".join(scene))
    print(f"wrote {out} and {sphere} ({len(st)} sphere triangles)")


if __name__ == "__main__":
    main()
