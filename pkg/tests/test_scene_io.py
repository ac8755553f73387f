"""Scene file parser tests: happy paths, the shipped scenes, and the
exhaustive error listing."""

from pathlib import Path

import numpy as np
import pytest

from spectray import FresnelDielectric, Lambertian, PointLight, SceneError, load_scene
from spectray.optics import TabulatedBrdf
from spectray.scene import DirectionalLight

ROOT = Path(__file__).resolve().parents[1]

MINIMAL = """
[camera]
position = 0 0 5
target = 0 0 0

[material m]
type = lambertian
reflectance = 0.5

[light l]
type = point
position = 0 0 3
emission = 1.0

[mesh tri]
material = m
v = -1 -1 0
v = 1 -1 0
v = 0 1 0
tri = 0 1 2
"""


def write(tmp_path, text, name="scene.scene"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_scene_counts(tmp_path):
    scene = load_scene(write(tmp_path, MINIMAL))
    assert scene.triangle_count == 1
    assert len(scene.lights) == 1
    assert len(scene.materials) == 1
    assert isinstance(scene.lights[0], PointLight)
    assert scene.camera.width == 128  # defaults apply
    assert scene.illuminant == "E"


def test_load_is_deterministic(tmp_path):
    p = write(tmp_path, MINIMAL)
    a, b = load_scene(p), load_scene(p)
    assert a.soup.v0.tobytes() == b.soup.v0.tobytes()
    assert a.camera.fov == b.camera.fov
    assert a.lights[0].emission == b.lights[0].emission


def test_demo_room_scene_loads():
    scene = load_scene(ROOT / "scenes" / "demo_room.scene")
    assert scene.triangle_count == 16
    kinds = {n: type(m).__name__ for n, m in scene.materials.items()}
    assert kinds == {
        "plaster": "Lambertian",
        "brick": "Lambertian",
        "pane": "FresnelDielectric",
    }
    assert len(scene.lights) == 2
    assert scene.settings.max_bounces == 5
    # rgb-reconstructed reflectance stays physical
    for m in scene.materials.values():
        if isinstance(m, Lambertian):
            assert np.all(m.reflectance.samples >= 0.0)
            assert np.all(m.reflectance.samples <= 1.0)


def test_cornell_scene_bounds_match_declared_box():
    scene = load_scene(ROOT / "scenes" / "cornell_glass.scene")
    np.testing.assert_allclose(scene.bounds.lo, [-1.0, -1.0, -1.0], atol=1e-6)
    np.testing.assert_allclose(scene.bounds.hi, [1.0, 1.0, 1.0], atol=1e-6)
    glass = scene.materials["glass"]
    assert isinstance(glass, FresnelDielectric)
    # BK7 loaded from the sidecar table matches the analytic fit
    assert glass.ior.n_at(589.0) == pytest.approx(1.5168, abs=2e-4)


def test_sidecar_mesh_equals_inline(tmp_path):
    (tmp_path / "tri.mesh").write_text("v = -1 -1 0\nv = 1 -1 0\nv = 0 1 0\ntri = 0 1 2\n")
    sidecar = MINIMAL.replace(
        "v = -1 -1 0\nv = 1 -1 0\nv = 0 1 0\ntri = 0 1 2", "file = tri.mesh"
    )
    a = load_scene(write(tmp_path, MINIMAL, "a.scene"))
    b = load_scene(write(tmp_path, sidecar, "b.scene"))
    assert a.soup.v0.tobytes() == b.soup.v0.tobytes()


def test_directional_light_and_scale(tmp_path):
    text = MINIMAL.replace(
        "type = point\nposition = 0 0 3\nemission = 1.0",
        "type = directional\ndirection = 0 0 -1\nemission = 0.5\nscale = 2.0",
    )
    scene = load_scene(write(tmp_path, text))
    light = scene.lights[0]
    assert isinstance(light, DirectionalLight)
    assert np.all(light.emission.samples == 1.0)


def test_tabulated_material(tmp_path):
    rows = ["2 2 2 3 380 780"]
    for ti in (0.0, 90.0):
        for to in (0.0, 90.0):
            for dp in (0.0, 180.0):
                rows.append(f"{ti} {to} {dp} 0.1 0.1 0.1")
    (tmp_path / "m.brdf").write_text("\n".join(rows) + "\n")
    text = MINIMAL.replace(
        "type = lambertian\nreflectance = 0.5", "type = tabulated\nbrdf_file = m.brdf"
    )
    scene = load_scene(write(tmp_path, text))
    assert isinstance(scene.materials["m"], TabulatedBrdf)
    np.testing.assert_allclose(scene.materials["m"].values, 0.1)


def test_illuminant_affects_reconstruction(tmp_path):
    base = MINIMAL.replace("reflectance = 0.5", "reflectance_rgb = 0.3 0.5 0.7")
    with_d65 = "[render]\nilluminant = D65\n" + base
    a = load_scene(write(tmp_path, base, "a.scene"))
    b = load_scene(write(tmp_path, with_d65, "b.scene"))
    assert b.illuminant == "D65"
    sa = a.materials["m"].reflectance.samples
    sb = b.materials["m"].reflectance.samples
    assert np.abs(sa - sb).max() > 1e-6


# -- error reporting ---------------------------------------------------------


def test_missing_file():
    with pytest.raises(SceneError, match="nope.scene"):
        load_scene("/definitely/missing/nope.scene")


def test_missing_camera(tmp_path):
    text = MINIMAL.replace("[camera]\nposition = 0 0 5\ntarget = 0 0 0", "")
    with pytest.raises(SceneError, match="exactly one"):
        load_scene(write(tmp_path, text))


def test_missing_ior_table_names_path(tmp_path):
    text = MINIMAL.replace(
        "type = lambertian\nreflectance = 0.5", "type = dielectric\nior_file = gone.ior"
    )
    with pytest.raises(SceneError, match="gone.ior"):
        load_scene(write(tmp_path, text))


def test_errors_are_exhaustive(tmp_path):
    text = """
[camera]
position = 0 0 five
target = 0 0 0

[material m]
type = lambertian
reflectance = 1.7

[light l]
type = point
position = 0 0
emission = 1.0

[mesh t]
material = ghost
v = 0 0 0
v = 1 0 0
v = 0 1 0
tri = 0 1 2
"""
    with pytest.raises(SceneError) as exc:
        load_scene(write(tmp_path, text))
    msgs = exc.value.errors
    joined = "\n".join(msgs)
    assert len(msgs) >= 4
    assert "position: non-numeric" in joined
    assert "out of range" in joined
    assert "expected 3 numbers" in joined
    assert "ghost" in joined
    # every message carries file:line position
    assert all(".scene:" in m or str(tmp_path) in m for m in msgs)


def test_line_numbers_in_messages(tmp_path):
    text = "[camera]\nposition = 0 0 5\ntarget = 0 0 0\nbogus line\n"
    with pytest.raises(SceneError) as exc:
        load_scene(write(tmp_path, text))
    assert any(":4:" in m for m in exc.value.errors)


def test_unknown_section_and_key(tmp_path):
    text = MINIMAL + "\n[teapot]\nspout = 1\n"
    with pytest.raises(SceneError, match="unknown section"):
        load_scene(write(tmp_path, text))
    text2 = MINIMAL.replace("reflectance = 0.5", "reflectance = 0.5\nshiny = yes")
    with pytest.raises(SceneError, match="unknown key"):
        load_scene(write(tmp_path, text2))


def test_duplicate_material_rejected(tmp_path):
    text = MINIMAL + "\n[material m]\ntype = lambertian\nreflectance = 0.1\n"
    with pytest.raises(SceneError, match="duplicate material"):
        load_scene(write(tmp_path, text))


def test_conflicting_reflectance_keys(tmp_path):
    text = MINIMAL.replace(
        "reflectance = 0.5", "reflectance = 0.5\nreflectance_rgb = 1 0 0"
    )
    with pytest.raises(SceneError, match="exactly one of"):
        load_scene(write(tmp_path, text))


def test_mesh_without_geometry(tmp_path):
    text = MINIMAL.replace(
        "v = -1 -1 0\nv = 1 -1 0\nv = 0 1 0\ntri = 0 1 2", "v = 0 0 0"
    )
    with pytest.raises(SceneError, match="no geometry"):
        load_scene(write(tmp_path, text))


def test_sidecar_error_names_sidecar_file(tmp_path):
    (tmp_path / "bad.mesh").write_text("v = 0 0 0\nv = 1 0 0\nv = 0 1 0\ntri = 0 1 x\n")
    text = MINIMAL.replace(
        "v = -1 -1 0\nv = 1 -1 0\nv = 0 1 0\ntri = 0 1 2", "file = bad.mesh"
    )
    with pytest.raises(SceneError, match="bad.mesh"):
        load_scene(write(tmp_path, text))


def test_bad_fov_rejected(tmp_path):
    text = MINIMAL.replace("target = 0 0 0", "target = 0 0 0\nfov_deg = 200")
    with pytest.raises(SceneError, match="fov"):
        load_scene(write(tmp_path, text))
