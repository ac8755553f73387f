"""Scene file loading.

The format is line-oriented key-value text in sections:

    [camera]            one required
    [render]            optional, termination + illuminant settings
    [material NAME]     lambertian | dielectric | tabulated
    [light NAME]        point | directional
    [mesh NAME]         inline v/tri lists, or file = sidecar path

'#' starts a comment, keys repeat only where list-like (v, tri), and all
file paths resolve relative to the scene file.  A sidecar mesh file holds
bare v/tri lines in the same syntax.  The full grammar with examples lives
in docs/scene_format.md.

Errors are collected exhaustively: one pass reports every malformed line,
dangling material reference, and failed table load with its path:line
position, instead of stopping at the first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .colorimetry import CmfTable, ColorRGB, clip_negative, rgb_to_spectrum
from .optics import ComplexIor, FresnelDielectric, Lambertian, Material
from .render_local import RenderSettings
from .scene import Camera, DirectionalLight, Light, Mesh, PointLight, Scene, SceneError
from .spectra import DEFAULT_GRID, Spectrum, WavelengthGrid
from .tables import TableError, load_brdf_table, load_ior_table, load_spectrum

SECTION_KINDS = ("camera", "render", "material", "light", "mesh")


@dataclass
class _Section:
    kind: str
    name: str
    lineno: int
    entries: list[tuple[int, str, str]] = field(default_factory=list)

    def get(self, key: str) -> Optional[tuple[int, str]]:
        found = [(ln, v) for ln, k, v in self.entries if k == key]
        return found[-1] if found else None

    def get_all(self, key: str) -> list[tuple[int, str]]:
        return [(ln, v) for ln, k, v in self.entries if k == key]


class _Loader:
    def __init__(self, path: Path, grid: WavelengthGrid):
        self.path = path
        self.base = path.parent
        self.grid = grid
        self.errors: list[str] = []
        self.warnings: list[str] = []
        self.illuminant = "E"
        self._cmf: Optional[CmfTable] = None

    def fail(self, lineno: int, message: str, path: Optional[Path] = None) -> None:
        label = path or self.path
        where = f"{label}:{lineno}" if lineno else str(label)
        self.errors.append(f"{where}: {message}")

    @property
    def cmf(self) -> CmfTable:
        if self._cmf is None:
            self._cmf = CmfTable.from_builtin(self.grid, illuminant=self.illuminant)
        return self._cmf

    # -- low-level parsing ---------------------------------------------------

    def split_sections(self, text: str) -> list[_Section]:
        sections: list[_Section] = []
        current: Optional[_Section] = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("["):
                if not line.endswith("]"):
                    self.fail(lineno, f"unterminated section header {line!r}")
                    current = None
                    continue
                parts = line[1:-1].split()
                if not parts or parts[0] not in SECTION_KINDS:
                    self.fail(lineno, f"unknown section {line!r}; expected one of {SECTION_KINDS}")
                    current = None
                    continue
                kind = parts[0]
                name = " ".join(parts[1:])
                if kind in ("material", "mesh") and not name:
                    self.fail(lineno, f"[{kind}] section needs a name")
                current = _Section(kind, name, lineno)
                sections.append(current)
                continue
            if "=" not in line:
                self.fail(lineno, f"expected 'key = value', got {line!r}")
                continue
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not key or not value:
                self.fail(lineno, f"expected 'key = value', got {line!r}")
                continue
            if current is None:
                self.fail(lineno, f"{key!r} appears before any section header")
                continue
            current.entries.append((lineno, key, value))
        return sections

    def floats(
        self, lineno: int, value: str, count: int, key: str, path: Optional[Path] = None
    ) -> Optional[np.ndarray]:
        parts = value.split()
        try:
            numbers = np.array([float(p) for p in parts])
        except ValueError:
            self.fail(lineno, f"{key}: non-numeric value {value!r}", path=path)
            return None
        if len(numbers) != count:
            self.fail(lineno, f"{key}: expected {count} numbers, got {len(numbers)}", path=path)
            return None
        if not np.all(np.isfinite(numbers)):
            self.fail(lineno, f"{key}: non-finite value", path=path)
            return None
        return numbers

    def integer(self, lineno: int, value: str, key: str) -> Optional[int]:
        try:
            return int(value)
        except ValueError:
            self.fail(lineno, f"{key}: expected an integer, got {value!r}")
            return None

    def require(self, section: _Section, key: str) -> Optional[tuple[int, str]]:
        got = section.get(key)
        if got is None:
            self.fail(section.lineno, f"[{section.kind} {section.name}]".strip() + f" is missing {key!r}")
        return got

    def resolve(self, value: str) -> Path:
        return self.base / value

    def check_known_keys(self, section: _Section, known: set[str]) -> None:
        for lineno, key, _ in section.entries:
            if key not in known:
                self.fail(lineno, f"unknown key {key!r} in [{section.kind}]")

    # -- spectra from section values -----------------------------------------

    def spectrum_value(
        self, section: _Section, stem: str, upper: Optional[float]
    ) -> Optional[Spectrum]:
        """Resolve one of '<stem>', '<stem>_rgb', '<stem>_file' to a Spectrum.

        RGB values go through the tristimulus reconstruction and are clipped
        to the physical range afterwards (reconstruction can ring below zero).
        """
        picks = [k for k in (stem, stem + "_rgb", stem + "_file") if section.get(k)]
        if len(picks) != 1:
            self.fail(
                section.lineno,
                f"[{section.kind} {section.name}]".strip()
                + f" needs exactly one of {stem}/{stem}_rgb/{stem}_file, got {picks or 'none'}",
            )
            return None
        key = picks[0]
        lineno, value = section.get(key)
        if key == stem:
            scalar = self.floats(lineno, value, 1, key)
            if scalar is None:
                return None
            if scalar[0] < 0.0 or (upper is not None and scalar[0] > upper):
                self.fail(lineno, f"{key}: value {scalar[0]} out of range")
                return None
            return Spectrum.constant(float(scalar[0]), self.grid)
        if key == stem + "_rgb":
            rgb = self.floats(lineno, value, 3, key)
            if rgb is None:
                return None
            if np.any(rgb < 0.0):
                self.fail(lineno, f"{key}: negative component")
                return None
            try:
                s = rgb_to_spectrum(ColorRGB(*rgb), self.cmf)
            except ValueError as exc:
                self.fail(lineno, f"{key}: {exc}")
                return None
            s, _ = clip_negative(s)
            if upper is not None:
                s = Spectrum(np.minimum(s.samples, upper), self.grid)
            return s
        try:
            s = load_spectrum(self.resolve(value), self.grid)
        except TableError as exc:
            self.fail(lineno, str(exc))
            return None
        if np.any(s.samples < 0.0) or (upper is not None and np.any(s.samples > upper)):
            self.fail(lineno, f"{key}: values in {value!r} out of range")
            return None
        return s

    # -- section interpreters ------------------------------------------------

    def camera(self, section: _Section) -> Optional[Camera]:
        self.check_known_keys(
            section, {"position", "target", "up", "fov_deg", "width", "height"}
        )
        position = target = None
        up = np.array([0.0, 1.0, 0.0])
        fov_deg, width, height = 60.0, 128, 128
        if got := self.require(section, "position"):
            position = self.floats(*got, 3, "position")
        if got := self.require(section, "target"):
            target = self.floats(*got, 3, "target")
        if got := section.get("up"):
            up = self.floats(*got, 3, "up")
        if got := section.get("fov_deg"):
            v = self.floats(*got, 1, "fov_deg")
            fov_deg = float(v[0]) if v is not None else None
        if got := section.get("width"):
            width = self.integer(*got, "width")
        if got := section.get("height"):
            height = self.integer(*got, "height")
        if any(v is None for v in (position, target, up, fov_deg, width, height)):
            return None
        try:
            return Camera.look_at(
                position, target, up_hint=up, width=width, height=height,
                fov=np.radians(fov_deg),
            )
        except ValueError as exc:
            self.fail(section.lineno, f"camera: {exc}")
            return None

    def render_settings(self, section: _Section) -> Optional[RenderSettings]:
        self.check_known_keys(
            section, {"max_bounces", "threshold", "shadow_epsilon", "illuminant"}
        )
        kwargs = {}
        if got := section.get("max_bounces"):
            v = self.integer(*got, "max_bounces")
            if v is not None:
                kwargs["max_bounces"] = v
        if got := section.get("threshold"):
            v = self.floats(*got, 1, "threshold")
            if v is not None:
                kwargs["throughput_threshold"] = float(v[0])
        if got := section.get("shadow_epsilon"):
            v = self.floats(*got, 1, "shadow_epsilon")
            if v is not None:
                kwargs["shadow_epsilon"] = float(v[0])
        if got := section.get("illuminant"):
            lineno, value = got
            if value not in ("E", "D65"):
                self.fail(lineno, f"illuminant must be E or D65, got {value!r}")
            else:
                self.illuminant = value
        try:
            return RenderSettings(**kwargs)
        except ValueError as exc:
            self.fail(section.lineno, f"render settings: {exc}")
            return None

    def material(self, section: _Section) -> Optional[Material]:
        got = self.require(section, "type")
        if got is None:
            return None
        lineno, mtype = got
        if mtype == "lambertian":
            self.check_known_keys(
                section, {"type", "reflectance", "reflectance_rgb", "reflectance_file"}
            )
            s = self.spectrum_value(section, "reflectance", upper=1.0)
            return Lambertian(s) if s is not None else None
        if mtype == "dielectric":
            self.check_known_keys(section, {"type", "ior", "ior_file", "exterior_ior"})
            ior = self._ior_value(section, "ior", required=True)
            exterior = ComplexIor.vacuum(self.grid)
            if section.get("exterior_ior"):
                exterior = self._ior_value(section, "exterior_ior", required=False) or exterior
            if ior is None:
                return None
            return FresnelDielectric(ior, exterior)
        if mtype == "tabulated":
            self.check_known_keys(section, {"type", "brdf_file"})
            got = self.require(section, "brdf_file")
            if got is None:
                return None
            lineno, value = got
            try:
                return load_brdf_table(self.resolve(value), self.grid)
            except (TableError, ValueError) as exc:
                self.fail(lineno, str(exc))
                return None
        self.fail(lineno, f"unknown material type {mtype!r}")
        return None

    def _ior_value(self, section: _Section, key: str, required: bool) -> Optional[ComplexIor]:
        inline, from_file = section.get(key), section.get(key + "_file")
        if inline and from_file:
            self.fail(section.lineno, f"give {key} or {key}_file, not both")
            return None
        if inline:
            lineno, value = inline
            parts = value.split()
            nums = self.floats(lineno, value, len(parts) if len(parts) in (1, 2) else 2, key)
            if nums is None:
                return None
            n = float(nums[0])
            k = float(nums[1]) if len(nums) == 2 else 0.0
            try:
                return ComplexIor.constant(n, k, self.grid)
            except ValueError as exc:
                self.fail(lineno, f"{key}: {exc}")
                return None
        if from_file:
            lineno, value = from_file
            try:
                n, k = load_ior_table(self.resolve(value), self.grid)
            except TableError as exc:
                self.fail(lineno, str(exc))
                return None
            return ComplexIor(n, k)
        if required:
            self.fail(section.lineno, f"dielectric needs {key} or {key}_file")
        return None

    def light(self, section: _Section) -> Optional[Light]:
        got = self.require(section, "type")
        if got is None:
            return None
        lineno, ltype = got
        common = {"type", "emission", "emission_rgb", "emission_file", "scale"}
        emission = self.spectrum_value(section, "emission", upper=None)
        if got := section.get("scale"):
            v = self.floats(*got, 1, "scale")
            if v is not None and emission is not None:
                if v[0] < 0.0:
                    self.fail(got[0], f"scale: must be non-negative, got {v[0]}")
                else:
                    emission = emission * float(v[0])
        if ltype == "point":
            self.check_known_keys(section, common | {"position"})
            got = self.require(section, "position")
            position = self.floats(*got, 3, "position") if got else None
            if position is None or emission is None:
                return None
            return PointLight(position, emission)
        if ltype == "directional":
            self.check_known_keys(section, common | {"direction"})
            got = self.require(section, "direction")
            direction = self.floats(*got, 3, "direction") if got else None
            if direction is None or emission is None:
                return None
            try:
                return DirectionalLight(direction, emission)
            except ValueError as exc:
                self.fail(got[0], f"direction: {exc}")
                return None
        self.fail(lineno, f"unknown light type {ltype!r}")
        return None

    def mesh(self, section: _Section) -> Optional[Mesh]:
        self.check_known_keys(section, {"material", "v", "tri", "file"})
        got = self.require(section, "material")
        material = got[1] if got else None
        sidecar = section.get("file")
        # rows carry their source file so errors point into the sidecar
        v_rows = [(None, ln, val) for ln, val in section.get_all("v")]
        t_rows = [(None, ln, val) for ln, val in section.get_all("tri")]
        if sidecar and (v_rows or t_rows):
            self.fail(section.lineno, "mesh has both inline v/tri lines and a sidecar file")
            return None
        if sidecar:
            lineno, value = sidecar
            path = self.resolve(value)
            try:
                text = path.read_text()
            except OSError as exc:
                self.fail(lineno, f"{path}: {exc.strerror or exc}")
                return None
            for ln, raw in enumerate(text.splitlines(), start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                key, _, val = line.partition("=")
                key, val = key.strip(), val.strip()
                if key == "v" and val:
                    v_rows.append((path, ln, val))
                elif key == "tri" and val:
                    t_rows.append((path, ln, val))
                else:
                    self.fail(ln, f"expected 'v = ...' or 'tri = ...', got {line!r}", path=path)
                    return None
        vertices, triangles = [], []
        ok = True
        for src, lineno, value in v_rows:
            v = self.floats(lineno, value, 3, "v", path=src)
            if v is None:
                ok = False
            else:
                vertices.append(v)
        for src, lineno, value in t_rows:
            t = self.floats(lineno, value, 3, "tri", path=src)
            if t is None:
                ok = False
            elif not np.all(t == np.floor(t)):
                self.fail(lineno, f"tri: expected integer vertex indices, got {value!r}", path=src)
                ok = False
            else:
                triangles.append(t.astype(np.int64))
        if not triangles or not vertices:
            self.fail(section.lineno, f"mesh {section.name!r} has no geometry")
            ok = False
        if not ok or material is None:
            return None
        try:
            return Mesh(
                np.array(vertices), np.array(triangles), material=material, name=section.name
            )
        except ValueError as exc:
            self.fail(section.lineno, f"mesh {section.name!r}: {exc}")
            return None

    # -- top level -----------------------------------------------------------

    def load(self) -> Scene:
        try:
            text = self.path.read_text()
        except OSError as exc:
            raise SceneError([f"{self.path}: {exc.strerror or exc}"]) from exc
        sections = self.split_sections(text)

        cameras = [s for s in sections if s.kind == "camera"]
        renders = [s for s in sections if s.kind == "render"]
        if len(cameras) != 1:
            self.fail(0, f"scene needs exactly one [camera] section, found {len(cameras)}")
        if len(renders) > 1:
            self.fail(renders[1].lineno, "more than one [render] section")

        # [render] first: it fixes the illuminant used by rgb reconstruction.
        settings = self.render_settings(renders[0]) if renders else RenderSettings()

        materials: dict[str, Material] = {}
        for s in sections:
            if s.kind != "material" or not s.name:
                continue
            if s.name in materials:
                self.fail(s.lineno, f"duplicate material {s.name!r}")
                continue
            m = self.material(s)
            if m is not None:
                materials[s.name] = m

        lights = [m for s in sections if s.kind == "light" if (m := self.light(s))]
        meshes = [m for s in sections if s.kind == "mesh" and s.name if (m := self.mesh(s))]

        for s in sections:
            if s.kind == "mesh" and s.name:
                ref = s.get("material")
                if ref and ref[1] not in materials:
                    self.fail(ref[0], f"mesh {s.name!r} references unknown material {ref[1]!r}")

        camera = self.camera(cameras[0]) if len(cameras) == 1 else None
        if self.errors:
            raise SceneError(self.errors)
        assert camera is not None
        return Scene(
            meshes, materials, lights, camera,
            grid=self.grid, settings=settings, warnings=self.warnings,
            illuminant=self.illuminant,
        )


def load_scene(path: str | Path, grid: WavelengthGrid = DEFAULT_GRID) -> Scene:
    """Parse and validate a scene file; raises SceneError listing every
    problem found rather than the first one."""
    return _Loader(Path(path), grid).load()
