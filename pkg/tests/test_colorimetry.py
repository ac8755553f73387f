"""Colorimetry oracle tests.

The reconstruction operator's expected values come from independent
integration of the raw CIE table inside the tests (rectangle rule on the
published 5 nm samples), never from the module under test.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectray import (
    CmfTable,
    ColorRGB,
    ColorXYZ,
    Spectrum,
    WavelengthGrid,
    clip_negative,
    fundamental,
    metameric_black,
    rgb_to_spectrum,
    rgb_to_xyz,
    spectrum_to_xyz,
    xyz_to_rgb,
)
from spectray import colorimetry
from spectray._cie_data import CIE_WAVELENGTHS_NM, CIE_XBAR, CIE_YBAR, CIE_ZBAR, D65_SPD

CMF = CmfTable.from_builtin()
CMF_D65 = CmfTable.from_builtin(illuminant="D65")

rgb_values = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
sample_lists = st.lists(
    st.floats(min_value=0.0, max_value=10.0, allow_nan=False), min_size=81, max_size=81
)


# -- spectrum_to_xyz ---------------------------------------------------------


def test_zero_spectrum_maps_to_zero():
    xyz = spectrum_to_xyz(Spectrum.zeros(), CMF)
    assert (xyz.x, xyz.y, xyz.z) == (0.0, 0.0, 0.0)


def test_equal_energy_chromaticity_vs_independent_integration():
    # Oracle: rectangle-rule sums over the raw published table.
    sx, sy, sz = CIE_XBAR.sum(), CIE_YBAR.sum(), CIE_ZBAR.sum()
    expect_x = sx / (sx + sy + sz)
    expect_y = sy / (sx + sy + sz)
    xyz = spectrum_to_xyz(Spectrum.constant(1.0), CMF)
    total = xyz.x + xyz.y + xyz.z
    assert xyz.x / total == pytest.approx(expect_x, abs=1e-12)
    assert xyz.y / total == pytest.approx(expect_y, abs=1e-12)
    # And the spec-level bound against the ideal point:
    assert abs(xyz.x / total - 1.0 / 3.0) < 1e-3
    assert abs(xyz.y / total - 1.0 / 3.0) < 1e-3
    assert xyz.y == pytest.approx(1.0, abs=1e-12)


def test_unit_spectrum_under_d65_table_hits_d65_white_point():
    # Perfect reflector under D65 must land on the D65 white point, which is
    # also what the sRGB matrix maps (1,1,1) to.
    xyz = spectrum_to_xyz(Spectrum.constant(1.0), CMF_D65)
    # Independent oracle: weighted sums of the raw tables.
    wx = (CIE_XBAR * D65_SPD).sum() / (CIE_YBAR * D65_SPD).sum()
    wz = (CIE_ZBAR * D65_SPD).sum() / (CIE_YBAR * D65_SPD).sum()
    assert xyz.x == pytest.approx(wx, abs=1e-12)
    assert xyz.y == pytest.approx(1.0, abs=1e-12)
    assert xyz.z == pytest.approx(wz, abs=1e-12)
    rgb = xyz_to_rgb(xyz)
    assert rgb.r == pytest.approx(1.0, abs=2e-3)
    assert rgb.g == pytest.approx(1.0, abs=2e-3)
    assert rgb.b == pytest.approx(1.0, abs=2e-3)


@given(sample_lists, sample_lists)
@settings(max_examples=30)
def test_xyz_linearity(xs, ys):
    a, b = Spectrum(xs), Spectrum(ys)
    xa = spectrum_to_xyz(a, CMF).as_array()
    xb = spectrum_to_xyz(b, CMF).as_array()
    xab = spectrum_to_xyz(a + b, CMF).as_array()
    np.testing.assert_allclose(xab, xa + xb, rtol=0.0, atol=1e-9)


def test_grid_mismatch_rejected():
    other = Spectrum.constant(1.0, WavelengthGrid(400.0, 700.0, 31))
    with pytest.raises(ValueError):
        spectrum_to_xyz(other, CMF)


# -- RGB <-> XYZ -------------------------------------------------------------


def test_rgb_xyz_matrices_mutually_inverse():
    m = colorimetry.RGB_TO_XYZ_MATRIX @ colorimetry.XYZ_TO_RGB_MATRIX
    np.testing.assert_allclose(m, np.eye(3), atol=1e-12)


def test_zero_color_round_trip():
    assert xyz_to_rgb(ColorXYZ(0, 0, 0)).as_array().tolist() == [0, 0, 0]
    assert rgb_to_xyz(ColorRGB(0, 0, 0)).as_array().tolist() == [0, 0, 0]


def test_d65_white_point_maps_to_rgb_white():
    rgb = xyz_to_rgb(ColorXYZ(0.9505, 1.0, 1.0890))
    assert abs(rgb.r - 1.0) < 1e-3
    assert abs(rgb.g - 1.0) < 1e-3
    assert abs(rgb.b - 1.0) < 1e-3


@given(rgb_values, rgb_values, rgb_values)
@settings(max_examples=50)
def test_rgb_round_trip_identity(r, g, b):
    back = xyz_to_rgb(rgb_to_xyz(ColorRGB(r, g, b)))
    np.testing.assert_allclose(back.as_array(), [r, g, b], atol=1e-12)


# -- reconstruction ----------------------------------------------------------


def test_black_rgb_gives_zero_spectrum():
    assert rgb_to_spectrum(ColorRGB(0, 0, 0), CMF).is_zero()


def test_reconstruction_round_trip_white():
    s = rgb_to_spectrum(ColorRGB(1, 1, 1), CMF)
    back = xyz_to_rgb(spectrum_to_xyz(s, CMF))
    np.testing.assert_allclose(back.as_array(), [1, 1, 1], atol=1e-6)


def test_reconstruction_round_trip_lattice():
    # The acceptance lattice, kept here at module granularity as well.
    values = np.linspace(0.0, 1.0, 10)
    worst = 0.0
    for r in values:
        for g in values:
            for b in values:
                s = rgb_to_spectrum(ColorRGB(r, g, b), CMF)
                back = xyz_to_rgb(spectrum_to_xyz(s, CMF)).as_array()
                worst = max(worst, np.abs(back - [r, g, b]).max())
    assert worst <= 1e-6


@given(rgb_values, rgb_values, rgb_values, st.floats(min_value=0.1, max_value=5.0))
@settings(max_examples=30)
def test_reconstruction_is_linear(r, g, b, k):
    s1 = rgb_to_spectrum(ColorRGB(r, g, b), CMF)
    s2 = rgb_to_spectrum(ColorRGB(k * r, k * g, k * b), CMF)
    np.testing.assert_allclose(s2.samples, k * s1.samples, rtol=1e-9, atol=1e-12)


def test_reconstruction_works_for_d65_weighted_table_too():
    # The projection must reproduce XYZ exactly for any reference illuminant.
    for r, g, b in [(1, 1, 1), (0.3, 0.6, 0.2), (0.9, 0.1, 0.4)]:
        s = rgb_to_spectrum(ColorRGB(r, g, b), CMF_D65)
        back = xyz_to_rgb(spectrum_to_xyz(s, CMF_D65)).as_array()
        np.testing.assert_allclose(back, [r, g, b], atol=1e-6)


# -- fundamental / metameric black -------------------------------------------


@given(sample_lists)
@settings(max_examples=40)
def test_decomposition_reconstructs_input(xs):
    s = Spectrum(xs)
    f = fundamental(s, CMF)
    k = metameric_black(s, CMF)
    np.testing.assert_allclose(f.samples + k.samples, s.samples, atol=1e-12)


@given(sample_lists)
@settings(max_examples=40)
def test_projection_idempotent(xs):
    s = Spectrum(xs)
    once = fundamental(s, CMF)
    twice = fundamental(once, CMF)
    assert np.abs(twice.samples - once.samples).max() <= 1e-12 * max(1.0, np.abs(once.samples).max())


@given(sample_lists)
@settings(max_examples=40)
def test_fundamental_orthogonal_to_black(xs):
    s = Spectrum(xs)
    f = fundamental(s, CMF).samples
    k = metameric_black(s, CMF).samples
    nf, nk = np.linalg.norm(f), np.linalg.norm(k)
    if nf > 1e-9 and nk > 1e-9:
        assert abs(float(f @ k)) <= 1e-9 * nf * nk


def test_metameric_black_has_no_color(rng):
    for _ in range(100):
        s = Spectrum(rng.uniform(0.0, 1.0, 81))
        norm = np.linalg.norm(s.samples)
        blk = metameric_black(s, CMF)
        xyz = spectrum_to_xyz(blk, CMF).as_array()
        assert np.abs(xyz).max() <= 1e-9 * max(norm, 1.0)


def test_black_of_fundamental_is_zero():
    s = rgb_to_spectrum(ColorRGB(0.4, 0.5, 0.6), CMF)
    blk = metameric_black(s, CMF)
    assert np.abs(blk.samples).max() <= 1e-12 * np.abs(s.samples).max()


# -- table construction ------------------------------------------------------


def test_resample_preserves_integrals_to_half_percent():
    coarse = CmfTable.from_builtin(WavelengthGrid(380.0, 780.0, 41))
    for j in range(3):
        ref = np.trapezoid([CIE_XBAR, CIE_YBAR, CIE_ZBAR][j], CIE_WAVELENGTHS_NM)
        got = np.trapezoid(coarse.cmf[:, j], coarse.grid.wavelengths())
        assert abs(got - ref) <= 0.005 * ref


def test_too_coarse_grid_rejected():
    with pytest.raises(ValueError, match="integral"):
        CmfTable.from_builtin(WavelengthGrid(380.0, 780.0, 5))


def test_unknown_illuminant_rejected():
    with pytest.raises(ValueError):
        CmfTable.from_builtin(illuminant="F11")


# -- negative clipping -------------------------------------------------------


def test_clip_negative_counts_and_preserves_positive():
    colorimetry.clip_stats.reset()
    s = Spectrum(np.linspace(-1.0, 1.0, 81))
    clipped, n = clip_negative(s)
    assert n == int((s.samples < 0).sum())
    assert clipped.samples.min() == 0.0
    np.testing.assert_array_equal(clipped.samples[s.samples >= 0], s.samples[s.samples >= 0])
    assert colorimetry.clip_stats.events == 1
    assert colorimetry.clip_stats.bins_total == n
    # a clean spectrum does not count
    _, n2 = clip_negative(Spectrum.constant(0.5))
    assert n2 == 0
    assert colorimetry.clip_stats.events == 1
