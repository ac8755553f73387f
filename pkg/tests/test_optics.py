"""Fresnel and material tests against closed-form oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectray import (
    ComplexIor,
    Directions,
    FresnelDielectric,
    Lambertian,
    Spectrum,
    TabulatedBrdf,
    eval_brdf,
    fresnel,
    kappa,
    reflect,
    refract,
)
from spectray.optics import fresnel_amplitudes
from spectray.spectra import DEFAULT_GRID

from helpers import random_unit

VACUUM = ComplexIor.vacuum()


# -- complex IOR -------------------------------------------------------------


def test_kappa_is_k_over_n():
    assert kappa(ComplexIor.constant(1.5, 0.3)).samples[0] == pytest.approx(0.2)
    assert kappa(ComplexIor.constant(2.0, 1.0)).samples[0] == pytest.approx(0.5)
    assert kappa(ComplexIor.constant(1.5, 0.0)).is_zero()


def test_ior_validation():
    with pytest.raises(ValueError):
        ComplexIor.constant(0.0, 0.0)
    with pytest.raises(ValueError):
        ComplexIor.constant(1.5, -0.1)


def test_bk7_sellmeier_reference_values():
    # Datasheet checkpoints for the three-term Sellmeier fit.
    bk7 = ComplexIor.bk7()
    assert bk7.n_at(589.0) == pytest.approx(1.5168, abs=2e-4)
    assert bk7.n_at(480.0) == pytest.approx(1.5224, abs=5e-4)
    assert bk7.n_at(780.0) == pytest.approx(1.5112, abs=5e-4)
    assert bk7.is_lossless
    # normal dispersion: n decreases with wavelength
    assert np.all(np.diff(bk7.n.samples) < 0.0)


# -- fresnel -----------------------------------------------------------------


def test_normal_incidence_reflectance_closed_form():
    R, T = fresnel(1.0, VACUUM, ComplexIor.constant(1.5))
    expect = ((1.5 - 1.0) / (1.5 + 1.0)) ** 2
    assert np.abs(R.samples - expect).max() <= 1e-12
    assert np.abs(R.samples + T.samples - 1.0).max() == 0.0


def test_total_internal_reflection_is_exactly_one():
    # from glass (1.5) to vacuum beyond the critical angle asin(1/1.5)
    critical = math.asin(1.0 / 1.5)
    cos_i = math.cos(critical + 0.05)
    R, T = fresnel(cos_i, ComplexIor.constant(1.5), VACUUM)
    assert np.all(R.samples == 1.0)
    assert np.all(T.samples == 0.0)


def test_brewster_angle_kills_p_polarization():
    theta_b = math.atan(1.5)
    rs, rp = fresnel_amplitudes(math.cos(theta_b), VACUUM, ComplexIor.constant(1.5))
    assert np.max(np.abs(rp) ** 2) <= 1e-9
    assert np.min(np.abs(rs) ** 2) > 0.0


@given(
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=1.0, max_value=2.5),
    st.floats(min_value=1.0, max_value=2.5),
)
@settings(max_examples=200)
def test_lossless_energy_conservation(cos_i, n1, n2):
    R, T = fresnel(cos_i, ComplexIor.constant(n1), ComplexIor.constant(n2))
    assert np.abs(R.samples + T.samples - 1.0).max() <= 1e-9
    assert np.all(R.samples >= 0.0) and np.all(R.samples <= 1.0)


def test_reflectance_monotone_past_brewster():
    glass = ComplexIor.constant(1.5)
    theta_b = math.atan(1.5)
    thetas = np.linspace(theta_b, math.pi / 2 * 0.999, 64)
    rs = [fresnel(math.cos(t), VACUUM, glass)[0].samples[0] for t in thetas]
    assert np.all(np.diff(rs) >= -1e-12)


def test_grazing_incidence_reflects_everything():
    R, _ = fresnel(0.0, VACUUM, ComplexIor.constant(1.5))
    assert np.abs(R.samples - 1.0).max() <= 1e-9


def test_absorbing_medium_reflectance_in_range():
    gold_like = ComplexIor.constant(0.47, 2.83)
    for cos_i in (1.0, 0.7, 0.3, 0.05):
        R, T = fresnel(cos_i, VACUUM, gold_like)
        assert np.all((R.samples >= 0.0) & (R.samples <= 1.0))
        # normal-incidence oracle: |n~ - 1|^2 / |n~ + 1|^2
    n = 0.47 + 2.83j
    expect = abs((n - 1) / (n + 1)) ** 2
    R, _ = fresnel(1.0, VACUUM, gold_like)
    assert R.samples[0] == pytest.approx(expect, rel=1e-12)


def test_cos_theta_out_of_range_rejected():
    with pytest.raises(ValueError):
        fresnel(1.5, VACUUM, ComplexIor.constant(1.5))


# -- reflect / refract -------------------------------------------------------


def test_retroreflection_at_normal_incidence():
    n = np.array([0.0, 0.0, 1.0])
    out = reflect(-n, n)
    np.testing.assert_array_equal(out, n)


def test_reflect_preserves_length_and_angle(rng):
    for _ in range(50):
        n = random_unit(rng)
        w = random_unit(rng)
        if np.dot(w, n) > -1e-6:
            w = -w if np.dot(w, n) > 0 else w
        r = reflect(w, n)
        assert np.linalg.norm(r) == pytest.approx(1.0, abs=1e-12)
        # angle of incidence equals angle of reflection
        assert np.dot(-w, n) == pytest.approx(np.dot(r, n), abs=1e-12)


def test_refract_normal_incidence_goes_straight():
    n = np.array([0.0, 0.0, 1.0])
    t = refract(-n, n, 1.0 / 1.5)
    np.testing.assert_allclose(t, -n, atol=1e-12)


def test_refract_snell_45_degrees():
    # 45 degrees onto a horizontal surface, eta = 1/1.5
    n = np.array([0.0, 0.0, 1.0])
    w = np.array([1.0, 0.0, -1.0]) / math.sqrt(2.0)
    t = refract(w, n, 1.0 / 1.5)
    sin_t = math.sqrt(1.0 - float(np.dot(t, n)) ** 2)
    assert sin_t == pytest.approx(math.sin(math.pi / 4) / 1.5, abs=1e-12)
    assert math.degrees(math.asin(sin_t)) == pytest.approx(28.1255, abs=1e-3)


def test_refract_returns_none_on_tir():
    n = np.array([0.0, 0.0, 1.0])
    cos_crit = math.cos(math.asin(1.0 / 1.5))
    w = np.array([math.sqrt(1 - (cos_crit - 0.05) ** 2), 0.0, -(cos_crit - 0.05)])
    assert refract(w / np.linalg.norm(w), n, 1.5) is None


@given(st.floats(min_value=0.05, max_value=0.95), st.floats(min_value=0.4, max_value=0.95))
@settings(max_examples=100)
def test_refract_satisfies_snell(cos_i, eta):
    n = np.array([0.0, 0.0, 1.0])
    sin_i = math.sqrt(1.0 - cos_i * cos_i)
    w = np.array([sin_i, 0.0, -cos_i])
    t = refract(w, n, eta)
    assert t is not None
    assert np.linalg.norm(t) == pytest.approx(1.0, abs=1e-12)
    sin_t = math.sqrt(max(0.0, 1.0 - float(np.dot(t, n)) ** 2))
    assert sin_t == pytest.approx(eta * sin_i, abs=1e-9)


# -- materials ---------------------------------------------------------------


def test_lambertian_brdf_is_rho_over_pi():
    m = Lambertian(Spectrum.constant(0.5))
    d = Directions(np.array([0, 0, 1.0]), np.array([0, 0, 1.0]), np.array([0, 0, 1.0]))
    np.testing.assert_allclose(eval_brdf(m, d).samples, 0.5 / np.pi, atol=1e-15)


def test_lambertian_view_independent(rng):
    m = Lambertian(Spectrum.constant(0.37))
    vals = []
    for _ in range(100):
        n = random_unit(rng)
        wi, wo = random_unit(rng), random_unit(rng)
        vals.append(eval_brdf(m, Directions(wi, wo, n)).samples[0])
    assert np.ptp(vals) == 0.0


def test_lambertian_range_validated():
    with pytest.raises(ValueError):
        Lambertian(Spectrum.constant(1.2))
    with pytest.raises(ValueError):
        Lambertian(Spectrum.constant(-0.1))


def test_fresnel_material_has_no_diffuse_lobe():
    m = FresnelDielectric(ComplexIor.constant(1.5), VACUUM)
    d = Directions(np.array([0, 0, 1.0]), np.array([0, 0, 1.0]), np.array([0, 0, 1.0]))
    assert eval_brdf(m, d).is_zero()


def _constant_table(c: float) -> TabulatedBrdf:
    ti = np.array([0.0, 45.0, 90.0])
    to = np.array([0.0, 45.0, 90.0])
    dp = np.array([0.0, 90.0, 180.0])
    vals = np.full((3, 3, 3, DEFAULT_GRID.bin_count), c)
    return TabulatedBrdf(ti, to, dp, vals, DEFAULT_GRID)


def test_tabulated_constant_interpolates_to_constant(rng):
    m = _constant_table(0.25)
    n = np.array([0.0, 0.0, 1.0])
    for _ in range(20):
        wi = random_unit(rng)
        wo = random_unit(rng)
        wi[2], wo[2] = abs(wi[2]), abs(wo[2])  # keep both above the horizon
        wi, wo = wi / np.linalg.norm(wi), wo / np.linalg.norm(wo)
        np.testing.assert_allclose(eval_brdf(m, Directions(wi, wo, n)).samples, 0.25, atol=1e-12)
    assert m.diagnostics.clamped_queries == 0


def test_tabulated_clamp_counter():
    m = _constant_table(0.25)
    before = m.diagnostics.clamped_queries
    np.testing.assert_allclose(m.lookup(120.0, 10.0, 0.0), 0.25, atol=1e-12)
    assert m.diagnostics.clamped_queries == before + 1


def test_tabulated_reciprocity_for_symmetric_table():
    ti = np.array([0.0, 30.0, 60.0, 90.0])
    vals = np.zeros((4, 4, 2, DEFAULT_GRID.bin_count))
    sym = np.array([[1.0, 2, 3, 4], [2, 5, 6, 7], [3, 6, 8, 9], [4, 7, 9, 10.0]])
    vals[:, :, 0, :] = sym[:, :, None]
    vals[:, :, 1, :] = (2 * sym)[:, :, None]
    m = TabulatedBrdf(ti, ti, np.array([0.0, 180.0]), vals, DEFAULT_GRID)
    n = np.array([0.0, 0.0, 1.0])

    def dir_at(theta_deg, phi_deg):
        t, p = math.radians(theta_deg), math.radians(phi_deg)
        return np.array([math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)])

    for a, b in [(10.0, 50.0), (25.0, 80.0), (40.0, 40.0)]:
        wi, wo = dir_at(a, 0.0), dir_at(b, 77.0)
        fwd = eval_brdf(m, Directions(wi, wo, n)).samples
        rev = eval_brdf(m, Directions(wo, wi, n)).samples
        np.testing.assert_allclose(fwd, rev, atol=1e-12)


def test_directions_must_be_unit():
    with pytest.raises(ValueError):
        Directions(np.array([0, 0, 2.0]), np.array([0, 0, 1.0]), np.array([0, 0, 1.0]))
