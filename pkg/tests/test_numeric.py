import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pairfilter import analytic
from pairfilter.core import (
    SPEED_OF_LIGHT,
    DomainError,
    FilterSpec,
    FrequencyGrid,
    JointSpectrum,
    SourceSpec,
    angular_bandwidth_to_wavelength,
    apply_filters,
    build_jsa,
    default_grid,
    pm_sigma,
    pump_sigma,
)
from pairfilter.numeric import (
    SchmidtSpectrum,
    UndefinedEfficiencyError,
    filter_heralding,
    filtered_spectrum,
    fitted_grids,
    gamma_both,
    gamma_marginals,
    max_overlap,
    metrics_numeric,
    pass_probabilities,
    purity_from_schmidt,
    schmidt,
)
from pairfilter.presets import FIG2_SOURCE

LAM = 1556.0
NONE = FilterSpec.none(LAM)


def gspec(theta=60.5, pump=0.42, pm=0.46):
    return SourceSpec.degenerate(778.0, pump, pm, theta, phasematching_shape="gaussian_approx")


def gauss_jsa(spec=None, n=256):
    spec = spec or gspec()
    return build_jsa(spec, default_grid(spec, n))


def product_jsa(n=64):
    g = FrequencyGrid.centered(1.0, 1.0, n)
    s, i = g.mesh()
    return JointSpectrum(g, np.exp(-(s**2) * 8) * np.exp(-(i**2) * 3)).normalize()


# probabilities


def test_gamma_both_unfiltered_is_one():
    assert gamma_both(apply_filters(gauss_jsa(), NONE, NONE)) == pytest.approx(1.0, abs=1e-12)
    assert gamma_marginals(gauss_jsa(), NONE, NONE) == pytest.approx((1.0, 1.0), abs=1e-12)


def test_gamma_half_plane_by_off_center_filter():
    spec = gspec()
    jsa = gauss_jsa(spec)
    half = jsa.grid.signal_axis[-1] + 0.5 * jsa.grid.d_signal
    # passband covering exactly the negative signal detunings of the grid
    lam = 1e9 / (1 / (LAM * 1e-9) - half / (2 * math.pi * SPEED_OF_LIGHT))
    f = FilterSpec.rectangular(lam, angular_bandwidth_to_wavelength(lam, 2 * half))
    assert gamma_both(apply_filters(jsa, f, NONE)) == pytest.approx(0.5, abs=1e-12)
    assert pass_probabilities(spec, f, None)[0] == pytest.approx(0.5, abs=1e-9)


def test_fig2_gaussian_filters_gamma_ratio_matches_closed_form():
    spec = FIG2_SOURCE.replace(phasematching_shape="gaussian_approx")
    f = FilterSpec.gaussian(LAM, 1.0)
    g_both, g_s, g_i = pass_probabilities(spec, f, f)
    eta_s, eta_i, _ = analytic.heralding_efficiencies(analytic.gaussian_coeffs(spec, f, f))
    assert g_both / g_i == pytest.approx(eta_s, abs=1e-3)
    assert g_both / g_s == pytest.approx(eta_i, abs=1e-3)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 179), st.floats(0.1, 10), st.floats(0.1, 10), st.sampled_from(["rectangular", "gaussian"]))
def test_probabilities_ordered_and_bounded(theta, ws, wi, shape):
    spec = FIG2_SOURCE.replace(theta=theta)
    fs, fi = FilterSpec(shape, LAM, ws), FilterSpec(shape, LAM, wi)
    g_both, g_s, g_i = pass_probabilities(spec, fs, fi, n_points=128, check_truncation="ignore")
    assert 0 <= g_both <= min(g_s, g_i) + 1e-12
    assert g_s <= 1 + 1e-12 and g_i <= 1 + 1e-12


def test_filter_heralding_no_filters():
    assert filter_heralding(gauss_jsa(), NONE, NONE) == pytest.approx((1.0, 1.0, 1.0), abs=1e-12)


def test_filter_heralding_each_filter_passes_same_part():
    # intensity confined to a square the filters exactly cover: both photons always pass together
    g = FrequencyGrid.centered(4e12, 4e12, 80)
    s, i = g.mesh()
    inside = (np.abs(s) < 1e12) & (np.abs(i) < 1e12)
    jsa = JointSpectrum(g, np.where(inside, 1.0, 0.0) + 0.0).normalize()
    f = FilterSpec.rectangular(LAM, angular_bandwidth_to_wavelength(LAM, 2e12))
    eta_s, eta_i, _ = filter_heralding(jsa, f, f)
    assert eta_s == pytest.approx(1.0, abs=1e-12) and eta_i == pytest.approx(1.0, abs=1e-12)
    # a narrower idler filter halves the pair probability, yet every passed idler still heralds a signal
    fi = FilterSpec.rectangular(LAM, angular_bandwidth_to_wavelength(LAM, 1e12))
    eta_s, eta_i, _ = filter_heralding(jsa, f, fi)
    assert gamma_both(apply_filters(jsa, f, fi)) == pytest.approx(0.5, abs=1e-12)
    assert eta_s == pytest.approx(1.0, abs=1e-12) and eta_i == pytest.approx(0.5, abs=1e-12)


def test_zero_marginal_raises():
    far = FilterSpec.rectangular(1400.0, 0.1)
    with pytest.raises(UndefinedEfficiencyError):
        filter_heralding(gauss_jsa(), far, NONE)
    # without source provenance the photon centres are passed explicitly
    shifted = apply_filters(product_jsa(), far, NONE, signal_center=LAM, idler_center=LAM)
    assert shifted.mass == 0.0


# Schmidt decomposition


def test_schmidt_product_is_rank_one():
    s = schmidt(product_jsa())
    assert s.singular_values[1] < 1e-12 * s.singular_values[0]
    assert purity_from_schmidt(s) == pytest.approx(1.0, abs=1e-12)
    assert max_overlap(s) == pytest.approx(1.0, abs=1e-12)


def test_schmidt_two_equal_terms():
    g = FrequencyGrid.centered(1.0, 1.0, 64)
    s, i = g.mesh()
    h0 = lambda x: np.exp(-(x**2) * 10)
    h1 = lambda x: x * np.exp(-(x**2) * 10)
    n0 = np.sum(h0(g.signal_axis) ** 2) * g.d_signal
    n1 = np.sum(h1(g.signal_axis) ** 2) * g.d_signal
    amp = h0(s) * h0(i) / n0 + h1(s) * h1(i) / n1
    sp = schmidt(JointSpectrum(g, amp))
    assert sp.singular_values[0] == pytest.approx(sp.singular_values[1], rel=1e-9)
    assert purity_from_schmidt(sp) == pytest.approx(0.5, abs=1e-9)
    assert max_overlap(sp) == pytest.approx(0.5, abs=1e-9)


def test_schmidt_mass_and_order():
    jsa = apply_filters(gauss_jsa(), FilterSpec.gaussian(LAM, 1.0), FilterSpec.gaussian(LAM, 1.0))
    sp = schmidt(jsa)
    assert np.all(np.diff(sp.singular_values) <= 0)
    assert sp.mass == pytest.approx(jsa.mass, rel=1e-12)


def test_schmidt_gaussian_is_geometric():
    ratios = []
    for n in (256, 512):
        lam = schmidt(gauss_jsa(n=n)).singular_values[:6]
        r = lam[1:] / lam[:-1]
        assert np.ptp(r) / r.mean() < 0.01
        ratios.append(r.mean())
    assert ratios[0] == pytest.approx(ratios[1], rel=1e-6)


def test_schmidt_zero_mass_raises():
    g = FrequencyGrid.centered(1.0, 1.0, 8)
    with pytest.raises(DomainError):
        schmidt(JointSpectrum(g, np.zeros((8, 8))))


def test_fig2_unfiltered_purity_matches_closed_form():
    spec = FIG2_SOURCE.replace(phasematching_shape="gaussian_approx")
    p = purity_from_schmidt(schmidt(build_jsa(spec)))
    assert p == pytest.approx(analytic.purity(analytic.gaussian_coeffs(spec)), abs=1e-6)
    assert p == pytest.approx(0.20, abs=5e-3)


@settings(max_examples=20, deadline=None)
@given(st.floats(16, 74), st.floats(0.3, 3), st.floats(0.2, 5), st.floats(0.2, 5))
def test_max_overlap_gaussian_identity(theta, pump, ws, wi):
    spec = gspec(theta=theta, pm=1.0, pump=pump)
    sp = schmidt(filtered_spectrum(spec, FilterSpec.gaussian(LAM, ws), FilterSpec.gaussian(LAM, wi), n_points=256))
    p = purity_from_schmidt(sp)
    assert max_overlap(sp) == pytest.approx(2 * p / (1 + p), abs=1e-3)
    assert max_overlap(sp) >= p - 1e-12


def test_purity_and_overlap_transpose_invariant():
    jsa = apply_filters(gauss_jsa(), FilterSpec.gaussian(LAM, 1.0), FilterSpec.gaussian(LAM, 3.0))
    a, b = schmidt(jsa), schmidt(jsa.transpose())
    assert purity_from_schmidt(a) == pytest.approx(purity_from_schmidt(b), rel=1e-12)
    assert max_overlap(a) == pytest.approx(max_overlap(b), rel=1e-12)


def test_schmidt_csv(tmp_path):
    path = tmp_path / "schmidt.csv"
    SchmidtSpectrum(np.array([3.0, 4.0])).to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,singular_value,schmidt_weight"
    assert lines[2].split(",")[2] == repr(16 / 25)


# full bundle


def test_engineered_separable_source_all_one():
    spec = gspec(theta=135.0, pm=1.0)
    # choose the pump so that c = 0: 1/sigma_p^2 = alpha |sin cos| / sigma_pm^2
    sp = pm_sigma(spec) / math.sqrt(analytic.SINC_GAUSS_ALPHA * 0.5)
    spec = spec.replace(pump_fwhm=spec.pump_fwhm * sp / pump_sigma(spec))
    assert analytic.gaussian_coeffs(spec).c == pytest.approx(0.0, abs=1e-12)
    m = metrics_numeric(spec)
    assert m.purity > 0.99
    for v in m.as_row():
        assert v == pytest.approx(1.0, abs=1e-3)


def test_theta_45_unfiltered_purity_small():
    assert metrics_numeric(gspec(theta=45.0), check_truncation="ignore").purity < 0.05


@pytest.mark.parametrize("shape", ["sinc", "gaussian_approx"])
@pytest.mark.parametrize("fshape", ["rectangular", "gaussian"])
def test_grid_invariance(shape, fshape):
    spec = FIG2_SOURCE.replace(phasematching_shape=shape)
    for w in (0.5, 2.0):
        f = FilterSpec(fshape, LAM, w)
        a = metrics_numeric(spec, f, f)
        b = metrics_numeric(spec, f, f, n_points=1024)
        assert max(abs(x - y) for x, y in zip(a.as_row(), b.as_row())) < 5e-4


def test_explicit_grid_matches_fitted_grids():
    spec = gspec()
    f = FilterSpec.gaussian(LAM, 1.0)
    a = metrics_numeric(spec, f, f)
    b = metrics_numeric(spec, f, f, grid=default_grid(spec, 512))
    assert max(abs(x - y) for x, y in zip(a.as_row(), b.as_row())) < 1e-6


def test_fitted_grids_cover_filter_windows():
    f = FilterSpec.rectangular(LAM, 1.0)
    src, both, s_only, i_only = fitted_grids(FIG2_SOURCE, f, f, 64)
    w = f.fwhm_angular
    assert both.signal_axis[0] - 0.5 * both.d_signal >= -0.5 * w * (1 + 1e-12)
    assert s_only.signal_axis[-1] + 0.5 * s_only.d_signal <= 0.5 * w * (1 + 1e-12)
    assert src.n_points == (64, 64)
