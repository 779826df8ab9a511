import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pairfilter import numeric
from pairfilter.core import DomainError, FilterSpec, SourceSpec
from pairfilter.experiment import (
    JSI_CORNER,
    CountRecord,
    MeasuredJSI,
    ParseError,
    analyze_counts,
    analyze_jsi,
    apply_jitter,
    filter_heralding_from_counts,
    intensity_correlation,
    klyshko,
    load_counts,
    load_jsi,
    purity_from_jsi,
    save_counts,
    save_jsi,
    synthetic_counts,
    synthetic_jsi,
    time_filter,
)
from pairfilter.presets import FIG2_SOURCE

LAM = 1556.0
GAUSS_SRC = FIG2_SOURCE.replace(phasematching_shape="gaussian_approx")


def gauss_2d(n=48, rho=0.0, width=1.0):
    x = np.linspace(-4, 4, n)
    s, i = np.meshgrid(x, x, indexing="ij")
    q = (s**2 - 2 * rho * s * i + i**2) / (width**2 * (1 - rho**2))
    return MeasuredJSI(x, x, np.exp(-q))


# file formats


def test_jsi_round_trip(tmp_path):
    jsi = MeasuredJSI(np.array([-0.5, 0.5]), np.array([-1.0, 0.0, 1.0]), np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 0.25]]))
    path = tmp_path / "jsi.csv"
    save_jsi(jsi, path)
    assert path.read_text().splitlines()[0].startswith(JSI_CORNER)
    back = load_jsi(path)
    np.testing.assert_array_equal(back.intensity, jsi.intensity)
    np.testing.assert_array_equal(back.signal_axis, jsi.signal_axis)
    np.testing.assert_array_equal(back.idler_axis, jsi.idler_axis)


def test_jsi_negative_cell_named(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("c,0,1\n0,1,2\n1,3,-4\n")
    with pytest.raises(ParseError, match=r"bad.csv:3:.*column 3"):
        load_jsi(path)


def test_jsi_parse_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("c,0,1\n0,1\n")
    with pytest.raises(ParseError, match=":2: expected 3 fields"):
        load_jsi(path)
    path.write_text("c,0,x\n0,1,2\n1,1,1\n")
    with pytest.raises(ParseError, match=":1: cannot read"):
        load_jsi(path)
    path.write_text("c,1,0\n0,1,2\n1,1,1\n")
    with pytest.raises(ParseError, match="increasing"):
        load_jsi(path)


def test_measured_jsi_validation():
    with pytest.raises(DomainError, match="signal index 1, idler index 0"):
        MeasuredJSI([0, 1], [0, 1], [[1, 1], [-1, 1]])
    with pytest.raises(DomainError, match="shape"):
        MeasuredJSI([0, 1], [0, 1, 2], np.ones((2, 2)))


def test_counts_round_trip_and_errors(tmp_path):
    recs = [CountRecord(10, 40, 50, "a"), CountRecord(0, 3, 4, "b")]
    path = tmp_path / "c.csv"
    save_counts(recs, path)
    assert load_counts(path) == recs
    path.write_text("label,C,S_s,S_i\nx,5,4,9\n")
    with pytest.raises(ParseError, match=":2: .*more coincidences"):
        load_counts(path)
    path.write_text("label,C,S\n")
    with pytest.raises(ParseError, match=":1:"):
        load_counts(path)


# JSI processing


def test_synthetic_wide_spectrum_anticorrelated():
    jsi = synthetic_jsi(FIG2_SOURCE, half_span_nm=10.0)
    assert intensity_correlation(jsi) < -0.5


def test_synthetic_narrow_filters_pure():
    f = FilterSpec.rectangular(LAM, 0.2)
    jsi = synthetic_jsi(GAUSS_SRC, f, f, half_span_nm=0.2, n_points=64)
    assert purity_from_jsi(jsi) >= 0.95


def test_jsi_purity_matches_numeric_engine():
    f = FilterSpec.gaussian(LAM, 1.0)
    jsi = synthetic_jsi(GAUSS_SRC, f, f, half_span_nm=4.0, n_points=256)
    assert purity_from_jsi(jsi) == pytest.approx(numeric.metrics_numeric(GAUSS_SRC, f, f).purity, abs=1e-3)


def test_purity_of_separable_is_one():
    assert purity_from_jsi(gauss_2d(rho=0.0)) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.95, 0.95), st.floats(1e-3, 1e3))
def test_purity_invariances(rho, scale):
    jsi = gauss_2d(rho=rho)
    p = purity_from_jsi(jsi)
    assert purity_from_jsi(jsi.transpose()) == pytest.approx(p, rel=1e-10)
    assert purity_from_jsi(jsi.with_intensity(jsi.intensity * scale)) == pytest.approx(p, rel=1e-10)
    assert 0 < p <= 1 + 1e-12


def test_purity_empty_raises():
    with pytest.raises(DomainError):
        purity_from_jsi(MeasuredJSI([0, 1], [0, 1], np.zeros((2, 2))))


def test_jitter_tiny_blur_is_identity():
    jsi = gauss_2d(rho=-0.8)
    out = apply_jitter(jsi, 1e-3, 1000.0)
    np.testing.assert_allclose(out.intensity, jsi.intensity, rtol=1e-9, atol=1e-12)


def test_jitter_preserves_total():
    jsi = gauss_2d(rho=-0.8)
    out = apply_jitter(jsi, 120.0, (300.0, 500.0))
    assert out.total == pytest.approx(jsi.total, rel=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.95, -0.1), st.floats(10, 400))
def test_jitter_never_lowers_purity_of_anticorrelated(rho, jitter):
    jsi = gauss_2d(rho=rho)
    assert purity_from_jsi(apply_jitter(jsi, jitter, 400.0)) >= purity_from_jsi(jsi) - 1e-12


def test_jitter_wider_than_axis_rejected():
    with pytest.raises(DomainError, match="exceeds"):
        apply_jitter(gauss_2d(), 1e5, 1.0)
    with pytest.raises(DomainError):
        apply_jitter(gauss_2d(), 120.0, 0.0)


def test_time_filter_full_window_is_identity():
    jsi = gauss_2d(rho=-0.5)
    out = time_filter(jsi, 100.0, 100.0)
    np.testing.assert_array_equal(out.intensity, jsi.intensity)


def test_time_filter_half_span_keeps_quarter_of_flat():
    x = np.linspace(-1, 1, 40, endpoint=False) + 1 / 40
    jsi = MeasuredJSI(x, x, np.ones((40, 40)))
    assert time_filter(jsi, 1.0, 1.0).total == pytest.approx(0.25 * jsi.total)


def test_time_filter_raises_purity_of_noisy_jsi():
    jsi = gauss_2d(rho=-0.3, width=0.6)
    noisy = jsi.with_intensity(jsi.intensity + 0.02)
    assert purity_from_jsi(time_filter(noisy, 3.0, 3.0)) > purity_from_jsi(noisy)
    with pytest.raises(DomainError, match="narrower than one"):
        time_filter(noisy, 1e-3, 1.0)


def test_analyze_jsi_report():
    rep = analyze_jsi(gauss_2d(rho=-0.6), 120.0, 400.0, (6.0, 6.0))
    assert set(rep) == {"purity", "correlation", "purity_with_jitter"}
    assert rep["purity_with_jitter"] >= rep["purity"]
    with pytest.raises(DomainError, match="dispersion"):
        analyze_jsi(gauss_2d(), 120.0)


# counts


def test_klyshko_examples():
    k = klyshko(CountRecord(100, 200, 400))
    assert k.eta_s == 0.25 and k.eta_i == 0.5
    assert k.err_s == pytest.approx(math.sqrt(100 / 400**2 + 100**2 / 400**3))
    z = klyshko(CountRecord(0, 10, 10))
    assert z.eta_s == 0.0 and z.err_s == 0.0
    with pytest.raises(DomainError, match="zero singles"):
        klyshko(CountRecord(0, 0, 5))


def test_filter_heralding_against_itself():
    rec = CountRecord(300, 1000, 1200)
    f = filter_heralding_from_counts(rec, rec)
    assert f.eta_s == pytest.approx(1.0) and f.eta_i == pytest.approx(1.0)


def test_filter_heralding_halving_coincidences():
    ref = CountRecord(300, 1000, 1200)
    f = filter_heralding_from_counts(CountRecord(150, 1000, 1200), ref)
    assert f.eta_s == pytest.approx(0.5) and f.eta_i == pytest.approx(0.5)


def test_analyze_counts_reference_choice():
    recs = [CountRecord(50, 500, 500, "narrow"), CountRecord(200, 500, 500, "wide")]
    rows = analyze_counts(recs)
    assert [r["reference"] for r in rows] == [False, True]
    assert rows[0]["eta_f_s"] == pytest.approx(0.25)
    rows = analyze_counts(recs, "narrow")
    assert rows[1]["eta_f_s"] == pytest.approx(4.0)
    with pytest.raises(DomainError, match="no record"):
        analyze_counts(recs, "missing")


def test_poisson_counts_recover_filter_heralding():
    rng = np.random.default_rng(11)
    widths = np.geomspace(0.3, 6.0, 10)
    settings_ = [("ref", FilterSpec.none(LAM), FilterSpec.none(LAM))]
    settings_ += [(f"{w:.3f}", FilterSpec.rectangular(LAM, w), FilterSpec.rectangular(LAM, w)) for w in widths]
    recs = synthetic_counts(FIG2_SOURCE, settings_, pairs=2e7, eta_opt=0.2, rng=rng, n_points=128)
    rows = analyze_counts(recs, "ref")
    for (label, fs, fi), row in zip(settings_[1:], rows[1:]):
        g_both, g_s, g_i = numeric.pass_probabilities(FIG2_SOURCE, fs, fi, n_points=128, check_truncation="ignore")
        assert abs(row["eta_f_s"] - g_both / g_i) <= 3 * row["eta_f_s_err"], label
        assert abs(row["eta_f_i"] - g_both / g_s) <= 3 * row["eta_f_i_err"], label


def test_synthetic_counts_deterministic_with_seed():
    f = [("a", FilterSpec.rectangular(LAM, 1.0), FilterSpec.rectangular(LAM, 1.0))]
    a = synthetic_counts(FIG2_SOURCE, f, 1e5, 0.3, np.random.default_rng(3), n_points=64)
    b = synthetic_counts(FIG2_SOURCE, f, 1e5, 0.3, np.random.default_rng(3), n_points=64)
    assert a == b


def test_synthetic_spec_roundtrip_meta():
    jsi = synthetic_jsi(SourceSpec.degenerate(778.0, 0.4, 0.5, 60.0), n_points=32)
    assert jsi.meta["synthetic"]["theta"] == 60.0
    assert jsi.intensity.shape == (32, 32)
