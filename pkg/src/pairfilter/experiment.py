"""Analysis of measured joint spectra and coincidence counts.

Joint spectral intensity files are plain CSV: the first row holds a corner
label followed by the signal wavelength detunings (nm), every further row an
idler detuning followed by the intensities at that idler wavelength. Count
files have the columns ``label,C,S_s,S_i``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.ndimage import gaussian_filter1d

from . import numeric
from .core import (
    FWHM_TO_SIGMA,
    SPEED_OF_LIGHT,
    DomainError,
    FilterSpec,
    FrequencyGrid,
    SourceSpec,
    apply_filters,
    build_jsa,
)

JSI_FORMAT_VERSION = 1
JSI_CORNER = "idler_nm\\signal_nm"


class ParseError(ValueError):
    """Malformed input file; the message names the file and line."""


@dataclass(frozen=True)
class MeasuredJSI:
    """Intensity on wavelength-detuning axes (nm); ``intensity[k, j]`` is at signal k, idler j."""

    signal_axis: np.ndarray
    idler_axis: np.ndarray
    intensity: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ls = np.asarray(self.signal_axis, dtype=float)
        li = np.asarray(self.idler_axis, dtype=float)
        inten = np.asarray(self.intensity, dtype=float)
        for name, axis in (("signal", ls), ("idler", li)):
            if axis.ndim != 1 or axis.size < 2 or np.any(np.diff(axis) <= 0):
                raise DomainError(f"{name} axis must be strictly increasing with at least two points")
        if inten.shape != (ls.size, li.size):
            raise DomainError(f"intensity shape {inten.shape} does not match axes ({ls.size}, {li.size})")
        if np.any(inten < 0) or not np.all(np.isfinite(inten)):
            k, j = np.argwhere(~(inten >= 0))[0]
            raise DomainError(f"intensity must be finite and non-negative (signal index {k}, idler index {j})")
        object.__setattr__(self, "signal_axis", ls)
        object.__setattr__(self, "idler_axis", li)
        object.__setattr__(self, "intensity", inten)

    @property
    def total(self) -> float:
        return float(self.intensity.sum())

    def with_intensity(self, intensity) -> "MeasuredJSI":
        return MeasuredJSI(self.signal_axis, self.idler_axis, intensity, self.meta)

    def transpose(self) -> "MeasuredJSI":
        return MeasuredJSI(self.idler_axis, self.signal_axis, self.intensity.T, self.meta)


def load_jsi(path) -> MeasuredJSI:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh)]
    if not rows:
        raise ParseError(f"{path}: empty file")

    def number(text, line, what):
        try:
            return float(text)
        except ValueError:
            raise ParseError(f"{path}:{line}: cannot read {what} {text!r}") from None

    header = rows[0]
    if len(header) < 3:
        raise ParseError(f"{path}:1: header needs a corner label and at least two signal wavelengths")
    signal = np.array([number(t, 1, "signal detuning") for t in header[1:]])
    idler, body = [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}:{line}: expected {len(header)} fields, found {len(row)}")
        idler.append(number(row[0], line, "idler detuning"))
        values = [number(t, line, "intensity") for t in row[1:]]
        for col, v in enumerate(values, start=2):
            if v < 0 or not math.isfinite(v):
                raise ParseError(f"{path}:{line}: negative or non-finite intensity {v} in column {col}")
        body.append(values)
    if len(body) < 2:
        raise ParseError(f"{path}: need at least two idler rows")
    try:
        return MeasuredJSI(signal, np.array(idler), np.array(body).T, {"path": str(path)})
    except DomainError as exc:
        raise ParseError(f"{path}: {exc}") from None


def save_jsi(jsi: MeasuredJSI, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([JSI_CORNER, *(repr(float(x)) for x in jsi.signal_axis)])
        for j, li in enumerate(jsi.idler_axis):
            writer.writerow([repr(float(li)), *(repr(float(x)) for x in jsi.intensity[:, j])])


def _blur_sigma_nm(jitter_fwhm_ps: float, dispersion_ps_per_nm: float) -> float:
    if not (jitter_fwhm_ps > 0 and dispersion_ps_per_nm > 0):
        raise DomainError("jitter and dispersion must be positive")
    return jitter_fwhm_ps / dispersion_ps_per_nm / FWHM_TO_SIGMA


def apply_jitter(jsi: MeasuredJSI, jitter_fwhm_ps: float, dispersion_ps_per_nm) -> MeasuredJSI:
    """Smear the spectrum with the timing jitter of a time-of-flight spectrometer.

    The jitter maps to a Gaussian blur of width jitter/dispersion (nm, FWHM)
    along each axis; ``dispersion_ps_per_nm`` may be a pair for signal and
    idler. Light blurred past the edges is dropped and the total rescaled.
    """
    disp = np.broadcast_to(np.asarray(dispersion_ps_per_nm, dtype=float), (2,))
    out = jsi.intensity
    for ax, axis, d in ((0, jsi.signal_axis, disp[0]), (1, jsi.idler_axis, disp[1])):
        sigma_nm = _blur_sigma_nm(jitter_fwhm_ps, d)
        step = axis[1] - axis[0]
        span = axis[-1] - axis[0] + step
        if sigma_nm > span:
            raise DomainError(f"blur width {sigma_nm:.3g} nm exceeds the {span:.3g} nm axis")
        out = gaussian_filter1d(out, sigma_nm / step, axis=ax, mode="constant", cval=0.0)
    total = out.sum()
    if total > 0:
        out = out * (jsi.total / total)
    return jsi.with_intensity(out)


def time_filter(jsi: MeasuredJSI, window_nm_s: float, window_nm_i: float) -> MeasuredJSI:
    """Zero everything outside a centred rectangle of full widths ``window_nm_s`` x ``window_nm_i``."""
    masks = []
    for axis, width in ((jsi.signal_axis, window_nm_s), (jsi.idler_axis, window_nm_i)):
        step = axis[1] - axis[0]
        if not width >= step:
            raise DomainError(f"window {width} nm is narrower than one {step:g} nm cell")
        masks.append(np.abs(axis) <= 0.5 * width * (1 + 1e-12))
    return jsi.with_intensity(jsi.intensity * masks[0][:, None] * masks[1][None, :])


def purity_from_jsi(jsi: MeasuredJSI) -> float:
    """Spectral purity assuming a flat joint spectral phase."""
    if not jsi.total > 0:
        raise DomainError("cannot compute the purity of an empty spectrum")
    sv = np.linalg.svd(np.sqrt(jsi.intensity), compute_uv=False)
    return numeric.purity_from_schmidt(numeric.SchmidtSpectrum(sv))


def intensity_correlation(jsi: MeasuredJSI) -> float:
    """Pearson correlation between signal and idler detunings under the intensity."""
    ls, li = np.meshgrid(jsi.signal_axis, jsi.idler_axis, indexing="ij")
    w = jsi.intensity / jsi.total
    ms, mi = (w * ls).sum(), (w * li).sum()
    cov = (w * (ls - ms) * (li - mi)).sum()
    vs = (w * (ls - ms) ** 2).sum()
    vi = (w * (li - mi) ** 2).sum()
    return float(cov / math.sqrt(vs * vi))


@dataclass(frozen=True)
class CountRecord:
    coincidences: int
    singles_s: int
    singles_i: int
    label: str = ""

    def __post_init__(self):
        for name in ("coincidences", "singles_s", "singles_i"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise DomainError(f"{name} must be a non-negative integer, got {v}")
            object.__setattr__(self, name, int(v))
        if self.coincidences > min(self.singles_s, self.singles_i):
            raise DomainError(f"{self.label or 'record'}: more coincidences than singles")


class Efficiencies(NamedTuple):
    eta_s: float
    eta_i: float
    err_s: float
    err_i: float


def _ratio(c: int, s: int) -> tuple[float, float]:
    # 1-sigma Poisson error, counts treated as independent
    eta = c / s
    return eta, math.sqrt(c / s**2 + c**2 / s**3)


def klyshko(rec: CountRecord) -> Efficiencies:
    """Heralding efficiencies from counts: eta_s = C/S_i, eta_i = C/S_s."""
    if rec.singles_s <= 0 or rec.singles_i <= 0:
        raise DomainError(f"{rec.label or 'record'}: zero singles, efficiency undefined")
    eta_s, err_s = _ratio(rec.coincidences, rec.singles_i)
    eta_i, err_i = _ratio(rec.coincidences, rec.singles_s)
    return Efficiencies(eta_s, eta_i, err_s, err_i)


def filter_heralding_from_counts(rec: CountRecord, reference: CountRecord) -> Efficiencies:
    """Filter heralding efficiencies, normalised to the widest-filter reference.

    Shot noise can push the values slightly above one; they are not clipped.
    """
    k = klyshko(rec)
    r = klyshko(reference)
    if r.eta_s <= 0 or r.eta_i <= 0:
        raise DomainError("reference record has zero heralding efficiency")
    out = []
    for eta, err, ref, ref_err in ((k.eta_s, k.err_s, r.eta_s, r.err_s), (k.eta_i, k.err_i, r.eta_i, r.err_i)):
        value = eta / ref
        out.append((value, math.hypot(err / ref, eta * ref_err / ref**2)))
    return Efficiencies(out[0][0], out[1][0], out[0][1], out[1][1])


def load_counts(path) -> list[CountRecord]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["label", "C", "S_s", "S_i"]:
            raise ParseError(f"{path}:1: expected header label,C,S_s,S_i")
        records = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"{path}:{line}: expected 4 fields, found {len(row)}")
            try:
                c, ss, si = (int(x) for x in row[1:])
                records.append(CountRecord(c, ss, si, row[0]))
            except (ValueError, DomainError) as exc:
                raise ParseError(f"{path}:{line}: {exc}") from None
    if not records:
        raise ParseError(f"{path}: no records")
    return records


def save_counts(records, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "C", "S_s", "S_i"])
        for r in records:
            writer.writerow([r.label, r.coincidences, r.singles_s, r.singles_i])


def analyze_counts(records: list[CountRecord], reference_label: str | None = None) -> list[dict]:
    """Klyshko and filter heralding efficiencies per record.

    The reference defaults to the record with the largest Klyshko product,
    i.e. the widest filter setting.
    """
    if reference_label is None:
        ref = max(records, key=lambda r: klyshko(r).eta_s * klyshko(r).eta_i)
    else:
        matches = [r for r in records if r.label == reference_label]
        if not matches:
            raise DomainError(f"no record labelled {reference_label!r}")
        ref = matches[0]
    out = []
    for r in records:
        k = klyshko(r)
        f = filter_heralding_from_counts(r, ref)
        out.append(
            {
                "label": r.label,
                "eta_s": k.eta_s,
                "eta_i": k.eta_i,
                "eta_s_err": k.err_s,
                "eta_i_err": k.err_i,
                "eta_f_s": f.eta_s,
                "eta_f_i": f.eta_i,
                "eta_f_s_err": f.err_s,
                "eta_f_i_err": f.err_i,
                "pshe": f.eta_s * f.eta_i,
                "reference": r is ref,
            }
        )
    return out


def analyze_jsi(
    jsi: MeasuredJSI,
    jitter_fwhm_ps: float | None = None,
    dispersion_ps_per_nm=None,
    time_window_nm: tuple[float, float] | None = None,
) -> dict:
    """Purity of a measured spectrum, optionally after jitter smoothing and a time window."""
    work = jsi
    if time_window_nm is not None:
        work = time_filter(work, *time_window_nm)
    report = {"purity": purity_from_jsi(work), "correlation": intensity_correlation(work)}
    if jitter_fwhm_ps is not None:
        if dispersion_ps_per_nm is None:
            raise DomainError("jitter smoothing needs a dispersion constant (ps/nm)")
        report["purity_with_jitter"] = purity_from_jsi(apply_jitter(work, jitter_fwhm_ps, dispersion_ps_per_nm))
    return report


# synthetic data from the source model


def synthetic_jsi(
    spec: SourceSpec,
    fs: FilterSpec | None = None,
    fi: FilterSpec | None = None,
    half_span_nm: float = 5.0,
    n_points: int = 128,
) -> MeasuredJSI:
    """Filtered model intensity on a wavelength grid centred on the photon wavelengths."""

    def to_w(center, half):
        return 2.0 * math.pi * SPEED_OF_LIGHT * half * 1e-9 / (center * 1e-9) ** 2

    grid = FrequencyGrid.centered(
        to_w(spec.signal_center_wavelength, half_span_nm), to_w(spec.idler_center_wavelength, half_span_nm), n_points
    )
    jsa = build_jsa(spec, grid, check_truncation="ignore")
    if fs is not None or fi is not None:
        jsa = apply_filters(
            jsa,
            fs or FilterSpec.none(spec.signal_center_wavelength),
            fi or FilterSpec.none(spec.idler_center_wavelength),
        )
    # wavelength detuning runs opposite to frequency detuning; flip both axes
    step = 2.0 * half_span_nm / n_points
    axis = -half_span_nm + step * (np.arange(n_points) + 0.5)
    return MeasuredJSI(axis, axis, jsa.intensity[::-1, ::-1], {"synthetic": spec.to_dict()})


def synthetic_counts(
    spec: SourceSpec,
    filters: list[tuple[str, FilterSpec, FilterSpec]],
    pairs: float,
    eta_opt: float,
    rng: np.random.Generator,
    n_points: int = 256,
) -> list[CountRecord]:
    """Poisson-sampled counts with pass probabilities from the numeric engine.

    Per setting, coincidences and the two sets of unmatched singles are
    independent Poisson variables with means pairs * eta_opt^2 * Gamma_both
    and pairs * eta_opt * Gamma_x - pairs * eta_opt^2 * Gamma_both.
    """
    out = []
    for label, fs, fi in filters:
        g_both, g_s, g_i = numeric.pass_probabilities(spec, fs, fi, n_points=n_points, check_truncation="ignore")
        mean_c = pairs * eta_opt**2 * g_both
        c = rng.poisson(mean_c)
        only_s = rng.poisson(max(pairs * eta_opt * g_s - mean_c, 0.0))
        only_i = rng.poisson(max(pairs * eta_opt * g_i - mean_c, 0.0))
        out.append(CountRecord(int(c), int(c + only_s), int(c + only_i), label))
    return out
