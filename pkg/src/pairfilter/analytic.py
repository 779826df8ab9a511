"""Closed-form metrics for Gaussian spectra with Gaussian filters.

With the sinc phasematching replaced by exp(-alpha x^2) the filtered
amplitude is exp(-a/4 ws^2 - b/4 wi^2 - c/2 ws wi); every metric below is
a ratio of determinants of that quadratic form. Coefficients are kept in
units of 1/scale^2 with scale the phasematching amplitude bandwidth, which
keeps them of order one.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import NamedTuple

from .core import (
    SINC_GAUSS_ALPHA,
    DomainError,
    FilterShape,
    FilterSpec,
    SourceSpec,
    angular_bandwidth_to_wavelength,
    filter_sigma,
    FWHM_TO_SIGMA,
    pm_sigma,
    pump_sigma,
)

# relative size below which a0*b0 - c^2 counts as exactly zero
DEGENERACY_TOL = 1e-12
# centre mismatch (nm) tolerated between a filter and its photon
CENTER_TOL_NM = 1e-6


class UnsupportedShapeError(DomainError):
    """No closed form exists for this filter or phasematching shape."""


class SingularityError(ArithmeticError):
    """The quadratic form is degenerate where a finite value is required."""


@dataclass(frozen=True)
class GaussianCoeffs:
    """Quadratic-form coefficients, filtered (a, b, c) and unfiltered (a0, b0).

    ``fa`` and ``fb`` are the filter contributions a - a0 and b - b0, kept
    separately so differences such as a0*b - c^2 are formed without
    cancellation.
    """

    a0: float
    b0: float
    c: float
    fa: float = 0.0
    fb: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not (self.a0 > 0 and self.b0 > 0):
            raise DomainError("a0 and b0 must be positive")
        if self.fa < 0 or self.fb < 0:
            raise DomainError("filter terms cannot be negative")
        if self.a0 * self.b0 - self.c**2 < -DEGENERACY_TOL * self.a0 * self.b0:
            raise DomainError("unfiltered quadratic form is not positive semidefinite")

    @property
    def a(self) -> float:
        return self.a0 + self.fa

    @property
    def b(self) -> float:
        return self.b0 + self.fb

    @property
    def det0(self) -> float:
        """a0*b0 - c^2, clipped to zero inside the degeneracy tolerance."""
        d = self.a0 * self.b0 - self.c**2
        return 0.0 if d <= DEGENERACY_TOL * self.a0 * self.b0 else d

    @property
    def det_s(self) -> float:
        """a0*b - c^2 (only the idler filter acts)."""
        return self.det0 + self.a0 * self.fb

    @property
    def det_i(self) -> float:
        """a*b0 - c^2 (only the signal filter acts)."""
        return self.det0 + self.fa * self.b0

    @property
    def det(self) -> float:
        """a*b - c^2."""
        return self.det0 + self.a0 * self.fb + self.fa * self.b0 + self.fa * self.fb

    @property
    def unfiltered(self) -> bool:
        return self.fa == 0.0 and self.fb == 0.0

    def with_filters(self, fa: float, fb: float) -> "GaussianCoeffs":
        return GaussianCoeffs(self.a0, self.b0, self.c, fa, fb, self.scale)

    def physical(self) -> dict:
        """Coefficients in s^2/rad^2."""
        s2 = self.scale**2
        return {"a": self.a / s2, "b": self.b / s2, "c": self.c / s2, "a0": self.a0 / s2, "b0": self.b0 / s2}


def _filter_term(filt: FilterSpec, photon_center: float, scale: float) -> float:
    if filt.shape is FilterShape.NONE:
        return 0.0
    if filt.shape is not FilterShape.GAUSSIAN:
        raise UnsupportedShapeError(f"unsupported shape for the closed form: {filt.shape.value}")
    if abs(filt.center_wavelength - photon_center) > CENTER_TOL_NM:
        raise DomainError(
            f"closed form needs filters centred on the photon ({filt.center_wavelength} vs {photon_center} nm)"
        )
    return (scale / filter_sigma(filt.fwhm_angular)) ** 2


def gaussian_coeffs(
    spec: SourceSpec,
    fs: FilterSpec | None = None,
    fi: FilterSpec | None = None,
    alpha: float = SINC_GAUSS_ALPHA,
) -> GaussianCoeffs:
    """Coefficients of the Gaussian model for ``spec`` with optional Gaussian filters.

    The phasematching shape of ``spec`` is ignored; sinc sources are
    evaluated in their Gaussian approximation.
    """
    scale = pm_sigma(spec)
    t = math.radians(spec.theta)
    pm = alpha  # alpha / pm_sigma^2 in scaled units
    inv_p = (scale / pump_sigma(spec)) ** 2
    s, c_ = math.sin(t), math.cos(t)
    a0 = pm * s * s + inv_p
    b0 = pm * c_ * c_ + inv_p
    c = pm * s * c_ + inv_p
    fa = _filter_term(fs, spec.signal_center_wavelength, scale) if fs is not None else 0.0
    fb = _filter_term(fi, spec.idler_center_wavelength, scale) if fi is not None else 0.0
    return GaussianCoeffs(a0, b0, c, fa, fb, scale)


def heralding_efficiencies(co: GaussianCoeffs) -> tuple[float, float, float]:
    """Filter heralding efficiencies (signal, idler) and their product."""
    if co.unfiltered:
        return 1.0, 1.0, 1.0
    det = co.det
    if det <= 0:
        raise SingularityError("a*b - c^2 vanishes; heralding efficiency undefined")
    eta_s = math.sqrt(co.det_s / det)
    eta_i = math.sqrt(co.det_i / det)
    return eta_s, eta_i, eta_s * eta_i


def purity(co: GaussianCoeffs) -> float:
    ab = co.a * co.b
    return math.sqrt(co.det / ab)


class Fidelity(NamedTuple):
    f_s: float
    f_i: float
    f_sym: float
    d_signal: float
    d_idler: float


def symmetrized_fidelity(co: GaussianCoeffs) -> Fidelity:
    """Fidelities to the best Gaussian single photon, and the optimal widths.

    ``d_signal``/``d_idler`` parametrise the optimal mode
    g(w) ~ exp(-d w^2 / 4), in the same 1/scale^2 units as the coefficients.
    """
    det = co.det
    root_ab = math.sqrt(co.a * co.b)
    denom = math.sqrt(det) + root_ab
    f_s = 2.0 * math.sqrt(co.det_s) / denom
    f_i = 2.0 * math.sqrt(co.det_i) / denom
    d_s = math.sqrt(co.a * det / co.b)
    d_i = math.sqrt(co.b * det / co.a)
    return Fidelity(f_s, f_i, math.sqrt(f_s * f_i), d_s, d_i)


def signal_mode_overlap(co: GaussianCoeffs, d: float) -> float:
    """<1|rho_s|1> for the Gaussian mode of width parameter ``d`` (unit-normalised rho_s)."""
    a, b, c = co.a, co.b, co.c
    return math.sqrt(4.0 * co.det * d / (b * (a + d) ** 2 - c * c * (a + d)))


def pef(co: GaussianCoeffs) -> float:
    """Purity-efficiency factor sqrt(P eta_s * P eta_i)."""
    return (co.det_s * co.det_i / (co.a * co.b) ** 2) ** 0.25


class PefMax(NamedTuple):
    value: float
    a_opt: float
    b_opt: float
    coeffs: GaussianCoeffs


def pef_max(co: GaussianCoeffs | SourceSpec) -> PefMax | None:
    """Largest PEF over Gaussian filter widths, or None without a closed form.

    The closed form exists only when c^2 > a0*b0/2; callers fall back to a
    numerical search otherwise.
    """
    if isinstance(co, SourceSpec):
        co = gaussian_coeffs(co)
    a0, b0, c2 = co.a0, co.b0, co.c**2
    if not c2 > 0.5 * a0 * b0:
        return None
    a_opt = 2.0 * c2 / b0
    b_opt = 2.0 * c2 / a0
    opt = co.with_filters(max(a_opt - a0, 0.0), max(b_opt - b0, 0.0))
    return PefMax(math.sqrt(a0 * b0 / (4.0 * c2)), a_opt, b_opt, opt)


def filter_fwhm_from_term(term: float, scale: float, center_nm: float) -> float:
    """Gaussian filter FWHM (nm) whose contribution to a or b is ``term``."""
    if term <= 0:
        return math.inf
    sigma = scale / math.sqrt(term)
    return angular_bandwidth_to_wavelength(center_nm, sigma * FWHM_TO_SIGMA)


def optimal_pef_filters(spec: SourceSpec) -> tuple[FilterSpec, FilterSpec] | None:
    """Gaussian filters attaining the closed-form PEF maximum."""
    best = pef_max(spec)
    if best is None:
        return None
    co = best.coeffs
    out = []
    for term, lam in ((co.fa, spec.signal_center_wavelength), (co.fb, spec.idler_center_wavelength)):
        width = filter_fwhm_from_term(term, co.scale, lam)
        out.append(FilterSpec.none(lam) if math.isinf(width) else FilterSpec.gaussian(lam, width))
    return out[0], out[1]


@dataclass(frozen=True)
class FilterMetrics:
    """Figures of merit of one source/filter configuration."""

    eta_s: float
    eta_i: float
    pshe: float
    purity: float
    f_s: float
    f_i: float
    f_sym: float
    pef: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_row(self) -> list[float]:
        return [getattr(self, n) for n in self.field_names()]


def metrics_from_coeffs(co: GaussianCoeffs) -> FilterMetrics:
    eta_s, eta_i, pshe = heralding_efficiencies(co)
    p = purity(co)
    if co.det == 0.0:
        # perfectly correlated and unfiltered: the Gaussian modes have zero overlap
        return FilterMetrics(eta_s, eta_i, pshe, 0.0, 0.0, 0.0, 0.0, 0.0)
    fid = symmetrized_fidelity(co)
    return FilterMetrics(eta_s, eta_i, pshe, p, fid.f_s, fid.f_i, fid.f_sym, pef(co))


def metrics(spec: SourceSpec, fs: FilterSpec | None = None, fi: FilterSpec | None = None) -> FilterMetrics:
    return metrics_from_coeffs(gaussian_coeffs(spec, fs, fi))
