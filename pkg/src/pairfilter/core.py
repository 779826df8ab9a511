"""Source and filter descriptions, unit conversions, and joint spectra on grids.

All frequencies are stored as angular-frequency detunings (rad/s) from the
photon centre frequencies. Absolute optical frequencies (~1e15 rad/s) never
enter the arithmetic.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s
FWHM_TO_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
SINC_GAUSS_ALPHA = 0.193

DEFAULT_GRID_POINTS = 512
# sinc sources need a wider box for their sidelobes, hence more points
SINC_GRID_POINTS = 1024
# band half-widths in intensity FWHMs (3 FWHM = 7 standard deviations)
DEFAULT_SPAN_FACTOR = 3.0
SINC_SPAN_FACTOR = 12.0
# clip for ridges running parallel to the pump envelope, in band half-widths
MAX_SPAN_FACTOR = 16.0
TRUNCATION_MASS = 1e-3


class DomainError(ValueError):
    """Raised for physically meaningless inputs (negative bandwidths etc.)."""


class GridError(ValueError):
    """Raised when two spectra do not share a grid."""


class TruncationWarning(UserWarning):
    """Emitted when a spectrum carries noticeable mass at the grid border."""


class PhasematchingShape(str, enum.Enum):
    SINC = "sinc"
    GAUSSIAN_APPROX = "gaussian_approx"


class FilterShape(str, enum.Enum):
    RECTANGULAR = "rectangular"
    GAUSSIAN = "gaussian"
    NONE = "none"


def wavelength_bandwidth_to_angular(center_nm: float, fwhm_nm: float) -> float:
    """First-order conversion of a wavelength bandwidth to rad/s.

    >>> round(wavelength_bandwidth_to_angular(778.0, 0.42) / 1e12, 3)
    1.307
    """
    if not center_nm > 0 or not fwhm_nm > 0:
        raise DomainError(f"center and fwhm must be positive, got {center_nm}, {fwhm_nm}")
    return 2.0 * math.pi * SPEED_OF_LIGHT * (fwhm_nm * 1e-9) / (center_nm * 1e-9) ** 2


def angular_bandwidth_to_wavelength(center_nm: float, fwhm_w: float) -> float:
    """Inverse of :func:`wavelength_bandwidth_to_angular`, in nm."""
    if not center_nm > 0 or fwhm_w < 0:
        raise DomainError(f"invalid conversion input {center_nm}, {fwhm_w}")
    return fwhm_w * (center_nm * 1e-9) ** 2 / (2.0 * math.pi * SPEED_OF_LIGHT) * 1e9


@dataclass(frozen=True)
class SourceSpec:
    """Pump and phasematching parameters of a photon-pair source.

    Bandwidths are intensity FWHMs in nm. The pump bandwidth refers to the
    pump wavelength, the phasematching bandwidth to the mean photon wavelength.
    """

    pump_center_wavelength: float
    pump_fwhm: float
    pm_fwhm: float
    theta: float
    signal_center_wavelength: float
    idler_center_wavelength: float
    phasematching_shape: PhasematchingShape = PhasematchingShape.SINC
    energy_tolerance: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "phasematching_shape", PhasematchingShape(self.phasematching_shape))
        for name in (
            "pump_center_wavelength",
            "pump_fwhm",
            "pm_fwhm",
            "signal_center_wavelength",
            "idler_center_wavelength",
        ):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive and finite, got {value}")
        if not 0.0 <= self.theta < 180.0:
            raise DomainError(f"theta must lie in [0, 180) degrees, got {self.theta}")
        inv_p = 1.0 / self.pump_center_wavelength
        inv_si = 1.0 / self.signal_center_wavelength + 1.0 / self.idler_center_wavelength
        if abs(inv_p - inv_si) > self.energy_tolerance * inv_p:
            raise DomainError(
                "energy conservation violated: 1/λp = %.9g, 1/λs + 1/λi = %.9g" % (inv_p, inv_si)
            )

    @classmethod
    def degenerate(cls, pump_center_wavelength, pump_fwhm, pm_fwhm, theta, **kwargs) -> "SourceSpec":
        """Source with both photons at twice the pump wavelength."""
        lam = 2.0 * pump_center_wavelength
        return cls(pump_center_wavelength, pump_fwhm, pm_fwhm, theta, lam, lam, **kwargs)

    @property
    def photon_center_wavelength(self) -> float:
        return 0.5 * (self.signal_center_wavelength + self.idler_center_wavelength)

    def replace(self, **changes) -> "SourceSpec":
        data = asdict(self)
        data.update(changes)
        return SourceSpec(**data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["phasematching_shape"] = self.phasematching_shape.value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SourceSpec":
        return cls(**data)


@dataclass(frozen=True)
class FilterSpec:
    """Ideal spectral filter with unit peak transmission, centred at ``center_wavelength``."""

    shape: FilterShape = FilterShape.NONE
    center_wavelength: float = 1550.0
    fwhm: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "shape", FilterShape(self.shape))
        if not self.center_wavelength > 0:
            raise DomainError(f"filter center must be positive, got {self.center_wavelength}")
        if self.shape is not FilterShape.NONE and not (self.fwhm > 0 and math.isfinite(self.fwhm)):
            raise DomainError(f"filter fwhm must be positive and finite, got {self.fwhm}")

    @classmethod
    def none(cls, center_wavelength: float = 1550.0) -> "FilterSpec":
        return cls(FilterShape.NONE, center_wavelength, math.inf)

    @classmethod
    def gaussian(cls, center_wavelength: float, fwhm: float) -> "FilterSpec":
        return cls(FilterShape.GAUSSIAN, center_wavelength, fwhm)

    @classmethod
    def rectangular(cls, center_wavelength: float, fwhm: float) -> "FilterSpec":
        return cls(FilterShape.RECTANGULAR, center_wavelength, fwhm)

    @property
    def is_none(self) -> bool:
        return self.shape is FilterShape.NONE

    @property
    def fwhm_angular(self) -> float:
        if self.is_none:
            return math.inf
        return wavelength_bandwidth_to_angular(self.center_wavelength, self.fwhm)

    def to_dict(self) -> dict:
        return {
            "shape": self.shape.value,
            "center_wavelength": self.center_wavelength,
            "fwhm": None if self.is_none else self.fwhm,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FilterSpec":
        data = dict(data)
        if data.get("fwhm") is None:
            data["fwhm"] = math.inf
        return cls(**data)


def pump_sigma(spec: SourceSpec) -> float:
    """Amplitude bandwidth of the pump envelope in rad/s."""
    return wavelength_bandwidth_to_angular(spec.pump_center_wavelength, spec.pump_fwhm) / FWHM_TO_SIGMA


def pm_sigma(spec: SourceSpec, alpha: float = SINC_GAUSS_ALPHA) -> float:
    """Amplitude bandwidth of the phasematching function in rad/s.

    The factor sqrt(alpha) makes exp(-alpha x^2 / (4 sigma^2)) carry the
    requested intensity FWHM.
    """
    fwhm_w = wavelength_bandwidth_to_angular(spec.photon_center_wavelength, spec.pm_fwhm)
    return math.sqrt(alpha) * fwhm_w / FWHM_TO_SIGMA


def filter_sigma(fwhm_w: float) -> float:
    return fwhm_w / FWHM_TO_SIGMA


def sinc(x):
    """Unnormalised sinc, sin(x)/x with sinc(0) = 1."""
    return np.sinc(np.asarray(x) / np.pi)


def source_amplitude(spec: SourceSpec, ws, wi):
    """Unnormalised joint spectral amplitude at detunings ``ws``, ``wi`` (rad/s)."""
    sp = pump_sigma(spec)
    spm = pm_sigma(spec)
    t = math.radians(spec.theta)
    pump = np.exp(-((ws + wi) ** 2) / (4.0 * sp**2))
    x = ws * math.sin(t) + wi * math.cos(t)
    if spec.phasematching_shape is PhasematchingShape.SINC:
        pm = sinc(x / (2.0 * spm))
    else:
        pm = np.exp(-SINC_GAUSS_ALPHA * x**2 / (4.0 * spm**2))
    return pump * pm


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform detuning axes (rad/s) for signal and idler."""

    signal_axis: np.ndarray
    idler_axis: np.ndarray

    def __post_init__(self):
        for name in ("signal_axis", "idler_axis"):
            axis = np.asarray(getattr(self, name), dtype=float)
            if axis.ndim != 1 or axis.size < 2:
                raise DomainError(f"{name} needs at least two points")
            steps = np.diff(axis)
            if np.any(steps <= 0):
                raise DomainError(f"{name} must be strictly increasing")
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
                raise DomainError(f"{name} must be uniformly spaced")
            axis.setflags(write=False)
            object.__setattr__(self, name, axis)

    @classmethod
    def centered(cls, half_span_s: float, half_span_i: float, n_points: int = DEFAULT_GRID_POINTS):
        """Cell-centred axes covering [-half_span, half_span] on each side."""
        return cls(_cell_centres(half_span_s, n_points), _cell_centres(half_span_i, n_points))

    @property
    def n_points(self) -> tuple[int, int]:
        return self.signal_axis.size, self.idler_axis.size

    @property
    def d_signal(self) -> float:
        return float(self.signal_axis[1] - self.signal_axis[0])

    @property
    def d_idler(self) -> float:
        return float(self.idler_axis[1] - self.idler_axis[0])

    @property
    def cell_area(self) -> float:
        return self.d_signal * self.d_idler

    def mesh(self):
        return np.meshgrid(self.signal_axis, self.idler_axis, indexing="ij")

    def same_as(self, other: "FrequencyGrid") -> bool:
        return (
            self.n_points == other.n_points
            and np.array_equal(self.signal_axis, other.signal_axis)
            and np.array_equal(self.idler_axis, other.idler_axis)
        )

    def refined(self, factor: int = 2) -> "FrequencyGrid":
        """Same spans with ``factor`` times as many cells per axis."""
        hs = 0.5 * self.d_signal * self.signal_axis.size
        hi = 0.5 * self.d_idler * self.idler_axis.size
        cs = 0.5 * (self.signal_axis[0] + self.signal_axis[-1])
        ci = 0.5 * (self.idler_axis[0] + self.idler_axis[-1])
        return FrequencyGrid(
            cs + _cell_centres(hs, factor * self.signal_axis.size),
            ci + _cell_centres(hi, factor * self.idler_axis.size),
        )


def _cell_centres(half_span: float, n: int) -> np.ndarray:
    if n < 2:
        raise DomainError("n_points must be at least 2")
    if not half_span > 0:
        raise DomainError(f"half span must be positive, got {half_span}")
    h = 2.0 * half_span / n
    return -half_span + h * (np.arange(n) + 0.5)


def band_half_widths(spec: SourceSpec, span_factor: float = DEFAULT_SPAN_FACTOR) -> tuple[float, float]:
    """Half-widths (rad/s) kept around the pump ridge and the phasematching ridge.

    The amplitude factorises into pump(ws + wi) * pm(ws sin θ + wi cos θ);
    each factor is kept out to ``span_factor`` intensity FWHMs. Sinc
    sidelobes decay slowly, so the phasematching band is SINC_SPAN_FACTOR
    FWHMs wide for sinc sources.
    """
    wp = wavelength_bandwidth_to_angular(spec.pump_center_wavelength, spec.pump_fwhm)
    wm = wavelength_bandwidth_to_angular(spec.photon_center_wavelength, spec.pm_fwhm)
    pm_factor = span_factor
    if spec.phasematching_shape is PhasematchingShape.SINC:
        pm_factor = max(span_factor, SINC_SPAN_FACTOR)
    return span_factor * wp, pm_factor * wm


def support_window(
    spec: SourceSpec,
    signal_range: tuple[float, float] | None = None,
    idler_range: tuple[float, float] | None = None,
    span_factor: float = DEFAULT_SPAN_FACTOR,
) -> tuple[float, float, float, float] | None:
    """Bounding box (s_lo, s_hi, i_lo, i_hi) of the spectrum's support.

    The support is the parallelogram where both the pump and phasematching
    factors are non-negligible, optionally cut to the given detuning ranges.
    Ridges parallel to the pump (θ = 45°) are unbounded and get clipped at
    MAX_SPAN_FACTOR band widths. Returns None when the cut leaves nothing.
    """
    ku, kv = band_half_widths(spec, span_factor)
    cap = MAX_SPAN_FACTOR * max(ku, kv)
    s_lo, s_hi = signal_range if signal_range is not None else (-cap, cap)
    i_lo, i_hi = idler_range if idler_range is not None else (-cap, cap)
    t = math.radians(spec.theta)
    # half-planes n . x <= d
    planes = [
        ((-1.0, 0.0), -s_lo), ((1.0, 0.0), s_hi),
        ((0.0, -1.0), -i_lo), ((0.0, 1.0), i_hi),
        ((1.0, 1.0), ku), ((-1.0, -1.0), ku),
        ((math.sin(t), math.cos(t)), kv), ((-math.sin(t), -math.cos(t)), kv),
    ]
    normals = np.array([p[0] for p in planes])
    bounds = np.array([p[1] for p in planes])
    tol = 1e-9 * cap
    vertices = []
    for j in range(len(planes)):
        for k in range(j + 1, len(planes)):
            m = normals[[j, k]]
            if abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]) < 1e-12:
                continue
            x = np.linalg.solve(m, bounds[[j, k]])
            if np.all(normals @ x <= bounds + tol):
                vertices.append(x)
    if not vertices:
        return None
    v = np.array(vertices)
    return float(v[:, 0].min()), float(v[:, 0].max()), float(v[:, 1].min()), float(v[:, 1].max())


def source_half_spans(spec: SourceSpec, span_factor: float = DEFAULT_SPAN_FACTOR) -> tuple[float, float]:
    """Half-widths (rad/s) of the detuning window holding the unfiltered spectrum."""
    s_lo, s_hi, i_lo, i_hi = support_window(spec, span_factor=span_factor)
    return max(-s_lo, s_hi), max(-i_lo, i_hi)


def default_grid(
    spec: SourceSpec,
    n_points: int | None = None,
    span_factor: float = DEFAULT_SPAN_FACTOR,
) -> FrequencyGrid:
    """Square grid over the bounding box of the source support.

    ``n_points`` defaults to DEFAULT_GRID_POINTS, or SINC_GRID_POINTS for
    sinc phasematching whose box is several times wider.
    """
    if n_points is None:
        sinc_pm = spec.phasematching_shape is PhasematchingShape.SINC
        n_points = SINC_GRID_POINTS if sinc_pm else DEFAULT_GRID_POINTS
    hs, hi = source_half_spans(spec, span_factor)
    return FrequencyGrid.centered(hs, hi, n_points)


@dataclass(frozen=True)
class JointSpectrum:
    """Complex amplitude sampled on a :class:`FrequencyGrid` (axis 0 signal, axis 1 idler)."""

    grid: FrequencyGrid
    amplitude: np.ndarray
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        amp = np.asarray(self.amplitude)
        if amp.shape != self.grid.n_points:
            raise GridError(f"amplitude shape {amp.shape} does not match grid {self.grid.n_points}")
        amp = amp.copy()
        amp.setflags(write=False)
        object.__setattr__(self, "amplitude", amp)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    @property
    def mass(self) -> float:
        """Midpoint-rule integral of |f|^2."""
        return float(self.intensity.sum() * self.grid.cell_area)

    def normalize(self) -> "JointSpectrum":
        m = self.mass
        if not m > 0:
            raise DomainError("cannot normalise a spectrum with zero mass")
        return JointSpectrum(self.grid, self.amplitude / math.sqrt(m), self.provenance)

    def transpose(self) -> "JointSpectrum":
        grid = FrequencyGrid(self.grid.idler_axis, self.grid.signal_axis)
        return JointSpectrum(grid, self.amplitude.T, self.provenance)

    def border_fraction(self) -> float:
        """Fraction of |f|^2 mass in the outermost ring of cells."""
        inten = self.intensity
        total = inten.sum()
        if total == 0:
            return 0.0
        inner = inten[1:-1, 1:-1].sum()
        return float((total - inner) / total)

    def to_csv(self, path, sidecar: bool = True) -> None:
        """Write |f|^2 with both detuning axes as header rows.

        Row 1 is ``signal_detuning_rad_s`` followed by the signal axis, row 2
        ``idler_detuning_rad_s`` and the idler axis; the intensity matrix
        follows row-major with signal as the row index.
        """
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["signal_detuning_rad_s", *map(repr, self.grid.signal_axis.tolist())])
            writer.writerow(["idler_detuning_rad_s", *map(repr, self.grid.idler_axis.tolist())])
            for row in self.intensity:
                writer.writerow(map(repr, row.tolist()))
        if sidecar:
            meta = {"format": "pairfilter-jsi", "version": 1, **self.provenance}
            path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True))

    @classmethod
    def from_csv(cls, path) -> "JointSpectrum":
        """Read a file written by :meth:`to_csv`; amplitudes are sqrt(intensity)."""
        path = Path(path)
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
        if len(rows) < 4 or rows[0][0] != "signal_detuning_rad_s" or rows[1][0] != "idler_detuning_rad_s":
            raise ValueError(f"{path}: missing axis header rows")
        ws = np.array(rows[0][1:], dtype=float)
        wi = np.array(rows[1][1:], dtype=float)
        body = np.array(rows[2:], dtype=float)
        provenance = {}
        meta = path.with_suffix(".json")
        if meta.exists():
            provenance = json.loads(meta.read_text())
            provenance.pop("format", None)
            provenance.pop("version", None)
        return cls(FrequencyGrid(ws, wi), np.sqrt(body), provenance)


def build_jsa(
    spec: SourceSpec,
    grid: FrequencyGrid | None = None,
    check_truncation: str = "warn",
) -> JointSpectrum:
    """Sample and normalise the pump-envelope times phasematching amplitude.

    ``check_truncation`` is one of "warn", "raise", or "ignore"; it governs
    what happens when at least 0.1% of the mass sits in the border cells.
    """
    if grid is None:
        grid = default_grid(spec)
    ws, wi = grid.mesh()
    jsa = JointSpectrum(
        grid, source_amplitude(spec, ws, wi), {"source": spec.to_dict()}
    ).normalize()
    check_border(jsa, check_truncation)
    return jsa


def check_border(jsa: JointSpectrum, mode: str = "warn") -> None:
    if mode == "ignore":
        return
    frac = jsa.border_fraction()
    if frac >= TRUNCATION_MASS:
        msg = f"{frac:.2%} of the spectral mass lies in the border cells; widen the grid"
        if mode == "raise":
            raise GridError(msg)
        warnings.warn(msg, TruncationWarning, stacklevel=3)


def filter_offset(filt: FilterSpec, photon_center_nm: float) -> float:
    """Angular detuning (rad/s) of the filter centre from the photon centre."""
    return 2.0 * math.pi * SPEED_OF_LIGHT * (1.0 / (filt.center_wavelength * 1e-9) - 1.0 / (photon_center_nm * 1e-9))


def filter_amplitude(filt: FilterSpec, detuning) -> np.ndarray:
    """Amplitude transmission at detuning(s) from the filter centre (rad/s)."""
    detuning = np.asarray(detuning, dtype=float)
    if filt.is_none:
        return np.ones_like(detuning)
    fwhm_w = filt.fwhm_angular
    if filt.shape is FilterShape.GAUSSIAN:
        return np.exp(-(detuning**2) / (4.0 * filter_sigma(fwhm_w) ** 2))
    return (np.abs(detuning) <= 0.5 * fwhm_w).astype(float)


def _edge_cells(filt: FilterSpec, axis: np.ndarray):
    """Covered fraction and covered-part centre of each cell under a flat-top passband."""
    h = axis[1] - axis[0]
    half = 0.5 * filt.fwhm_angular
    lo = np.maximum(axis - 0.5 * h, -half)
    hi = np.minimum(axis + 0.5 * h, half)
    frac = np.clip((hi - lo) / h, 0.0, 1.0)
    frac[(axis - 0.5 * h >= -half) & (axis + 0.5 * h <= half)] = 1.0
    return frac, 0.5 * (lo + hi)


def filter_on_axis(filt: FilterSpec, axis: np.ndarray) -> np.ndarray:
    """Cell-wise amplitude transmission on a uniform grid axis.

    Rectangular passbands carry fractional edge cells: the amplitude is the
    square root of the covered cell fraction, so the intensity integral of
    every cell is exact.
    """
    axis = np.asarray(axis, dtype=float)
    if filt.shape is not FilterShape.RECTANGULAR:
        return filter_amplitude(filt, axis)
    return np.sqrt(_edge_cells(filt, axis)[0])


def _flat_top(amp: np.ndarray, filt: FilterSpec, axis: np.ndarray, dim: int) -> np.ndarray:
    """Flat-top filter along ``dim`` with edge cells sampled at their covered part.

    Edge-cell amplitudes are linearly interpolated to the centre of the part
    of the cell inside the passband, which makes the filtered integral
    second order in the cell size.
    """
    frac, centre = _edge_cells(filt, axis)
    out = np.moveaxis(amp * 1.0, dim, 0)
    src = np.moveaxis(amp, dim, 0)
    h = axis[1] - axis[0]
    for k in np.flatnonzero((frac > 0) & (frac < 1)):
        t = (centre[k] - axis[k]) / h
        j = k + (1 if t > 0 else -1)
        if 0 <= j < axis.size:
            out[k] = (1 - abs(t)) * src[k] + abs(t) * src[j]
    out = out * np.sqrt(frac).reshape((-1,) + (1,) * (amp.ndim - 1))
    return np.moveaxis(out, 0, dim)


def _photon_centers(jsa: JointSpectrum, signal_center, idler_center):
    src = jsa.provenance.get("source", {})
    if signal_center is None:
        signal_center = src.get("signal_center_wavelength")
    if idler_center is None:
        idler_center = src.get("idler_center_wavelength")
    return signal_center, idler_center


def apply_filters(
    jsa: JointSpectrum,
    fs: FilterSpec,
    fi: FilterSpec,
    signal_center: float | None = None,
    idler_center: float | None = None,
) -> JointSpectrum:
    """Multiply by the signal and idler filter amplitudes; no renormalisation.

    Filters are positioned relative to the photon centre wavelengths, taken
    from the arguments or else from the spectrum's source provenance. Without
    either, filters are assumed centred on the photons.
    """
    centers = _photon_centers(jsa, signal_center, idler_center)
    amp = jsa.amplitude
    axes = (jsa.grid.signal_axis, jsa.grid.idler_axis)
    for dim, filt in enumerate((fs, fi)):
        if filt.is_none:
            continue
        shift = filter_offset(filt, centers[dim]) if centers[dim] is not None else 0.0
        axis = axes[dim] - shift
        if filt.shape is FilterShape.RECTANGULAR:
            amp = _flat_top(amp, filt, axis, dim)
        else:
            t = filter_amplitude(filt, axis)
            amp = amp * (t[:, None] if dim == 0 else t[None, :])
    prov = dict(jsa.provenance)
    prov["signal_filter"] = fs.to_dict()
    prov["idler_filter"] = fi.to_dict()
    return JointSpectrum(jsa.grid, amp, prov)


def jsi_tilt_angle(jsa: JointSpectrum) -> float:
    """Orientation (degrees in [0, 180)) of the major axis of |f|^2.

    Measured with the same convention as the phasematching angle: a ridge
    along w_i = -tan(phi) w_s has tilt phi, so the pump envelope sits at 45°.
    """
    ws, wi = jsa.grid.mesh()
    w = jsa.intensity
    total = w.sum()
    ms = (w * ws).sum() / total
    mi = (w * wi).sum() / total
    css = (w * (ws - ms) ** 2).sum() / total
    cii = (w * (wi - mi) ** 2).sum() / total
    csi = (w * (ws - ms) * (wi - mi)).sum() / total
    vals, vecs = np.linalg.eigh(np.array([[css, csi], [csi, cii]]))
    us, ui = vecs[:, np.argmax(vals)]
    return math.degrees(math.atan2(-ui, us)) % 180.0
