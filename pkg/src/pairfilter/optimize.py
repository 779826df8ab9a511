"""Bandwidth sweeps and the fidelity bound versus phasematching angle."""

from __future__ import annotations

import csv
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from . import analytic, numeric
from .analytic import FilterMetrics, UnsupportedShapeError
from .core import (
    DEFAULT_GRID_POINTS,
    FilterShape,
    FilterSpec,
    PhasematchingShape,
    SourceSpec,
    angular_bandwidth_to_wavelength,
    wavelength_bandwidth_to_angular,
)
from .presets import PUMP_WAVELENGTH

log = logging.getLogger(__name__)

ENGINES = ("analytic", "numeric")

# search box for every bandwidth, as multiples of the phasematching FWHM
BOX_LOW = 1e-2
BOX_HIGH = 1e3
N_STARTS = 8
COARSE_POINTS = 13
FATOL = 1e-9
MAX_ITER = 4000


def check_engine(engine: str, spec: SourceSpec, *shapes: FilterShape) -> None:
    """Reject engine/shape combinations without a valid evaluation route."""
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    if engine == "analytic":
        if spec.phasematching_shape is PhasematchingShape.SINC:
            raise UnsupportedShapeError("sinc phasematching needs the numeric engine")
        for shape in shapes:
            if FilterShape(shape) is FilterShape.RECTANGULAR:
                raise UnsupportedShapeError("unsupported shape for the analytic engine: rectangular")


def evaluate(
    spec: SourceSpec,
    fs: FilterSpec,
    fi: FilterSpec,
    engine: str = "analytic",
    n_points: int = DEFAULT_GRID_POINTS,
) -> FilterMetrics:
    check_engine(engine, spec, fs.shape, fi.shape)
    if engine == "analytic":
        return analytic.metrics(spec, fs, fi)
    return numeric.metrics_numeric(spec, fs, fi, n_points=n_points, check_truncation="ignore")


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _make_filter(shape, center: float, fwhm: float) -> FilterSpec:
    shape = FilterShape(shape)
    if shape is FilterShape.NONE or math.isinf(fwhm):
        return FilterSpec.none(center)
    return FilterSpec(shape, center, fwhm)


@dataclass
class SweepResult:
    """Metrics on a 1D or 2D axis grid; ``metrics`` has the shape of the axes."""

    axes: dict[str, np.ndarray]
    metrics: np.ndarray
    engine: str
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, values in self.axes.items():
            values = np.asarray(values, dtype=float)
            if values.ndim != 1 or np.any(np.diff(values) <= 0):
                raise ValueError(f"axis {name} must be strictly increasing")
            self.axes[name] = values
        shape = tuple(v.size for v in self.axes.values())
        if self.metrics.shape != shape:
            raise ValueError(f"metrics shape {self.metrics.shape} does not match axes {shape}")

    def field(self, name: str) -> np.ndarray:
        """Array of one FilterMetrics field over the sweep."""
        return np.vectorize(lambda m: getattr(m, name), otypes=[float])(self.metrics)

    def rows(self):
        names = list(self.axes)
        for idx in itertools.product(*(range(v.size) for v in self.axes.values())):
            point = [self.axes[n][k] for n, k in zip(names, idx)]
            yield point + self.metrics[idx].as_row()

    def header(self) -> list[str]:
        return list(self.axes) + FilterMetrics.field_names()

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header())
            for row in self.rows():
                writer.writerow([repr(float(v)) for v in row])


def sweep_equal_filters(
    spec: SourceSpec,
    shape: FilterShape | str,
    fwhm_list,
    engine: str = "numeric",
    n_points: int = DEFAULT_GRID_POINTS,
    workers: int = 1,
) -> SweepResult:
    """Identical signal and idler filters swept over ``fwhm_list`` (nm)."""
    check_engine(engine, spec, shape)
    fwhm = np.asarray(fwhm_list, dtype=float)

    def point(w):
        fs = _make_filter(shape, spec.signal_center_wavelength, w)
        fi = _make_filter(shape, spec.idler_center_wavelength, w)
        return evaluate(spec, fs, fi, engine, n_points)

    out = np.empty(fwhm.size, dtype=object)
    out[:] = _map(point, fwhm, workers)
    prov = {"source": spec.to_dict(), "filter_shape": FilterShape(shape).value, "grid_points": n_points}
    return SweepResult({"filter_fwhm_nm": fwhm}, out, engine, prov)


def sweep_filter_grid(
    spec: SourceSpec,
    shape: FilterShape | str,
    fwhm_s_list,
    fwhm_i_list,
    engine: str = "analytic",
    n_points: int = DEFAULT_GRID_POINTS,
    workers: int = 1,
) -> SweepResult:
    """Independent signal and idler filter bandwidths on a 2D grid (axis 0 signal)."""
    check_engine(engine, spec, shape)
    ws = np.asarray(fwhm_s_list, dtype=float)
    wi = np.asarray(fwhm_i_list, dtype=float)

    def point(pair):
        fs = _make_filter(shape, spec.signal_center_wavelength, pair[0])
        fi = _make_filter(shape, spec.idler_center_wavelength, pair[1])
        return evaluate(spec, fs, fi, engine, n_points)

    pairs = list(itertools.product(ws, wi))
    out = np.empty(len(pairs), dtype=object)
    out[:] = _map(point, pairs, workers)
    prov = {"source": spec.to_dict(), "filter_shape": FilterShape(shape).value, "grid_points": n_points}
    return SweepResult(
        {"signal_fwhm_nm": ws, "idler_fwhm_nm": wi}, out.reshape(ws.size, wi.size), engine, prov
    )


def find_kink(x, y, lo: float | None = None, hi: float | None = None) -> float | None:
    """Locate a smoothed upward slope break in a curve.

    A kink where the slope jumps up shows up, once smoothed, as a bump of
    positive curvature on an otherwise concave curve. Returns the abscissa of
    the largest positive curvature inside [lo, hi] when the curvature is
    negative on both sides of that bump, else None.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d2 = np.gradient(np.gradient(y, x), x)
    sel = np.ones_like(x, dtype=bool)
    if lo is not None:
        sel &= x >= lo
    if hi is not None:
        sel &= x <= hi
    idx = np.flatnonzero(sel)
    if idx.size < 3:
        return None
    k = idx[np.argmax(d2[idx])]
    if d2[k] <= 0:
        return None
    if not (np.any(d2[:k] < 0) and np.any(d2[k + 1 :] < 0)):
        return None
    return float(x[k])


@dataclass(frozen=True)
class BoundPoint:
    """Best symmetrized fidelity at one phasematching angle.

    Filter widths at the upper end of the search box are reported as
    ``inf`` (unfiltered) with the matching flag set.
    """

    theta: float
    f_max: float
    pump_fwhm: float
    signal_fwhm: float
    idler_fwhm: float
    purity: float
    eta_s: float
    eta_i: float
    pshe: float = math.nan
    f_s: float = math.nan
    f_i: float = math.nan
    pef: float = math.nan
    signal_unfiltered: bool = False
    idler_unfiltered: bool = False
    converged: bool = True
    n_evaluations: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


class _Objective:
    """Negative f_sym as a function of log bandwidth ratios (pump, signal, idler)."""

    def __init__(self, theta, pm_fwhm, shape, engine, pump_center, n_points, phasematching):
        self.theta = theta
        self.pm_fwhm = pm_fwhm
        self.shape = FilterShape(shape)
        self.engine = engine
        self.pump_center = pump_center
        self.photon = 2.0 * pump_center
        self.pm_w = wavelength_bandwidth_to_angular(self.photon, pm_fwhm)
        self.n_points = n_points
        self.calls = 0
        self.x_max = math.log(BOX_HIGH)
        self.base = SourceSpec.degenerate(pump_center, 1.0, pm_fwhm, theta, phasematching_shape=phasematching)

    def bandwidths(self, x):
        """(pump, signal, idler) FWHMs in nm for log-ratio vector ``x``.

        Filters on the upper face of the box are removed altogether.
        """
        r = np.exp(x)
        pump = angular_bandwidth_to_wavelength(self.pump_center, float(r[0]) * self.pm_w)
        ws = math.inf if x[1] >= self.x_max else float(r[1]) * self.pm_fwhm
        wi = math.inf if x[2] >= self.x_max else float(r[2]) * self.pm_fwhm
        return pump, ws, wi

    def configure(self, pump, ws, wi):
        spec = self.base.replace(pump_fwhm=pump)
        fs = _make_filter(self.shape, self.photon, ws)
        fi = _make_filter(self.shape, self.photon, wi)
        return spec, fs, fi

    def metrics(self, pump, ws, wi) -> FilterMetrics:
        self.calls += 1
        return evaluate(*self.configure(pump, ws, wi), self.engine, self.n_points)

    def __call__(self, x) -> float:
        return -self.metrics(*self.bandwidths(x)).f_sym


def optimize_fidelity_at_angle(
    theta: float,
    pm_fwhm: float,
    shape: FilterShape | str = FilterShape.GAUSSIAN,
    engine: str | None = None,
    pump_center: float = PUMP_WAVELENGTH,
    n_starts: int = N_STARTS,
    coarse_points: int = COARSE_POINTS,
    seed: int = 0,
    n_points: int = 128,
    phasematching: PhasematchingShape | str | None = None,
) -> BoundPoint:
    """Maximise the symmetrized fidelity over pump and filter bandwidths.

    A log-spaced coarse grid over the box [BOX_LOW, BOX_HIGH] x pm bandwidth
    seeds ``n_starts`` bounded Nelder-Mead runs from its best points. Gaussian
    filters use the closed form unless ``engine`` says otherwise;
    rectangular filters always go through the numeric engine on
    ``n_points`` grids. The source is Gaussian-approximated for the analytic
    engine and sinc-phasematched otherwise, unless ``phasematching`` is given.
    """
    shape = FilterShape(shape)
    if engine is None:
        engine = "analytic" if shape is FilterShape.GAUSSIAN else "numeric"
    if phasematching is None:
        phasematching = "gaussian_approx" if engine == "analytic" else "sinc"
    obj = _Objective(theta, pm_fwhm, shape, engine, pump_center, n_points, PhasematchingShape(phasematching))
    lo, hi = math.log(BOX_LOW), math.log(BOX_HIGH)
    bounds = [(lo, hi)] * 3

    axis = np.linspace(lo, hi, coarse_points)
    coarse = [(obj(np.array(x)), x) for x in itertools.product(axis, axis, axis)]
    coarse.sort(key=lambda item: item[0])
    rng = np.random.default_rng(seed)
    step = axis[1] - axis[0]

    best_val, best_x, converged = coarse[0][0], np.array(coarse[0][1]), True
    for val, x0 in coarse[:n_starts]:
        start = np.clip(np.array(x0) + rng.uniform(-0.25, 0.25, 3) * step, lo, hi)
        res = minimize(
            obj,
            start,
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": 1e-6, "fatol": FATOL, "maxiter": MAX_ITER, "initial_simplex": _simplex(start, step, lo, hi)},
        )
        if res.fun < best_val:
            best_val, best_x, converged = res.fun, res.x, bool(res.success)
    if not converged:
        log.warning("optimizer hit its iteration cap at theta=%s; reporting best point found", theta)

    cap = hi - 1e-3
    s_cap, i_cap = bool(best_x[1] >= cap), bool(best_x[2] >= cap)
    pump, ws, wi = obj.bandwidths(best_x)
    m = obj.metrics(pump, ws, wi)
    if s_cap or i_cap:
        opened = obj.metrics(pump, math.inf if s_cap else ws, math.inf if i_cap else wi)
        if opened.f_sym >= m.f_sym:
            m = opened
            ws = math.inf if s_cap else ws
            wi = math.inf if i_cap else wi
    return BoundPoint(
        theta=theta,
        f_max=m.f_sym,
        pump_fwhm=pump,
        signal_fwhm=ws,
        idler_fwhm=wi,
        purity=m.purity,
        eta_s=m.eta_s,
        eta_i=m.eta_i,
        pshe=m.pshe,
        f_s=m.f_s,
        f_i=m.f_i,
        pef=m.pef,
        signal_unfiltered=math.isinf(ws),
        idler_unfiltered=math.isinf(wi),
        converged=converged,
        n_evaluations=obj.calls,
    )


def _simplex(x0, step, lo, hi):
    pts = [x0]
    for k in range(len(x0)):
        p = x0.copy()
        p[k] = p[k] + 0.5 * step if p[k] + 0.5 * step <= hi else p[k] - 0.5 * step
        pts.append(np.clip(p, lo, hi))
    return np.array(pts)


def bound_curve(
    theta_list,
    pm_fwhm: float,
    shape: FilterShape | str = FilterShape.GAUSSIAN,
    workers: int = 1,
    **kwargs,
) -> list[BoundPoint]:
    """:func:`optimize_fidelity_at_angle` for every angle, in input order."""
    return _map(lambda th: optimize_fidelity_at_angle(float(th), pm_fwhm, shape, **kwargs), list(theta_list), workers)


def bound_to_csv(points: list[BoundPoint], path) -> None:
    cols = [
        "theta_deg",
        "f_max",
        "pump_fwhm_nm",
        "signal_fwhm_nm",
        "idler_fwhm_nm",
        "purity",
        "eta_s",
        "eta_i",
        "pshe",
        "f_s",
        "f_i",
        "pef",
        "signal_unfiltered",
        "idler_unfiltered",
        "converged",
    ]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for p in points:
            writer.writerow(
                [
                    repr(p.theta),
                    repr(p.f_max),
                    repr(p.pump_fwhm),
                    repr(p.signal_fwhm),
                    repr(p.idler_fwhm),
                    repr(p.purity),
                    repr(p.eta_s),
                    repr(p.eta_i),
                    repr(p.pshe),
                    repr(p.f_s),
                    repr(p.f_i),
                    repr(p.pef),
                    int(p.signal_unfiltered),
                    int(p.idler_unfiltered),
                    int(p.converged),
                ]
            )
