"""Command-line front end.

Every subcommand reads one JSON configuration document (``--config``), lets
a few flags override it, and writes its outputs next to a JSON manifest that
records the full resolved configuration. Re-running from a manifest's
``configuration`` block reproduces the CSV outputs byte for byte.

Configuration keys (all optional unless a subcommand needs them)::

    source       preset name ("fig2", "fig4") or a SourceSpec object; the
                 signal/idler centres default to twice the pump wavelength
    filters      {"signal": FilterSpec, "idler": FilterSpec}      (metrics)
    engine       "analytic" | "numeric"; unset means analytic where it is
                 valid (Gaussian filters and phasematching), numeric otherwise
    grid_points  points per axis for the numeric engine
    seed         optimizer / synthetic-data seed
    workers      thread count for sweeps and bound curves
    sweep        {"shape", "fwhm_nm": range}
    heatmap      {"shape", "signal_fwhm_nm": range, "idler_fwhm_nm": range}
    bound        {"shape", "pm_fwhm", "theta_deg": range, "n_starts",
                  "coarse_points", "phasematching"}
    analyze      {"jsi", "counts", "reference", "jitter_fwhm_ps",
                  "dispersion_ps_per_nm", "time_window_nm": [s, i]}

A range is a list of numbers or {"start", "stop", "num", "scale"} with
scale "linear" (default) or "log".
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, analytic, experiment, numeric, optimize, presets
from .core import FilterShape, FilterSpec, SourceSpec

log = logging.getLogger("pairfilter")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2

PRESETS = {"fig2": presets.FIG2_SOURCE, "fig4": presets.FIG4_SOURCE}
COMMANDS = ("metrics", "sweep", "heatmap", "bound", "analyze")


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors share the config exit code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    command: str
    configuration: dict
    version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))
    outputs: dict = field(default_factory=dict)

    def add_output(self, path: Path) -> None:
        self.outputs[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


# configuration parsing


def _source(cfg) -> SourceSpec:
    src = cfg.get("source", "fig2")
    if isinstance(src, str):
        if src not in PRESETS:
            raise ConfigError(f"unknown source preset {src!r}; known: {sorted(PRESETS)}")
        return PRESETS[src]
    if not isinstance(src, dict):
        raise ConfigError("source must be a preset name or an object")
    data = dict(src)
    if "pump_center_wavelength" in data:
        lam = 2.0 * float(data["pump_center_wavelength"])
        data.setdefault("signal_center_wavelength", lam)
        data.setdefault("idler_center_wavelength", lam)
    try:
        return SourceSpec.from_dict(data)
    except TypeError as exc:
        raise ConfigError(f"bad source: {exc}") from None


def _filter(data, center: float) -> FilterSpec:
    if data is None:
        return FilterSpec.none(center)
    data = dict(data)
    data.setdefault("center_wavelength", center)
    try:
        return FilterSpec.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad filter {data}: {exc}") from None


def _range(spec, name: str) -> np.ndarray:
    if spec is None:
        raise ConfigError(f"missing range {name!r}")
    if isinstance(spec, list):
        values = np.asarray(spec, dtype=float)
    elif isinstance(spec, dict):
        try:
            start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
        except KeyError as exc:
            raise ConfigError(f"range {name!r} needs start, stop and num") from exc
        scale = spec.get("scale", "linear")
        if scale == "linear":
            values = np.linspace(start, stop, num)
        elif scale == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError(f"log range {name!r} needs positive ends")
            values = np.geomspace(start, stop, num)
        else:
            raise ConfigError(f"range {name!r}: unknown scale {scale!r}")
    else:
        raise ConfigError(f"range {name!r} must be a list or an object")
    if values.size == 0 or np.any(np.diff(values) <= 0):
        raise ConfigError(f"range {name!r} must be non-empty and strictly increasing")
    return values


def _shape(section: dict, default: str) -> FilterShape:
    try:
        return FilterShape(section.get("shape", default))
    except ValueError:
        raise ConfigError(f"unknown filter shape {section.get('shape')!r}") from None


def load_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}:{exc.lineno}: invalid JSON: {exc.msg}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    for key in ("engine", "seed", "grid_points"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    cfg.setdefault("engine", None)
    cfg.setdefault("seed", 0)
    cfg.setdefault("grid_points", 512)
    cfg.setdefault("workers", 1)
    if cfg["engine"] is not None and cfg["engine"] not in optimize.ENGINES:
        raise ConfigError(f"unknown engine {cfg['engine']!r}")
    return cfg


def _resolved(cfg: dict, spec: SourceSpec | None) -> dict:
    out = dict(cfg)
    if spec is not None:
        out["source"] = spec.to_dict()
    return out


def _engine(cfg: dict, spec: SourceSpec, *shapes) -> str:
    if cfg["engine"] is not None:
        return cfg["engine"]
    try:
        optimize.check_engine("analytic", spec, *shapes)
    except analytic.UnsupportedShapeError:
        return "numeric"
    return "analytic"


# subcommands


def cmd_metrics(cfg: dict, out: Path | None) -> int:
    spec = _source(cfg)
    filters = cfg.get("filters", {})
    fs = _filter(filters.get("signal"), spec.signal_center_wavelength)
    fi = _filter(filters.get("idler"), spec.idler_center_wavelength)
    cfg = dict(cfg, engine=_engine(cfg, spec, fs.shape, fi.shape))
    m = optimize.evaluate(spec, fs, fi, cfg["engine"], int(cfg["grid_points"]))
    text = json.dumps(m.to_dict(), sort_keys=True)
    print(text)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n")
        man = RunManifest("metrics", _resolved(cfg, spec))
        man.add_output(out)
        man.write(_manifest_path(out))
    return EXIT_OK


def _manifest_path(out: Path) -> Path:
    return out.with_name(out.stem + ".manifest.json")


def _finish(command: str, cfg: dict, spec: SourceSpec | None, out: Path, writer) -> int:
    out.parent.mkdir(parents=True, exist_ok=True)
    writer(out)
    man = RunManifest(command, _resolved(cfg, spec))
    man.add_output(out)
    man.write(_manifest_path(out))
    log.info("wrote %s", out)
    return EXIT_OK


def cmd_sweep(cfg: dict, out: Path) -> int:
    spec = _source(cfg)
    sec = cfg.get("sweep", {})
    shape = _shape(sec, "rectangular")
    fwhm = _range(sec.get("fwhm_nm"), "sweep.fwhm_nm")
    cfg = dict(cfg, engine=_engine(cfg, spec, shape))
    res = optimize.sweep_equal_filters(
        spec, shape, fwhm, cfg["engine"], int(cfg["grid_points"]), int(cfg["workers"])
    )
    return _finish("sweep", cfg, spec, out, res.to_csv)


def cmd_heatmap(cfg: dict, out: Path) -> int:
    spec = _source(cfg)
    sec = cfg.get("heatmap", {})
    shape = _shape(sec, "gaussian")
    ws = _range(sec.get("signal_fwhm_nm"), "heatmap.signal_fwhm_nm")
    wi = _range(sec.get("idler_fwhm_nm"), "heatmap.idler_fwhm_nm")
    cfg = dict(cfg, engine=_engine(cfg, spec, shape))
    res = optimize.sweep_filter_grid(
        spec, shape, ws, wi, cfg["engine"], int(cfg["grid_points"]), int(cfg["workers"])
    )
    return _finish("heatmap", cfg, spec, out, res.to_csv)


def cmd_bound(cfg: dict, out: Path) -> int:
    sec = cfg.get("bound", {})
    shape = _shape(sec, "gaussian")
    thetas = _range(sec.get("theta_deg", {"start": 0, "stop": 179, "num": 180}), "bound.theta_deg")
    pm_fwhm = float(sec.get("pm_fwhm", presets.BOUND_PM_FWHM))
    points = optimize.bound_curve(
        thetas,
        pm_fwhm,
        shape,
        workers=int(cfg["workers"]),
        engine=cfg["engine"],
        n_starts=int(sec.get("n_starts", optimize.N_STARTS)),
        coarse_points=int(sec.get("coarse_points", optimize.COARSE_POINTS)),
        seed=int(cfg["seed"]),
        n_points=int(sec.get("grid_points", 128)),
        phasematching=sec.get("phasematching"),
    )
    cfg = dict(cfg, bound=dict(sec, pm_fwhm=pm_fwhm, theta_deg=thetas.tolist(), shape=shape.value))
    return _finish("bound", cfg, None, out, lambda p: optimize.bound_to_csv(points, p))


def cmd_analyze(cfg: dict, out: Path | None) -> int:
    sec = cfg.get("analyze", {})
    if not sec.get("jsi") and not sec.get("counts"):
        raise ConfigError("analyze needs a JSI file (--jsi) or a counts file (--counts)")
    report = {"configuration": cfg, "jsi_format_version": experiment.JSI_FORMAT_VERSION}
    if sec.get("jsi"):
        jsi = experiment.load_jsi(sec["jsi"])
        window = sec.get("time_window_nm")
        report["jsi"] = experiment.analyze_jsi(
            jsi,
            sec.get("jitter_fwhm_ps"),
            sec.get("dispersion_ps_per_nm"),
            tuple(window) if window is not None else None,
        )
    if sec.get("counts"):
        records = experiment.load_counts(sec["counts"])
        report["counts"] = experiment.analyze_counts(records, sec.get("reference"))
    text = json.dumps(report, indent=2, sort_keys=True)
    if out is None:
        print(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n")
        man = RunManifest("analyze", cfg)
        man.add_output(out)
        man.write(_manifest_path(out))
    return EXIT_OK


HANDLERS = {
    "metrics": cmd_metrics,
    "sweep": cmd_sweep,
    "heatmap": cmd_heatmap,
    "bound": cmd_bound,
    "analyze": cmd_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON configuration document")
    common.add_argument("--engine", choices=optimize.ENGINES, help="override the configured engine")
    common.add_argument("--out", metavar="PATH", type=Path, help="output file (a manifest is written beside it)")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--grid", dest="grid_points", type=int, metavar="N", help="grid points per axis")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="pairfilter", description="Filtered photon-pair source metrics and bounds.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("metrics", parents=[common], help="metrics of one source/filter configuration")
    sub.add_parser("sweep", parents=[common], help="equal-filter bandwidth sweep (CSV)")
    sub.add_parser("heatmap", parents=[common], help="signal x idler filter bandwidth grid (CSV)")
    sub.add_parser("bound", parents=[common], help="best symmetrized fidelity versus angle (CSV)")
    p = sub.add_parser("analyze", parents=[common], help="analyse a measured JSI and/or count file")
    p.add_argument("--jsi", metavar="PATH", help="joint spectral intensity CSV")
    p.add_argument("--counts", metavar="PATH", help="counts CSV (label,C,S_s,S_i)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args)
        if args.command == "analyze":
            sec = cfg.setdefault("analyze", {})
            if args.jsi:
                sec["jsi"] = args.jsi
            if args.counts:
                sec["counts"] = args.counts
        out = args.out
        if out is None and args.command in ("sweep", "heatmap", "bound"):
            raise ConfigError(f"{args.command} needs --out PATH")
        return HANDLERS[args.command](cfg, out)
    except (ValueError, OSError, KeyError, TypeError) as exc:
        msg = str(exc)
        if isinstance(exc, analytic.UnsupportedShapeError) and "unsupported shape" not in msg:
            msg = f"unsupported shape: {msg}"
        print(f"pairfilter: error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, numeric.UndefinedEfficiencyError) as exc:
        print(f"pairfilter: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
