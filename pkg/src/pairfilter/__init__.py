"""Heralding efficiency, purity and fidelity of spectrally filtered photon-pair sources."""

__version__ = "0.1.0"

from .analytic import FilterMetrics, metrics, pef_max
from .core import (
    DomainError,
    FilterShape,
    FilterSpec,
    FrequencyGrid,
    JointSpectrum,
    PhasematchingShape,
    SourceSpec,
    apply_filters,
    build_jsa,
)
from .numeric import filtered_spectrum, metrics_numeric
from .optimize import bound_curve, optimize_fidelity_at_angle, sweep_equal_filters, sweep_filter_grid

__all__ = [
    "DomainError",
    "FilterMetrics",
    "FilterShape",
    "FilterSpec",
    "FrequencyGrid",
    "JointSpectrum",
    "PhasematchingShape",
    "SourceSpec",
    "apply_filters",
    "bound_curve",
    "build_jsa",
    "metrics",
    "filtered_spectrum",
    "metrics_numeric",
    "optimize_fidelity_at_angle",
    "pef_max",
    "sweep_equal_filters",
    "sweep_filter_grid",
]
