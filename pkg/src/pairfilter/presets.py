"""Source settings used throughout the examples and tests."""

from .core import SourceSpec

PUMP_WAVELENGTH = 778.0
PHOTON_WAVELENGTH = 2 * PUMP_WAVELENGTH
LN_THETA = 60.5

# lithium niobate waveguide of the filtering experiment: 0.42 nm pump, 0.46 nm phasematching
FIG2_SOURCE = SourceSpec.degenerate(PUMP_WAVELENGTH, 0.42, 0.46, LN_THETA)

# pump bandwidth chosen for the best symmetrized fidelity at 1.5 nm phasematching
FIG4_SOURCE = SourceSpec.degenerate(
    PUMP_WAVELENGTH, 0.38, 1.5, LN_THETA, phasematching_shape="gaussian_approx"
)
# linear filter-bandwidth axes (nm) of the signal/idler heatmaps
FIG4_FILTER_RANGE = (0.1, 10.0)

BOUND_PM_FWHM = 1.5
