"""Angle-of-arrival estimation with switched-beam cross-correlation (XSBS)
and the Bartlett, Capon and MUSIC baselines."""

from .array_model import (
    ArrayGeometry,
    WeightVector,
    array_factor,
    hpbw,
    steering_vector,
    uniform_weights,
)
from .chebyshev import BeamGrid, build_beam_grid, chebyshev_weights, steer
from .errors import AoaLabError, ConfigError, NumericalError
from .estimators import (
    AoAEstimate,
    bartlett,
    capon,
    correlation_coefficients,
    cross_correlation,
    detect_peaks,
    music,
    xsbs,
)
from .numerics import EigenDecomposition, hermitian_eig, sample_covariance, solve_hermitian
from .scene import Source, SnapshotMatrix, beam_output, omni_weights, synthesize
from .spectrum import Spectrum

__version__ = "0.1.0"

__all__ = [
    "AoAEstimate",
    "AoaLabError",
    "ArrayGeometry",
    "BeamGrid",
    "ConfigError",
    "EigenDecomposition",
    "NumericalError",
    "SnapshotMatrix",
    "Source",
    "Spectrum",
    "WeightVector",
    "array_factor",
    "bartlett",
    "beam_output",
    "build_beam_grid",
    "capon",
    "chebyshev_weights",
    "correlation_coefficients",
    "cross_correlation",
    "detect_peaks",
    "hermitian_eig",
    "hpbw",
    "music",
    "omni_weights",
    "sample_covariance",
    "solve_hermitian",
    "steer",
    "steering_vector",
    "synthesize",
    "uniform_weights",
    "xsbs",
]
