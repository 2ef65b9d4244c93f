"""Connection coefficients for 2x2 systems with two regular singular points,
with eigenvalue solvers for the ellipsoidal and spheroidal wave equations."""

from . import ellipsoidal, spheroidal
from .core import (RationalTail, SeriesState, ShiftedSystem, SpectralFrame,
                   ThetaResult, TwoPointSystem, build_shifted, frobenius_step,
                   mirrored_shifted, p_vector, series_start, theta_iterate,
                   weight_vector)
from .errors import (ConncoefError, DegenerateFrame, FrameMismatch,
                     InvalidExponent, MatchFailure, NoConvergence,
                     ParityAmbiguous, QuadratureNotConverged, ScanExhausted,
                     SingularJacobian, SingularStep)
from .rootfind import SolverOptions, bracket_scan, broyden2, secant

__version__ = "0.1.0"

__all__ = [
    "RationalTail",
    "TwoPointSystem",
    "SpectralFrame",
    "ShiftedSystem",
    "SeriesState",
    "ThetaResult",
    "build_shifted",
    "mirrored_shifted",
    "series_start",
    "frobenius_step",
    "p_vector",
    "weight_vector",
    "theta_iterate",
    "SolverOptions",
    "secant",
    "bracket_scan",
    "broyden2",
    "ellipsoidal",
    "spheroidal",
    "ConncoefError",
    "FrameMismatch",
    "SingularStep",
    "DegenerateFrame",
    "InvalidExponent",
    "MatchFailure",
    "QuadratureNotConverged",
    "ParityAmbiguous",
    "ScanExhausted",
    "NoConvergence",
    "SingularJacobian",
    "__version__",
]
