"""Weak-coupling threshold eigenvalues of -d^2/dx^2 + U + lambda alpha V(alpha x).

U is a compactly supported potential with a zero-energy resonance. As lambda
goes to zero a new eigenvalue can emerge from the edge of the continuous
spectrum. This package computes the half-bound state of U, predicts the
leading asymptotics of that eigenvalue, measures it by shooting, and
certifies it with explicit quasimodes.
"""

import types as _types

from .errors import (
    ConditionsViolated, ConfigError, DiscontinuousAtZero, InsufficientData, NoBracket,
    NoEigenvalue, NoResonance, NotFound, NotW12, OutOfTable, QuadratureFailure,
    StepFailure, ThresholdLabError,
)
from .harness import Experiment, SweepReport, SweepRow, fit_rate, lambda_grid, sweep, verify
from .potential import (
    Harmonic, PiecewisePotential, PotentialPiece, ScalingFamily, alpha_at,
    load_potential, load_scaling, scaled_potential, square_well,
)
from .prop import FundamentalPair, solve_inhomogeneous, transfer
from .quasimode import Quasimode, build_quasimode, residual_norm
from .resonance import HalfBoundState, detect_resonance, tune_to_resonance
from .spectrum import ScaledProblem, find_negative_eigenvalues, threshold_eigenvalue
from .threshold import PointInteraction, ThresholdPrediction, point_interaction_eigenvalue, predict

__version__ = "0.1.0"

__all__ = sorted(n for n, v in globals().items()
                 if not n.startswith("_") and not isinstance(v, _types.ModuleType))
