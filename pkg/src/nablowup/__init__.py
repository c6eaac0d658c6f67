"""Blow-up desingularization of planar asymptotically autonomous ODEs and
Lyapunov-Perron computation of the resulting stable manifolds."""
from .blowdown import blow_down_manifold_point, classical_history, reconstruct_manifolds
from .errors import (AxisApproach, EtaRatioTooSmall, MaxIter, NablowupError, NoContraction,
                     NonHyperbolic, NonzeroRemainder, OutOfBall, ScenarioError, SingularChart,
                     UnboundedTail)
from .forcing import ForcingFn
from .integrator import integrate_desingularized, integrate_original, lyapunov_exponents
from .linearflow import HyperbolicSplit, spectral_split
from .lpsolver import LPConfig, build_manifold_chart, solve_fixed_point
from .nonlinear import DelayRHS, build_rhs
from .polyfield import (BlowupChart, Poly, PolyMap2, axis_equilibria_and_linearize, blowup_pullback,
                        desingularize, translate_equilibrium)
from .scenario import build_pipeline, load_scenario
from .segspace import Segment
from .timewarp import WarpPair

__version__ = "0.1.0"
