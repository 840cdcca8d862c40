"""Energy landscape and metastable dynamics of the mean-field Potts model.

The package computes, for q >= 3 spin values on the complete graph:

  * the exact potential F_beta = H + S/beta on the simplex, its
    gradient, Hessian and closed-form Hessian spectra (`potential`),
  * every critical point and all critical temperatures
    beta_1 < beta_2 < beta_3 <= beta_4 = q, with certified brackets and
    a fixed-step verification suite up to q = 6500 (`critical`),
  * sublevel-set wells, saddle gates, minimax heights and the
    mean-field free energy with its first-order kink (`landscape`),
  * the exact empirical-magnetization Markov chain, hitting times by
    linear solve, trajectory simulation, a spin-level oracle and the
    cyclic decomposition of the generator (`chain`),
  * sharp mean-transition-time constants and the reduced inter-well
    chains (`ek`),
  * a deterministic file-emitting CLI (`cwpotts ...`).
"""

__version__ = "0.1.0"

from . import chain, critical, ek, family, landscape, potential, simplex
from .critical import (
    CriticalPoint,
    TemperatureProfile,
    beta_c,
    beta_m,
    enumerate_critical_points,
    temperature_profile,
    verify_appendix,
)
from .errors import (
    CwpottsError,
    DomainError,
    InvariantViolation,
    NoSolutionError,
    RegimeError,
    ResolutionError,
    SizeError,
    StructuralError,
)
from .family import RootBracket, beta_s, find_m, solve_uv
from .simplex import SimplexPoint, family_point, uniform_point

__all__ = [
    "__version__",
    "chain",
    "critical",
    "ek",
    "family",
    "landscape",
    "potential",
    "simplex",
    "CriticalPoint",
    "TemperatureProfile",
    "beta_c",
    "beta_m",
    "beta_s",
    "enumerate_critical_points",
    "temperature_profile",
    "verify_appendix",
    "RootBracket",
    "find_m",
    "solve_uv",
    "SimplexPoint",
    "family_point",
    "uniform_point",
    "CwpottsError",
    "DomainError",
    "InvariantViolation",
    "NoSolutionError",
    "RegimeError",
    "ResolutionError",
    "SizeError",
    "StructuralError",
]
