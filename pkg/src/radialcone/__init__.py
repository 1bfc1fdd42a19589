"""Finite-difference study of singular radial wave equations near a cone apex.

The package evolves

    u_tt = u_rr + (n-1)/r u_r - (n-1)/2 sin(2u)/r^2 - f(u) f'(u)/r^alpha

on a staggered radial grid and evaluates backward light cone energies,
fluxes, multiplier identities and apex probes on the result.
"""
from .errors import (BlowUpSuspected, CflViolation, ConfigError, DiagnosticsError, NonFinite,
                     ProfileError, QuadratureError, RadialConeError)
from .kernels import BACKEND
from .nonlinearity import (BUILTIN_NAMES, HypothesisReport, ModelParams, NonlinearityProfile,
                           bogomolny, check_hypotheses, get_profile)
from .solver import (FieldState, RadialGrid, RunHistory, SolverConfig, evolve, make_bump, step,
                     zero_state)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BUILTIN_NAMES", "BlowUpSuspected", "CflViolation", "ConfigError",
    "DiagnosticsError", "FieldState", "HypothesisReport", "ModelParams", "NonFinite",
    "NonlinearityProfile", "ProfileError", "QuadratureError", "RadialConeError", "RadialGrid",
    "RunHistory", "SolverConfig", "bogomolny", "check_hypotheses", "evolve", "get_profile",
    "make_bump", "step", "zero_state",
]
