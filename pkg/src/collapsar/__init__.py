"""Self-similar collapsing solutions of radially symmetric compressible
flows with self-gravitation, and tools that check them against the PDEs."""

__version__ = "0.1.0"

from .errors import (
    BlowupReached,
    CollapsarError,
    DegenerateDenominator,
    InvalidArgument,
    NumericalFailure,
    ParameterError,
    StiffnessFailure,
)
from .legacy import EmdenKind, EmdenProfile, emden_residual, integrate_emden
from .model import PhysicalParams, SolutionCase, alpha_const, exponents_for, validate
from .profile import ProfileSolution, SupportKind, first_zero, integrate_profile, ode_rhs, profile_residual
from .scaling import (
    ScalingFunction,
    a_eval,
    amplification_window,
    blowup_time,
    emden_scaling_integrate,
    make_scaling,
    scaling_energy,
)
from .verify import (
    RadialSolution,
    ResidualReport,
    density,
    mass_residual,
    momentum_residual,
    phi_r,
    total_mass,
    velocity,
    verify_solution,
)

__all__ = [
    "BlowupReached",
    "CollapsarError",
    "DegenerateDenominator",
    "EmdenKind",
    "EmdenProfile",
    "InvalidArgument",
    "NumericalFailure",
    "ParameterError",
    "PhysicalParams",
    "ProfileSolution",
    "RadialSolution",
    "ResidualReport",
    "ScalingFunction",
    "SolutionCase",
    "StiffnessFailure",
    "SupportKind",
    "a_eval",
    "alpha_const",
    "amplification_window",
    "blowup_time",
    "density",
    "emden_residual",
    "emden_scaling_integrate",
    "exponents_for",
    "first_zero",
    "integrate_emden",
    "integrate_profile",
    "make_scaling",
    "mass_residual",
    "momentum_residual",
    "ode_rhs",
    "phi_r",
    "profile_residual",
    "scaling_energy",
    "total_mass",
    "validate",
    "velocity",
    "verify_solution",
]
