"""Travelling waves of a singularly perturbed Keller-Segel chemotaxis model."""

__version__ = "0.1.0"

from .errors import KSWaveError
from .exact import WaveProfile, asymptotic_ratio, exact_wave, limit_wave, sample_profile, tw_ode_residual
from .model import ModelParams, PhasePoint, fast_rhs, layer_jacobian, validate
from .perturbed import convergence_study, invariance_residual, perturbed_point, shoot_heteroclinic
from .singular import assemble_singular_orbit, branch_point, classify_branch, fibre_mu0, fibre_numeric

__all__ = [
    "KSWaveError",
    "ModelParams",
    "PhasePoint",
    "WaveProfile",
    "assemble_singular_orbit",
    "asymptotic_ratio",
    "branch_point",
    "classify_branch",
    "convergence_study",
    "exact_wave",
    "fast_rhs",
    "fibre_mu0",
    "fibre_numeric",
    "invariance_residual",
    "layer_jacobian",
    "limit_wave",
    "perturbed_point",
    "sample_profile",
    "shoot_heteroclinic",
    "tw_ode_residual",
    "validate",
]
