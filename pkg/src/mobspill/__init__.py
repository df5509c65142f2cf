"""Causal exposure-response estimation under mobility-induced spillover."""

__version__ = "0.1.0"

from .basis import BasisSpec, eval_basis, fit_basis
from .estimands import (
    EstimandResult,
    Intervention,
    lambda_effect,
    marginal_phi,
    marginal_psi,
    mean_potential_outcome,
    omega_effect,
)
from .mobility import (
    ExposurePanel,
    MobilityMatrix,
    MobilityWeights,
    compute_weights,
    load_mobility_csv,
    load_panel_csv,
    make_panel,
    neighborhood_exposure,
)
from .model import FitConfig, PosteriorDraws, build_design, fit, fit_naive, gibbs_step
from .simulate import SimConfig, SimTruth, generate, true_omega

__all__ = [
    "BasisSpec",
    "EstimandResult",
    "ExposurePanel",
    "FitConfig",
    "Intervention",
    "MobilityMatrix",
    "MobilityWeights",
    "PosteriorDraws",
    "SimConfig",
    "SimTruth",
    "build_design",
    "compute_weights",
    "eval_basis",
    "fit",
    "fit_basis",
    "fit_naive",
    "generate",
    "gibbs_step",
    "lambda_effect",
    "load_mobility_csv",
    "load_panel_csv",
    "make_panel",
    "marginal_phi",
    "marginal_psi",
    "mean_potential_outcome",
    "neighborhood_exposure",
    "omega_effect",
    "true_omega",
]
