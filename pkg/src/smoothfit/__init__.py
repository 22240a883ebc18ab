"""Smooth backfitting for additive regression models on the unit cube,
with locally constant and local linear smoothers and fully automatic
bandwidth selection (penalized least squares and two plug-in rules),
plus a seeded Monte Carlo benchmarking harness."""

from .data import Dataset, Grid
from .kernels import (
    BIWEIGHT,
    EPANECHNIKOV,
    KernelSpec,
    boundary_weight,
    custom_kernel,
    get_kernel,
    kernel_moments,
)
from .density import (
    CrossMomentSurface,
    DensityCurve,
    LocalMomentField,
    PairDensitySurface,
    cross_moments,
    local_moments,
    marginal_density,
    pair_density,
    weight_matrix,
)
from .backfit_nw import (
    AdditiveFitNW,
    backfit_nw,
    fixed_point_residual_nw,
    marginal_nw,
    predict_nw,
)
from .backfit_ll import (
    AdditiveFitLL,
    backfit_ll,
    fixed_point_residual_ll,
    marginal_ll,
    predict_ll,
)
from .criteria import CriterionValue, TrimSpec, aase_hat, ase, ase_j, pls, rss
from .curvature import (
    CurvatureCurve,
    curvature_at_points,
    equivalent_kernel_check,
    pilot_bandwidth,
    second_derivative,
)
from .selectors import (
    BandwidthSearchSpec,
    SelectionResult,
    oracle_ase_bandwidth,
    select_pl,
    select_pl_star,
    select_pls,
    select_single,
    theoretical_hstar,
)
from .simulate import SimConfig, SimReport, TrueModel, generate, run_study, sample_covariates
from . import errors

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Grid",
    "KernelSpec",
    "BIWEIGHT",
    "EPANECHNIKOV",
    "get_kernel",
    "custom_kernel",
    "kernel_moments",
    "boundary_weight",
    "DensityCurve",
    "PairDensitySurface",
    "LocalMomentField",
    "CrossMomentSurface",
    "weight_matrix",
    "marginal_density",
    "pair_density",
    "local_moments",
    "cross_moments",
    "AdditiveFitNW",
    "marginal_nw",
    "backfit_nw",
    "predict_nw",
    "fixed_point_residual_nw",
    "AdditiveFitLL",
    "marginal_ll",
    "backfit_ll",
    "predict_ll",
    "fixed_point_residual_ll",
    "TrimSpec",
    "CriterionValue",
    "rss",
    "pls",
    "ase",
    "ase_j",
    "aase_hat",
    "CurvatureCurve",
    "second_derivative",
    "equivalent_kernel_check",
    "pilot_bandwidth",
    "curvature_at_points",
    "BandwidthSearchSpec",
    "SelectionResult",
    "select_pls",
    "select_pl",
    "select_pl_star",
    "select_single",
    "oracle_ase_bandwidth",
    "theoretical_hstar",
    "SimConfig",
    "SimReport",
    "TrueModel",
    "sample_covariates",
    "generate",
    "run_study",
    "errors",
]
