"""Plackett-Luce models with agent- and alternative-level features.

Probabilities and sampling for top-l and l-way orders, rank-based
identifiability checks, maximum likelihood with an approximate error bound,
k-component mixtures (EM and direct ascent), rank breaking with composite
likelihood, pairwise evaluation metrics and seeded synthetic experiments.
"""

from .data import (
    L_WAY,
    TOP_L,
    BilinearFeatures,
    FeatureTensor,
    LWayOrder,
    MixtureParams,
    Profile,
    TopLOrder,
)
from .errors import (
    DimensionError,
    InfeasibleSupportError,
    ParameterError,
    ParseError,
    PlxError,
    RankDeficiencyError,
    UnboundedLikelihoodError,
)
from .identifiability import (
    IdReport,
    Verdict,
    check_assumption1,
    check_bilinear,
    check_mixture,
    check_plx,
    kron_lift,
    normalize,
    numerical_rank,
    rank_violation_frequency,
    vec,
    witness_beta,
)
from .metrics import pairwise_accuracy, pairwise_mse, param_mse
from .mixture import EmOptions, align_components, direct_mle, e_step, em_fit, m_step_alpha, mixture_log_likelihood
from .mle import FitReport, estimate_phi, fit_beta, fit_beta_weighted, rmse_bound, sample_complexity
from .model import (
    grad_beta,
    hessian_beta,
    log_likelihood,
    log_prob_top_l,
    mixture_prob_top_l,
    pairwise_prob,
    prob_top_l,
    prob_top_l_with_phi,
    sample_lway,
    sample_lway_profile,
    sample_profile,
    sample_top_l,
    utilities,
)
from .optim import OptimizerOptions
from .rbcml import BreakingGraph, WeightingFunction, break_profile, composite_ll, fit_rbcml
from .synth import ExperimentConfig, gen_synthetic

__version__ = "0.1.0"
