"""Nonparametric empirical-Bayes denoising of normal means.

Core pieces: normal-mixture marginals and the posterior-mean (Tweedie)
rule, grid NPMLE via EM, Stein's unbiased risk estimator, compound-decision
estimators (separable and permutation-invariant), and a seeded simulation
harness with a CLI.
"""

from ._kernels import BACKEND
from .compound import (PermMCConfig, PermResult, perm_invariant_exact,
                       perm_invariant_mc, simple_estimator)
from .harness import (ExperimentConfig, RiskReport, rate_check, run_experiment,
                      run_trial, trial_seed)
from .mixture import (DecisionRule, DensityBundle, InvalidInputError,
                      MixingDistribution, Sample, constant_rule, identity_rule,
                      loglik, marginal_density, posterior_variance, tweedie_rule)
from .npmle import (EMConfig, FitReport, GridSpec, default_grid, em_step,
                    fit_npmle, optimality_gap, support_count)
from .scenarios import GaussianMixturePrior, ScenarioSpec, generate_scenario
from .sure import RiskEstimate, mc_risk, sure_bayes, sure_general

__all__ = [
    "BACKEND",
    "DecisionRule", "DensityBundle", "InvalidInputError", "MixingDistribution",
    "Sample", "constant_rule", "identity_rule", "loglik", "marginal_density",
    "posterior_variance", "tweedie_rule",
    "EMConfig", "FitReport", "GridSpec", "default_grid", "em_step",
    "fit_npmle", "optimality_gap", "support_count",
    "RiskEstimate", "mc_risk", "sure_bayes", "sure_general",
    "PermMCConfig", "PermResult", "perm_invariant_exact", "perm_invariant_mc",
    "simple_estimator",
    "GaussianMixturePrior", "ScenarioSpec", "generate_scenario",
    "ExperimentConfig", "RiskReport", "rate_check", "run_experiment",
    "run_trial", "trial_seed",
]
