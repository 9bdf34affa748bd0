"""Bayesian adaptive clinical-trial engine.

Parses a JAGS-subset model language, compiles models against data into
directed graphical models, runs Metropolis-within-Gibbs MCMC, and
simulates two-stage adaptive trials to estimate operating
characteristics.
"""

from .dsl import check_semantics, format_model, parse_model, tokenize
from .graph import Dataset, GraphModel, compile_model
from .mcmc import (
    McmcConfig,
    PosteriorSamples,
    posterior_predictive,
    posterior_probability,
    run_mcmc,
    summarize,
)
from .rng import RandomStream, mix_seed
from .trial import (
    TrialDesign,
    generate_cohort,
    load_trial_spec,
    load_trial_spec_file,
    run_oc_simulation,
    run_single_trial,
)

__version__ = "0.1.0"

__all__ = [
    "tokenize",
    "parse_model",
    "format_model",
    "check_semantics",
    "Dataset",
    "GraphModel",
    "compile_model",
    "McmcConfig",
    "PosteriorSamples",
    "run_mcmc",
    "summarize",
    "posterior_probability",
    "posterior_predictive",
    "RandomStream",
    "mix_seed",
    "TrialDesign",
    "load_trial_spec",
    "load_trial_spec_file",
    "generate_cohort",
    "run_single_trial",
    "run_oc_simulation",
    "__version__",
]
