from .config import InitStrategy, McmcConfig
from .sampler import ChainState, PosteriorSamples, adapt_scale, initialize_chain, mh_step, run_mcmc
from .diagnostics import ess, rhat
from .summary import SummaryRow, SummaryTable, posterior_probability, summarize
from .ppc import PpcReport, posterior_predictive

__all__ = [
    "McmcConfig",
    "InitStrategy",
    "ChainState",
    "PosteriorSamples",
    "initialize_chain",
    "mh_step",
    "adapt_scale",
    "run_mcmc",
    "rhat",
    "ess",
    "summarize",
    "SummaryTable",
    "SummaryRow",
    "posterior_probability",
    "posterior_predictive",
    "PpcReport",
]
