"""Adaptive single-site Metropolis-within-Gibbs over a compiled graph.

One sweep updates every parameter once, in the graph's topological
order. Proposal scales adapt in batches of 50 sweeps during burn-in
only and are frozen afterwards, so the post-burn-in kernel is
time-homogeneous. Chain c draws from the substream mix(seed, c);
identical (graph, config) inputs give bit-identical output.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .. import dists
from ..errors import DivergenceWarning, EvalError, InitError, QueryError
from ..graph import GraphModel, NodeKind
from ..rng import RandomStream, mix_seed
from .config import InitStrategy, McmcConfig
from .transforms import transform_for

_ADAPT_BATCH = 50
_LOW_PRECISION_INIT = 1e-4  # vague normal priors initialize at their mean


@dataclass
class ChainState:
    param_names: list[str]
    transforms: list
    z: np.ndarray  # unconstrained values
    x: dict  # constrained values, keyed by parameter name
    log_joint_cached: float
    proposal_scales: np.ndarray
    acceptance_counts: np.ndarray
    batch_accepts: np.ndarray = field(default=None)
    frozen: bool = False

    def __post_init__(self):
        if self.batch_accepts is None:
            self.batch_accepts = np.zeros(len(self.param_names))


@dataclass
class PosteriorSamples:
    parameter_names: list[str]
    draws: np.ndarray  # [chain][iteration][parameter], original space
    config: McmcConfig

    @property
    def n_chains(self) -> int:
        return self.draws.shape[0]

    def pooled(self, name: str) -> np.ndarray:
        if name not in self.parameter_names:
            raise QueryError(f"unknown parameter {name}")
        j = self.parameter_names.index(name)
        return self.draws[:, :, j].reshape(-1)

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["chain", "iteration"] + list(self.parameter_names))
            for c in range(self.draws.shape[0]):
                for i in range(self.draws.shape[1]):
                    writer.writerow(
                        [c + 1, i + 1] + [repr(float(v)) for v in self.draws[c, i]]
                    )


# -- initialization -----------------------------------------------------


def _fixed_default(dist_name: str, args: tuple[float, ...]) -> float:
    if dist_name == "dnorm":
        return args[0]
    if dist_name == "dunif":
        return 0.5 * (args[0] + args[1])
    if dist_name == "dgamma":
        return args[0] / args[1]
    if dist_name == "dbeta":
        return args[0] / (args[0] + args[1])
    if dist_name == "dbern":
        return 1.0 if args[0] >= 0.5 else 0.0
    if dist_name == "dbin":
        return float(round(args[0] * args[1]))
    if dist_name == "dpois":
        return float(round(args[0]))
    if dist_name == "dexp":
        return 1.0 / args[0]
    raise InitError(f"no default for {dist_name}")


def _draw_initial_values(graph: GraphModel, strategy: InitStrategy, rng: RandomStream):
    """Walk stochastic parameters in topological order so parent values
    (including deterministic transforms of earlier draws) are available."""
    env = dict(graph._constant_env)
    values = {}
    for node in (graph.nodes[i] for i in graph.topo_order):
        if node.kind is NodeKind.CONSTANT:
            continue
        if node.kind is NodeKind.DETERMINISTIC:
            env[node.name] = node.expr_fn(env)
        elif node.kind is NodeKind.STOCHASTIC_OBSERVED:
            env[node.name] = node.observed_value
        else:
            args = tuple(fn(env) for fn in node.dist_arg_fns)
            spec = dists.DistributionSpec(node.dist_name, args)
            if strategy is InitStrategy.FIXED_DEFAULTS:
                v = _fixed_default(node.dist_name, args)
            elif node.dist_name == "dnorm" and args[1] < _LOW_PRECISION_INIT:
                v = args[0]
            else:
                v = dists.sample(spec, rng)
            env[node.name] = v
            values[node.name] = v
    return values


def initialize_chain(
    graph: GraphModel, config: McmcConfig, rng: RandomStream
) -> ChainState:
    if not graph.parameter_ids:
        raise InitError("graph has no parameters to sample")
    transforms = [transform_for(m.static_support) for m in graph.param_meta]
    names = graph.param_names
    attempts = 100 if config.init_strategy is InitStrategy.PRIOR_DRAW else 1
    for _ in range(attempts):
        try:
            values = _draw_initial_values(graph, config.init_strategy, rng)
            lj = graph.log_joint(values)
        except EvalError:
            continue
        if math.isfinite(lj):
            z = np.array(
                [t.to_unconstrained(values[n]) for t, n in zip(transforms, names)]
            )
            return ChainState(
                param_names=list(names),
                transforms=transforms,
                z=z,
                x=dict(values),
                log_joint_cached=lj,
                proposal_scales=np.ones(len(names)),
                acceptance_counts=np.zeros(len(names)),
            )
    raise InitError(
        f"no finite log joint after {attempts} initialization attempt(s)"
    )


# -- transitions --------------------------------------------------------


def mh_step(
    graph: GraphModel, state: ChainState, param_index: int, rng: RandomStream
) -> bool:
    """One Metropolis update of a single parameter; returns acceptance."""
    t = state.transforms[param_index]
    name = state.param_names[param_index]
    scale = state.proposal_scales[param_index]
    if t.discrete:
        # symmetric lattice proposal
        step = round(rng.normal() * scale)
        if step == 0:
            step = 1 if rng.uniform() < 0.5 else -1
        x_new = state.x[name] + step
        z_new = x_new
        d_jac = 0.0
    else:
        z_old = state.z[param_index]
        z_new = z_old + scale * rng.normal()
        x_new = t.to_constrained(z_new)
        d_jac = t.log_jacobian(z_new) - t.log_jacobian(z_old)
    proposal = dict(state.x)
    proposal[name] = x_new
    try:
        lj_new = graph.log_joint(proposal)
    except EvalError:
        rng.uniform()  # keep stream consumption uniform across reject paths
        return False
    if not math.isfinite(lj_new) and lj_new > 0:
        rng.uniform()
        return False
    delta = (lj_new - state.log_joint_cached) + d_jac
    u = rng.uniform()
    accept = delta >= 0.0 or (u > 0.0 and math.log(u) < delta)
    if accept and math.isfinite(lj_new):
        state.x = proposal
        state.z[param_index] = z_new
        state.log_joint_cached = lj_new
        state.acceptance_counts[param_index] += 1
        state.batch_accepts[param_index] += 1
        return True
    return False


def adapt_scale(
    scale: float,
    recent_acceptance: float,
    step_index: int,
    target: float = 0.44,
) -> float:
    """Robbins-Monro update on the log scale; step_index is the 1-based
    adaptation batch number."""
    gain = 1.0 / (step_index**0.6)
    return scale * math.exp(gain * (recent_acceptance - target))


def _sweep(graph, state, rng):
    for j in range(len(state.param_names)):
        mh_step(graph, state, j, rng)


# -- full runs ----------------------------------------------------------


def default_monitors(graph: GraphModel) -> list[str]:
    return list(graph.param_names) + [
        n for n in graph.scalar_deterministic_names if n not in graph.param_names
    ]


def run_mcmc(
    graph: GraphModel, config: McmcConfig, monitor: list[str] | None = None
) -> PosteriorSamples:
    """Run all chains sequentially; chain c is seeded from mix(seed, c)."""
    if monitor is None:
        monitor = default_monitors(graph)
    det_names = set(graph.scalar_deterministic_names)
    for m in monitor:
        if m not in graph.param_names and m not in det_names:
            raise QueryError(f"cannot monitor {m}: not a parameter or scalar node")
    # scalar deterministic nodes in topo order, for monitor evaluation
    det_nodes = [
        graph.nodes[i]
        for i in graph.topo_order
        if graph.nodes[i].kind is NodeKind.DETERMINISTIC
        and graph.nodes[i].name in det_names
    ]

    n_kept = config.iterations // config.thinning
    draws = np.empty((config.n_chains, n_kept, len(monitor)))
    for c in range(config.n_chains):
        rng = RandomStream(mix_seed(config.seed, c))
        state = initialize_chain(graph, config, rng)
        n_batches = 0
        for sweep_idx in range(config.burn_in):
            _sweep(graph, state, rng)
            if (sweep_idx + 1) % _ADAPT_BATCH == 0:
                n_batches += 1
                rates = state.batch_accepts / _ADAPT_BATCH
                for j in range(len(state.param_names)):
                    state.proposal_scales[j] = adapt_scale(
                        state.proposal_scales[j],
                        rates[j],
                        n_batches,
                        config.target_acceptance,
                    )
                state.batch_accepts[:] = 0.0
        state.frozen = True
        env = dict(graph._constant_env)
        kept = 0
        for sweep_idx in range(config.iterations):
            _sweep(graph, state, rng)
            if (sweep_idx + 1) % config.thinning == 0 and kept < n_kept:
                env.update(state.x)
                for node in det_nodes:
                    env[node.name] = node.expr_fn(env)
                draws[c, kept] = [env[m] for m in monitor]
                kept += 1
    samples = PosteriorSamples(
        parameter_names=list(monitor), draws=draws, config=config
    )
    _warn_on_divergence(samples)
    return samples


def _warn_on_divergence(samples: PosteriorSamples) -> None:
    from .diagnostics import rhat

    try:
        values = rhat(samples)
    except Exception:
        return
    bad = {n: r for n, r in values.items() if r > 1.1}
    if bad:
        listing = ", ".join(f"{n}={r:.3f}" for n, r in sorted(bad.items()))
        warnings.warn(f"R-hat above 1.1 for: {listing}", DivergenceWarning)
