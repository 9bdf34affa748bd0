"""Posterior predictive checks.

Observed nodes are regenerated from evenly strided posterior draws and
replicated test statistics are compared against the observed data; the
Bayesian p-value for statistic T is P(T(y_rep) >= T(y_obs)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import QueryError
from ..graph import GraphModel
from ..rng import RandomStream

_STATS = {
    "mean": np.mean,
    "sd": lambda v: float(np.std(v, ddof=1)) if len(v) > 1 else 0.0,
    "min": np.min,
    "max": np.max,
}


@dataclass(frozen=True)
class PpcStatistic:
    name: str
    observed: float
    replicated: tuple[float, ...]
    p_value: float


@dataclass(frozen=True)
class PpcReport:
    n_rep: int
    statistics: tuple[PpcStatistic, ...]

    def __getitem__(self, name: str) -> PpcStatistic:
        for s in self.statistics:
            if s.name == name:
                return s
        raise QueryError(f"no PPC statistic named {name}")

    def to_text(self) -> str:
        lines = [f"{'statistic':<10}{'observed':>14}{'rep mean':>14}{'p-value':>10}"]
        for s in self.statistics:
            rep_mean = float(np.mean(s.replicated)) if s.replicated else float("nan")
            lines.append(
                f"{s.name:<10}{s.observed:>14.5g}{rep_mean:>14.5g}{s.p_value:>10.3f}"
            )
        return "\n".join(lines)


def posterior_predictive(
    graph: GraphModel, samples, n_rep: int, rng: RandomStream
) -> PpcReport:
    if not graph.observed_ids:
        raise QueryError("model has no observed nodes to replicate")
    if n_rep == 0:
        return PpcReport(n_rep=0, statistics=())
    missing = [p for p in graph.param_names if p not in samples.parameter_names]
    if missing:
        raise QueryError(f"samples do not cover parameters: {missing[:5]}")

    observed = graph.observed_vector()
    obs_stats = {k: float(fn(observed)) for k, fn in _STATS.items()}
    observed_names = [graph.nodes[i].name for i in graph.observed_ids]

    pooled = {p: samples.pooled(p) for p in graph.param_names}
    total = len(next(iter(pooled.values())))
    stride = max(1, total // n_rep)
    indices = [i * stride for i in range(n_rep) if i * stride < total]

    rep_stats: dict[str, list[float]] = {k: [] for k in _STATS}
    for idx in indices:
        values = {p: float(pooled[p][idx]) for p in graph.param_names}
        rep = graph.sample_observed(values, rng)
        vec = np.array([rep[name] for name in observed_names])
        for k, fn in _STATS.items():
            rep_stats[k].append(float(fn(vec)))

    statistics = []
    for k in _STATS:
        reps = rep_stats[k]
        p_value = float(np.mean([r >= obs_stats[k] for r in reps]))
        statistics.append(
            PpcStatistic(
                name=k,
                observed=obs_stats[k],
                replicated=tuple(reps),
                p_value=p_value,
            )
        )
    return PpcReport(n_rep=len(indices), statistics=tuple(statistics))
