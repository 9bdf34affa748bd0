"""Split-chain convergence diagnostics.

R-hat is the classic Gelman-Rubin potential scale reduction factor on
split chains (not rank-normalized). ESS uses Geyer's initial positive
sequence truncation of the combined autocorrelations.
"""

from __future__ import annotations

import numpy as np

from ..errors import DiagnosticError

_EPS = 1e-300


def _split_chains(draws: np.ndarray) -> np.ndarray:
    """[chain, iter, param] -> [2*chain, iter//2, param]."""
    m, n, p = draws.shape
    if n < 4:
        raise DiagnosticError(f"chains of length {n} are too short (need >= 4)")
    half = n // 2
    first = draws[:, :half, :]
    second = draws[:, n - half :, :]
    return np.concatenate([first, second], axis=0)


def _rhat_array(draws: np.ndarray) -> np.ndarray:
    split = _split_chains(draws)
    m, n, p = split.shape
    with np.errstate(over="ignore", invalid="ignore"):
        chain_means = split.mean(axis=1)  # [m, p]
        within = split.var(axis=1, ddof=1).mean(axis=0)  # [p]
        between = n * chain_means.var(axis=0, ddof=1)  # [p]
        var_plus = (n - 1) / n * within + between / n
    out = np.empty(p)
    for j in range(p):
        if not (np.isfinite(within[j]) and np.isfinite(var_plus[j])):
            out[j] = float("inf")
        elif within[j] < _EPS:
            out[j] = 1.0 if var_plus[j] < _EPS else float("inf")
        else:
            out[j] = float(np.sqrt(var_plus[j] / within[j]))
    return out


def _ess_array(draws: np.ndarray) -> np.ndarray:
    split = _split_chains(draws)
    m, n, p = split.shape
    out = np.empty(p)
    for j in range(p):
        chains = split[:, :, j]
        with np.errstate(over="ignore", invalid="ignore"):
            chain_means = chains.mean(axis=1)
            within = chains.var(axis=1, ddof=1).mean()
            between = n * chain_means.var(ddof=1) if m > 1 else 0.0
            var_plus = (n - 1) / n * within + between / n
        if not (np.isfinite(within) and np.isfinite(var_plus)):
            out[j] = 0.0
            continue
        if var_plus < _EPS or within < _EPS:
            out[j] = 0.0
            continue
        acov = np.zeros(n)
        for c in range(m):
            centered = chains[c] - chain_means[c]
            full = np.correlate(centered, centered, mode="full")[n - 1 :]
            acov += full / n
        acov /= m
        rho = 1.0 - (within - acov) / var_plus
        # Geyer: sum consecutive pairs while their sum stays positive
        tau = 1.0
        t = 1
        while t + 1 < n:
            pair = rho[t] + rho[t + 1]
            if pair < 0.0:
                break
            tau += 2.0 * pair
            t += 2
        out[j] = max(m * n / tau, 0.0)
    return out


def rhat(samples) -> dict[str, float]:
    values = _rhat_array(samples.draws)
    return dict(zip(samples.parameter_names, values.tolist()))


def ess(samples) -> dict[str, float]:
    values = _ess_array(samples.draws)
    return dict(zip(samples.parameter_names, values.tolist()))
