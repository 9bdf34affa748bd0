"""Sampler configuration. Defaults mirror the canonical workflow:
3 chains, 5000 burn-in sweeps, 10000 recorded sweeps."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class InitStrategy(Enum):
    PRIOR_DRAW = "prior_draw"
    FIXED_DEFAULTS = "fixed_defaults"


@dataclass(frozen=True)
class McmcConfig:
    n_chains: int = 3
    burn_in: int = 5000
    iterations: int = 10000
    thinning: int = 1
    seed: int = 0
    target_acceptance: float = 0.44
    init_strategy: InitStrategy = InitStrategy.PRIOR_DRAW

    def __post_init__(self):
        if self.n_chains < 1:
            raise ValueError("n_chains must be positive")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.thinning < 1:
            raise ValueError("thinning must be positive")
        if not 0.0 < self.target_acceptance < 1.0:
            raise ValueError("target_acceptance must be in (0, 1)")
