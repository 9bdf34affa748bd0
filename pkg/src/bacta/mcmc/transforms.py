"""Support-respecting reparameterizations for random-walk proposals.

Proposals live in unconstrained space: log for positive supports,
scaled logit for intervals, identity for the real line. Discrete
supports get no transform; their proposals move on the lattice.
"""

from __future__ import annotations

import math

from ..dists import SupportDescriptor


class Identity:
    discrete = False

    def to_unconstrained(self, x: float) -> float:
        return x

    def to_constrained(self, z: float) -> float:
        return z

    def log_jacobian(self, z: float) -> float:
        return 0.0


class Log:
    discrete = False

    def to_unconstrained(self, x: float) -> float:
        return math.log(x)

    def to_constrained(self, z: float) -> float:
        return math.exp(z)

    def log_jacobian(self, z: float) -> float:
        return z  # |dx/dz| = e^z


class LogitInterval:
    discrete = False

    def __init__(self, lower: float, upper: float):
        self.lower = lower
        self.upper = upper
        self.width = upper - lower

    def to_unconstrained(self, x: float) -> float:
        u = (x - self.lower) / self.width
        u = min(max(u, 1e-12), 1.0 - 1e-12)
        return math.log(u / (1.0 - u))

    def to_constrained(self, z: float) -> float:
        if z >= 0:
            s = 1.0 / (1.0 + math.exp(-z))
        else:
            e = math.exp(z)
            s = e / (1.0 + e)
        return self.lower + self.width * s

    def log_jacobian(self, z: float) -> float:
        # log(width) + log sigma(z) + log sigma(-z), computed stably
        return math.log(self.width) - abs(z) - 2.0 * math.log1p(math.exp(-abs(z)))


class Lattice:
    """No-op marker for integer-valued parameters."""

    discrete = True

    def to_unconstrained(self, x: float) -> float:
        return x

    def to_constrained(self, z: float) -> float:
        return z

    def log_jacobian(self, z: float) -> float:
        return 0.0


def transform_for(support: SupportDescriptor):
    if support.is_discrete:
        return Lattice()
    if support.kind == "positive":
        return Log()
    if support.kind == "interval":
        return LogitInterval(support.lower, support.upper)
    return Identity()
