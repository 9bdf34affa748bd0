"""Log-densities, samplers and support queries for the distribution registry.

All stochastic relations in a model resolve to one of these families.
Parameterizations follow JAGS: dnorm takes (mean, precision), dgamma
(shape, rate), dbin (p, n). The generator-side normal used by trial
data generation takes (mean, sd) and is converted explicitly by its
caller, never implicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln, xlogy, xlog1py

from .errors import EvalError, ParamError
from .rng import RandomStream

LOG_2PI = math.log(2.0 * math.pi)
NEG_INF = float("-inf")


# -- specs and supports -------------------------------------------------

DIST_NAMES = ("dnorm", "dunif", "dgamma", "dbeta", "dbern", "dbin", "dpois", "dexp")


@dataclass(frozen=True)
class DistributionSpec:
    name: str
    params: tuple[float, ...]

    def __post_init__(self):
        validate_params(self.name, self.params)


@dataclass(frozen=True)
class SupportDescriptor:
    kind: str  # real_line | positive | interval | nonneg_integers | integer_range | binary
    lower: Optional[float] = None
    upper: Optional[float] = None

    @property
    def is_discrete(self) -> bool:
        return self.kind in ("nonneg_integers", "integer_range", "binary")


def validate_params(name: str, params: tuple[float, ...]) -> None:
    p = params
    if name == "dnorm":
        if len(p) != 2 or not p[1] > 0:
            raise ParamError(f"dnorm requires (mean, precision > 0), got {p}")
    elif name == "dunif":
        if len(p) != 2 or not p[0] < p[1]:
            raise ParamError(f"dunif requires lower < upper, got {p}")
    elif name == "dgamma":
        if len(p) != 2 or not (p[0] > 0 and p[1] > 0):
            raise ParamError(f"dgamma requires shape, rate > 0, got {p}")
    elif name == "dbeta":
        if len(p) != 2 or not (p[0] > 0 and p[1] > 0):
            raise ParamError(f"dbeta requires a, b > 0, got {p}")
    elif name == "dbern":
        if len(p) != 1 or not (0.0 <= p[0] <= 1.0):
            raise ParamError(f"dbern requires p in [0, 1], got {p}")
    elif name == "dbin":
        if (
            len(p) != 2
            or not (0.0 <= p[0] <= 1.0)
            or p[1] < 0
            or p[1] != int(p[1])
        ):
            raise ParamError(f"dbin requires (p in [0,1], n non-negative integer), got {p}")
    elif name == "dpois":
        if len(p) != 1 or not p[0] > 0:
            raise ParamError(f"dpois requires lambda > 0, got {p}")
    elif name == "dexp":
        if len(p) != 1 or not p[0] > 0:
            raise ParamError(f"dexp requires rate > 0, got {p}")
    else:
        raise ParamError(f"unknown distribution {name}")


def support(spec: DistributionSpec) -> SupportDescriptor:
    name, p = spec.name, spec.params
    if name == "dnorm":
        return SupportDescriptor("real_line")
    if name == "dunif":
        return SupportDescriptor("interval", p[0], p[1])
    if name in ("dgamma", "dexp"):
        return SupportDescriptor("positive", 0.0)
    if name == "dbeta":
        return SupportDescriptor("interval", 0.0, 1.0)
    if name == "dbern":
        return SupportDescriptor("binary", 0.0, 1.0)
    if name == "dbin":
        return SupportDescriptor("integer_range", 0.0, p[1])
    if name == "dpois":
        return SupportDescriptor("nonneg_integers", 0.0)
    raise ParamError(f"unknown distribution {name}")


# -- log densities ------------------------------------------------------
#
# The *_vec functions accept numpy arrays or scalars for both x and the
# parameters and return arrays/scalars with -inf outside the support;
# they are the workhorses of graph log-joint evaluation.


def _is_integral(x):
    return np.floor(x) == x


def logpdf_vec(name: str, x, *args):
    """Invalid parameter values (which can arise when arguments depend on
    other sampled parameters) yield -inf rather than an error."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if name == "dnorm":
            mean, prec = args
            out = 0.5 * np.log(prec) - 0.5 * LOG_2PI - 0.5 * prec * (x - mean) ** 2
            return np.where(prec > 0, out, NEG_INF)
        if name == "dunif":
            lo, up = args
            return np.where((lo < up) & (x >= lo) & (x <= up), -np.log(up - lo), NEG_INF)
        if name == "dgamma":
            shape, rate = args
            out = (
                xlogy(shape, np.maximum(rate, 0.0))
                - gammaln(shape)
                + xlogy(shape - 1.0, np.maximum(x, 0.0))
                - rate * x
            )
            return np.where((shape > 0) & (rate > 0) & (x > 0), out, NEG_INF)
        if name == "dbeta":
            a, b = args
            norm = gammaln(a + b) - gammaln(a) - gammaln(b)
            out = norm + xlogy(a - 1.0, x) + xlog1py(b - 1.0, -x)
            return np.where((a > 0) & (b > 0) & (x > 0) & (x < 1), out, NEG_INF)
        if name == "dbern":
            (p,) = args
            out = xlogy(x, p) + xlog1py(1.0 - x, -p)
            ok = ((x == 0) | (x == 1)) & (p >= 0) & (p <= 1)
            return np.where(ok, out, NEG_INF)
        if name == "dbin":
            p, n = args
            choose = gammaln(n + 1.0) - gammaln(x + 1.0) - gammaln(n - x + 1.0)
            out = choose + xlogy(x, p) + xlog1py(n - x, -p)
            ok = (x >= 0) & (x <= n) & _is_integral(x) & (p >= 0) & (p <= 1)
            return np.where(ok, out, NEG_INF)
        if name == "dpois":
            (lam,) = args
            out = xlogy(x, np.maximum(lam, 0.0)) - lam - gammaln(x + 1.0)
            ok = (x >= 0) & _is_integral(x) & (lam > 0)
            return np.where(ok, out, NEG_INF)
        if name == "dexp":
            (rate,) = args
            out = np.log(np.maximum(rate, 0.0)) - rate * x
            return np.where((rate > 0) & (x >= 0), out, NEG_INF)
    raise ParamError(f"unknown distribution {name}")


def log_density(spec: DistributionSpec, x: float) -> float:
    """Natural-log density (or mass) at x; -inf outside the support."""
    return float(logpdf_vec(spec.name, float(x), *spec.params))


# -- sampling -----------------------------------------------------------


def _gamma_mt(shape: float, rng: RandomStream) -> float:
    # Marsaglia-Tsang squeeze for shape >= 1
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = rng.normal()
        t = 1.0 + c * x
        if t <= 0.0:
            continue
        v = t * t * t
        u = rng.uniform()
        if u < 1.0 - 0.0331 * x * x * x * x:
            return d * v
        if u > 0.0 and math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
            return d * v


def _gamma_draw(shape: float, rate: float, rng: RandomStream) -> float:
    if shape >= 1.0:
        g = _gamma_mt(shape, rng)
    else:
        # boost: G(a) = G(a+1) * U^(1/a)
        g = _gamma_mt(shape + 1.0, rng)
        u = rng.uniform()
        while u <= 0.0:
            u = rng.uniform()
        g *= u ** (1.0 / shape)
    return g / rate


def sample(spec: DistributionSpec, rng: RandomStream) -> float:
    """One draw; fully determined by the stream state."""
    name, p = spec.name, spec.params
    if name == "dnorm":
        mean, prec = p
        return mean + rng.normal() / math.sqrt(prec)
    if name == "dunif":
        lo, up = p
        return lo + (up - lo) * rng.uniform()
    if name == "dgamma":
        return _gamma_draw(p[0], p[1], rng)
    if name == "dbeta":
        g1 = _gamma_draw(p[0], 1.0, rng)
        g2 = _gamma_draw(p[1], 1.0, rng)
        return g1 / (g1 + g2)
    if name == "dbern":
        return 1.0 if rng.uniform() < p[0] else 0.0
    if name == "dbin":
        prob, n = p
        return float(sum(1 for _ in range(int(n)) if rng.uniform() < prob))
    if name == "dpois":
        lam = p[0]
        # exponential race: count arrivals before total exceeds lambda
        count = 0
        total = rng.exponential()
        while total < lam:
            count += 1
            total += rng.exponential()
        return float(count)
    if name == "dexp":
        return rng.exponential() / p[0]
    raise ParamError(f"unknown distribution {name}")


def sample_normal_by_sd(mean: float, sd: float, rng: RandomStream) -> float:
    """Generator-side normal in (mean, sd) form, used by trial data generation."""
    if sd <= 0:
        raise ParamError(f"sd must be positive, got {sd}")
    return mean + sd * rng.normal()


# -- scalar builtins ----------------------------------------------------


def apply_builtin(name: str, args: list[float]) -> float:
    """Evaluate a registry builtin; raises EvalError on domain violations."""
    if name == "pow":
        base, expo = args
        if base == 0.0 and expo < 0.0:
            raise EvalError("0 raised to a negative power")
        if base < 0.0 and expo != int(expo):
            raise EvalError(f"negative base {base} with non-integer exponent {expo}")
        return float(base**expo)
    if name == "exp":
        return math.exp(args[0])
    if name == "log":
        if args[0] <= 0.0:
            raise EvalError(f"log of non-positive value {args[0]}")
        return math.log(args[0])
    if name == "sqrt":
        if args[0] < 0.0:
            raise EvalError(f"sqrt of negative value {args[0]}")
        return math.sqrt(args[0])
    if name == "abs":
        return abs(args[0])
    if name == "logit":
        x = args[0]
        if not 0.0 < x < 1.0:
            raise EvalError(f"logit argument {x} outside (0, 1)")
        return math.log(x / (1.0 - x))
    if name == "ilogit":
        x = args[0]
        if x >= 0:
            return 1.0 / (1.0 + math.exp(-x))
        e = math.exp(x)
        return e / (1.0 + e)
    if name == "min":
        return min(args[0], args[1])
    if name == "max":
        return max(args[0], args[1])
    if name == "step":
        return 1.0 if args[0] >= 0.0 else 0.0
    raise EvalError(f"unknown builtin {name}")


# vectorized builtin table for the graph evaluator; domain violations
# surface as non-finite values which the evaluator reports
def _vec_ilogit(x):
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


VEC_BUILTINS = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "logit": lambda x: np.log(x) - np.log1p(-x),
    "ilogit": _vec_ilogit,
    "min": np.minimum,
    "max": np.maximum,
    "step": lambda x: np.where(x >= 0, 1.0, 0.0),
}
