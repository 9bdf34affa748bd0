"""Posterior summaries and probability queries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dsl.ast import BinaryOp, FunctionCall, NumberLiteral, UnaryNeg, VarRef
from ..dsl.parser import parse_expression
from ..dists import VEC_BUILTINS
from ..errors import QueryError
from .diagnostics import _ess_array, _rhat_array

_QUANTS = (0.025, 0.25, 0.5, 0.75, 0.975)


@dataclass(frozen=True)
class SummaryRow:
    name: str
    mean: float
    sd: float
    q2_5: float
    q25: float
    median: float
    q75: float
    q97_5: float
    rhat: float
    ess: float

    @property
    def quantiles(self):
        return (self.q2_5, self.q25, self.median, self.q75, self.q97_5)


@dataclass(frozen=True)
class SummaryTable:
    rows: tuple[SummaryRow, ...]

    def __getitem__(self, name: str) -> SummaryRow:
        for row in self.rows:
            if row.name == name:
                return row
        raise QueryError(f"no summary row for {name}")

    def to_text(self) -> str:
        header = (
            f"{'parameter':<12}{'mean':>12}{'sd':>12}{'2.5%':>12}{'25%':>12}"
            f"{'50%':>12}{'75%':>12}{'97.5%':>12}{'rhat':>8}{'ess':>10}"
        )
        lines = [header]
        for r in self.rows:
            lines.append(
                f"{r.name:<12}{r.mean:>12.5g}{r.sd:>12.5g}{r.q2_5:>12.5g}"
                f"{r.q25:>12.5g}{r.median:>12.5g}{r.q75:>12.5g}{r.q97_5:>12.5g}"
                f"{r.rhat:>8.3f}{r.ess:>10.1f}"
            )
        return "\n".join(lines)

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["parameter", "mean", "sd", "q2.5", "q25", "q50", "q75", "q97.5", "rhat", "ess"]
            )
            for r in self.rows:
                writer.writerow(
                    [r.name, r.mean, r.sd, r.q2_5, r.q25, r.median, r.q75, r.q97_5, r.rhat, r.ess]
                )


def summarize(samples) -> SummaryTable:
    """Pooled-chain summaries; quantiles use linear interpolation (type 7)."""
    draws = samples.draws
    if draws.shape[0] * draws.shape[1] < 10:
        raise QueryError("need at least 10 pooled draws to summarize")
    rhats = _rhat_array(draws)
    esses = _ess_array(draws)
    rows = []
    for j, name in enumerate(samples.parameter_names):
        pooled = draws[:, :, j].reshape(-1)
        qs = np.quantile(pooled, _QUANTS, method="linear")
        rows.append(
            SummaryRow(
                name=name,
                mean=float(pooled.mean()),
                sd=float(pooled.std(ddof=1)),
                q2_5=float(qs[0]),
                q25=float(qs[1]),
                median=float(qs[2]),
                q75=float(qs[3]),
                q97_5=float(qs[4]),
                rhat=float(rhats[j]),
                ess=float(esses[j]),
            )
        )
    return SummaryTable(rows=tuple(rows))


# -- posterior probability queries --------------------------------------


def _eval_query_expr(expr, samples):
    if isinstance(expr, NumberLiteral):
        return expr.value
    if isinstance(expr, VarRef):
        if expr.index is not None:
            raise QueryError("indexed references are not supported in queries")
        return samples.pooled(expr.name)
    if isinstance(expr, UnaryNeg):
        return -_eval_query_expr(expr.operand, samples)
    if isinstance(expr, BinaryOp):
        left = _eval_query_expr(expr.left, samples)
        right = _eval_query_expr(expr.right, samples)
        if expr.op == "add":
            return left + right
        if expr.op == "sub":
            return left - right
        if expr.op == "mul":
            return left * right
        if expr.op == "div":
            return np.divide(left, right)
        if expr.op == "pow":
            return np.power(left, right)
    if isinstance(expr, FunctionCall):
        fn = VEC_BUILTINS.get(expr.name)
        if fn is None:
            raise QueryError(f"unknown function {expr.name} in query")
        return fn(*[_eval_query_expr(a, samples) for a in expr.args])
    raise QueryError(f"unsupported query expression {expr!r}")


def posterior_probability(samples, expression: str, comparator: str, threshold: float) -> float:
    """Fraction of pooled draws with expression strictly above (gt) or
    below (lt) the threshold."""
    if comparator not in ("gt", "lt"):
        raise QueryError(f"comparator must be 'gt' or 'lt', got {comparator!r}")
    expr = parse_expression(expression)
    values = _eval_query_expr(expr, samples)
    values = np.asarray(values, dtype=float)
    if values.ndim == 0:
        raise QueryError("query expression references no sampled parameter")
    if comparator == "gt":
        return float(np.mean(values > threshold))
    return float(np.mean(values < threshold))
