"""Post-parse validation of model programs.

Checks run against a set of data names (columns and scalars the caller
will bind at compile time) and emit diagnostics rather than raising:
an empty list means the model is clean.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .ast import (
    BinaryOp,
    Deterministic,
    DistCall,
    ForLoop,
    FunctionCall,
    ModelAst,
    NumberLiteral,
    Stochastic,
    UnaryNeg,
    VarRef,
)
from .tokens import SourceSpan

# name -> arity; dnorm's second argument is a precision (JAGS convention)
DISTRIBUTIONS = {
    "dnorm": 2,
    "dunif": 2,
    "dgamma": 2,
    "dbeta": 2,
    "dbern": 1,
    "dbin": 2,
    "dpois": 1,
    "dexp": 1,
}

BUILTIN_FUNCTIONS = {
    "pow": 2,  # normalized to ^ at parse time; kept for arity lookups
    "exp": 1,
    "log": 1,
    "sqrt": 1,
    "abs": 1,
    "logit": 1,
    "ilogit": 1,
    "min": 2,
    "max": 2,
    "step": 1,
}


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    span: Optional[SourceSpan]
    message: str

    def __str__(self):
        loc = f"{self.span.line}:{self.span.column}: " if self.span else ""
        return f"{loc}{self.severity.value}: {self.message}"


def defined_names(ast: ModelAst) -> set[str]:
    """Variable names appearing as a relation target anywhere in the model."""
    names: set[str] = set()

    def visit(items):
        for item in items:
            if isinstance(item, ForLoop):
                visit(item.body)
            else:
                names.add(item.target.name)

    visit(ast.items)
    return names


def check_semantics(ast: ModelAst, known_data_names: set[str]) -> list[Diagnostic]:
    """Return diagnostics for undefined variables, unknown or misused
    distributions/functions. Empty list means clean."""
    diagnostics: list[Diagnostic] = []
    targets = defined_names(ast)

    def err(span, message):
        diagnostics.append(Diagnostic(Severity.ERROR, span, message))

    def check_expr(expr, loop_vars):
        if isinstance(expr, NumberLiteral):
            return
        if isinstance(expr, VarRef):
            if (
                expr.name not in targets
                and expr.name not in known_data_names
                and expr.name not in loop_vars
            ):
                err(expr.span, f"undefined variable {expr.name}")
            if expr.index is not None:
                check_expr(expr.index, loop_vars)
            return
        if isinstance(expr, UnaryNeg):
            check_expr(expr.operand, loop_vars)
            return
        if isinstance(expr, BinaryOp):
            check_expr(expr.left, loop_vars)
            check_expr(expr.right, loop_vars)
            return
        if isinstance(expr, FunctionCall):
            arity = BUILTIN_FUNCTIONS.get(expr.name)
            if arity is None:
                err(expr.span, f"unknown function {expr.name}")
            elif len(expr.args) != arity:
                err(
                    expr.span,
                    f"{expr.name} requires {arity} argument(s), got {len(expr.args)}",
                )
            for arg in expr.args:
                check_expr(arg, loop_vars)
            return
        raise TypeError(f"not an expression: {expr!r}")

    def check_dist(dist: DistCall, loop_vars):
        arity = DISTRIBUTIONS.get(dist.name)
        if arity is None:
            err(dist.span, f"unknown distribution {dist.name}")
        elif len(dist.args) != arity:
            err(
                dist.span,
                f"{dist.name} requires {arity} argument(s), got {len(dist.args)}",
            )
        for arg in dist.args:
            check_expr(arg, loop_vars)

    def check_items(items, loop_vars):
        for item in items:
            if isinstance(item, ForLoop):
                check_expr(item.lower, loop_vars)
                check_expr(item.upper, loop_vars)
                check_items(item.body, loop_vars | {item.index_var})
            elif isinstance(item, Stochastic):
                if item.target.index is not None:
                    check_expr(item.target.index, loop_vars)
                check_dist(item.dist, loop_vars)
            elif isinstance(item, Deterministic):
                if item.target.index is not None:
                    check_expr(item.target.index, loop_vars)
                check_expr(item.expr, loop_vars)

    check_items(ast.items, frozenset())
    return diagnostics
