"""AST node types for parsed models.

All nodes are frozen dataclasses so trees are hashable, comparable and
picklable; structural equality is the round-trip contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Union


@dataclass(frozen=True)
class NumberLiteral:
    value: float


@dataclass(frozen=True)
class VarRef:
    name: str
    index: Optional["Expression"] = None
    # span excluded from equality so round-trip comparisons stay structural
    span: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BinaryOp:
    op: str  # one of add, sub, mul, div, pow
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class UnaryNeg:
    operand: "Expression"


@dataclass(frozen=True)
class FunctionCall:
    name: str
    args: tuple["Expression", ...]
    span: Any = field(default=None, compare=False, repr=False)


Expression = Union[NumberLiteral, VarRef, BinaryOp, UnaryNeg, FunctionCall]


@dataclass(frozen=True)
class DistCall:
    name: str
    args: tuple[Expression, ...]
    span: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Stochastic:
    target: VarRef
    dist: DistCall


@dataclass(frozen=True)
class Deterministic:
    target: VarRef
    expr: Expression


Relation = Union[Stochastic, Deterministic]


@dataclass(frozen=True)
class ForLoop:
    index_var: str
    lower: Expression
    upper: Expression
    body: tuple[Union[Relation, "ForLoop"], ...]


@dataclass(frozen=True)
class ModelAst:
    items: tuple[Union[Relation, ForLoop], ...]
    source_name: str = "<string>"

    def __eq__(self, other):
        # source_name is provenance, not structure
        if not isinstance(other, ModelAst):
            return NotImplemented
        return self.items == other.items

    def __hash__(self):
        return hash(self.items)


def walk_relations(items):
    """Yield (relation, loop_stack) pairs depth-first."""
    stack: list[ForLoop] = []

    def _gen(seq):
        for item in seq:
            if isinstance(item, ForLoop):
                stack.append(item)
                yield from _gen(item.body)
                stack.pop()
            else:
                yield item, tuple(stack)

    return _gen(items)
