from .tokens import SourceSpan, Token, TokenKind, tokenize
from .ast import (
    BinaryOp,
    Deterministic,
    DistCall,
    Expression,
    ForLoop,
    FunctionCall,
    ModelAst,
    NumberLiteral,
    Relation,
    Stochastic,
    UnaryNeg,
    VarRef,
)
from .parser import format_model, parse_expression, parse_model
from .semantics import (
    BUILTIN_FUNCTIONS,
    DISTRIBUTIONS,
    Diagnostic,
    Severity,
    check_semantics,
)

__all__ = [
    "SourceSpan",
    "Token",
    "TokenKind",
    "tokenize",
    "Expression",
    "NumberLiteral",
    "VarRef",
    "BinaryOp",
    "UnaryNeg",
    "FunctionCall",
    "DistCall",
    "Relation",
    "Stochastic",
    "Deterministic",
    "ForLoop",
    "ModelAst",
    "parse_model",
    "parse_expression",
    "format_model",
    "check_semantics",
    "Diagnostic",
    "Severity",
    "DISTRIBUTIONS",
    "BUILTIN_FUNCTIONS",
]
