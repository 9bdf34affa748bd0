"""Recursive-descent parser for the JAGS-subset model language.

Grammar (comments are dropped before parsing):

    model     := "model" "{" item* "}"
    item      := for_loop | relation
    for_loop  := "for" "(" IDENT "in" expr ":" expr ")" "{" item* "}"
    relation  := var_ref "~" dist_call
               | var_ref ("<-" | "=") expr
    dist_call := IDENT "(" [expr ("," expr)*] ")"
    var_ref   := IDENT [ "[" expr "]" ]

Expression precedence, loosest to tightest: +/-, */, unary minus, ^
(right-associative). `pow(a, b)` is normalized to the same BinaryOp as
`a ^ b` at parse time.
"""

from __future__ import annotations

from ..errors import ParseError
from .ast import (
    BinaryOp,
    Deterministic,
    DistCall,
    Expression,
    ForLoop,
    ModelAst,
    NumberLiteral,
    Stochastic,
    UnaryNeg,
    VarRef,
    FunctionCall,
)
from .tokens import SourceSpan, Token, TokenKind, tokenize

_EOF_SPAN_FALLBACK = SourceSpan(1, 1, 0)


class _Parser:
    def __init__(self, tokens: list[Token], strict_assign: bool = False):
        self.tokens = [t for t in tokens if t.kind is not TokenKind.COMMENT]
        self.pos = 0
        self.strict_assign = strict_assign

    # -- token plumbing -------------------------------------------------

    def _peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _span_here(self) -> SourceSpan:
        tok = self._peek()
        if tok is not None:
            return tok.span
        if self.tokens:
            last = self.tokens[-1].span
            return SourceSpan(last.line, last.column + last.length, 0)
        return _EOF_SPAN_FALLBACK

    def _error(self, message, expected=()):
        raise ParseError(message, self._span_here(), expected)

    def _at(self, *kinds: TokenKind) -> bool:
        tok = self._peek()
        return tok is not None and tok.kind in kinds

    def _expect(self, kind: TokenKind) -> Token:
        tok = self._peek()
        if tok is None or tok.kind is not kind:
            got = "end of input" if tok is None else repr(tok.text)
            self._error(f"unexpected {got}", expected={kind.value})
        self.pos += 1
        return tok

    def _accept(self, kind: TokenKind) -> Token | None:
        if self._at(kind):
            return self._expect(kind)
        return None

    # -- grammar --------------------------------------------------------

    def parse_model(self, source_name: str) -> ModelAst:
        self._expect(TokenKind.KW_MODEL)
        self._expect(TokenKind.LBRACE)
        items = self._items_until(TokenKind.RBRACE)
        self._expect(TokenKind.RBRACE)
        if self._peek() is not None:
            self._error("trailing input after model block")
        return ModelAst(items=tuple(items), source_name=source_name)

    def _items_until(self, closer: TokenKind):
        items = []
        while not self._at(closer):
            if self._peek() is None:
                self._error("unterminated block", expected={closer.value})
            items.append(self._item())
        return items

    def _item(self):
        if self._at(TokenKind.KW_FOR):
            return self._for_loop()
        return self._relation()

    def _for_loop(self) -> ForLoop:
        self._expect(TokenKind.KW_FOR)
        self._expect(TokenKind.LPAREN)
        index_var = self._expect(TokenKind.IDENTIFIER).text
        self._expect(TokenKind.KW_IN)
        lower = self.expression()
        self._expect(TokenKind.COLON)
        upper = self.expression()
        self._expect(TokenKind.RPAREN)
        self._expect(TokenKind.LBRACE)
        body = self._items_until(TokenKind.RBRACE)
        brace = self._expect(TokenKind.RBRACE)
        for item in body:
            if isinstance(item, ForLoop) and _shadows(item, index_var):
                raise ParseError(
                    f"loop index {index_var!r} shadowed by nested loop", brace.span
                )
        return ForLoop(index_var=index_var, lower=lower, upper=upper, body=tuple(body))

    def _relation(self):
        target = self._var_ref()
        if self._accept(TokenKind.TILDE):
            dist = self._dist_call()
            return Stochastic(target=target, dist=dist)
        if self._accept(TokenKind.ASSIGN_ARROW):
            return Deterministic(target=target, expr=self.expression())
        if self._at(TokenKind.EQUALS):
            if self.strict_assign:
                self._error("'=' not allowed in strict mode; use '<-'")
            self._expect(TokenKind.EQUALS)
            return Deterministic(target=target, expr=self.expression())
        self._error("expected relation operator", expected={"~", "<-", "="})

    def _dist_call(self) -> DistCall:
        name_tok = self._expect(TokenKind.IDENTIFIER)
        self._expect(TokenKind.LPAREN)
        args = []
        if not self._at(TokenKind.RPAREN):
            args.append(self.expression())
            while self._accept(TokenKind.COMMA):
                args.append(self.expression())
        self._expect(TokenKind.RPAREN)
        return DistCall(name=name_tok.text, args=tuple(args), span=name_tok.span)

    def _var_ref(self) -> VarRef:
        name_tok = self._expect(TokenKind.IDENTIFIER)
        index = None
        if self._accept(TokenKind.LBRACKET):
            index = self.expression()
            self._expect(TokenKind.RBRACKET)
        return VarRef(name=name_tok.text, index=index, span=name_tok.span)

    def expression(self) -> Expression:
        return self._additive()

    def _additive(self) -> Expression:
        left = self._multiplicative()
        while self._at(TokenKind.PLUS, TokenKind.MINUS):
            op = "add" if self._peek().kind is TokenKind.PLUS else "sub"
            self.pos += 1
            left = BinaryOp(op=op, left=left, right=self._multiplicative())
        return left

    def _multiplicative(self) -> Expression:
        left = self._unary()
        while self._at(TokenKind.STAR, TokenKind.SLASH):
            op = "mul" if self._peek().kind is TokenKind.STAR else "div"
            self.pos += 1
            left = BinaryOp(op=op, left=left, right=self._unary())
        return left

    def _unary(self) -> Expression:
        if self._accept(TokenKind.MINUS):
            return UnaryNeg(operand=self._unary())
        if self._accept(TokenKind.PLUS):
            return self._unary()
        return self._power()

    def _power(self) -> Expression:
        base = self._atom()
        if self._accept(TokenKind.CARET):
            # right-associative; exponent may carry its own unary minus
            return BinaryOp(op="pow", left=base, right=self._unary_power())
        return base

    def _unary_power(self) -> Expression:
        if self._accept(TokenKind.MINUS):
            return UnaryNeg(operand=self._unary_power())
        return self._power()

    def _atom(self) -> Expression:
        tok = self._peek()
        if tok is None:
            self._error("unexpected end of expression")
        if tok.kind is TokenKind.NUMBER:
            self.pos += 1
            return NumberLiteral(value=float(tok.text))
        if tok.kind is TokenKind.LPAREN:
            self.pos += 1
            inner = self.expression()
            self._expect(TokenKind.RPAREN)
            return inner
        if tok.kind is TokenKind.IDENTIFIER:
            self.pos += 1
            if self._at(TokenKind.LPAREN):
                self.pos += 1
                args = []
                if not self._at(TokenKind.RPAREN):
                    args.append(self.expression())
                    while self._accept(TokenKind.COMMA):
                        args.append(self.expression())
                self._expect(TokenKind.RPAREN)
                if tok.text == "pow":
                    if len(args) != 2:
                        raise ParseError("pow takes exactly 2 arguments", tok.span)
                    return BinaryOp(op="pow", left=args[0], right=args[1])
                return FunctionCall(name=tok.text, args=tuple(args), span=tok.span)
            index = None
            if self._accept(TokenKind.LBRACKET):
                index = self.expression()
                self._expect(TokenKind.RBRACKET)
            return VarRef(name=tok.text, index=index, span=tok.span)
        self._error(
            f"unexpected {tok.text!r} in expression",
            expected={"number", "identifier", "("},
        )


def _shadows(loop: ForLoop, name: str) -> bool:
    if loop.index_var == name:
        return True
    return any(isinstance(it, ForLoop) and _shadows(it, name) for it in loop.body)


def parse_model(source: str, source_name: str = "<string>", strict_assign: bool = False) -> ModelAst:
    """Parse a full `model { ... }` program into a ModelAst.

    strict_assign rejects `=` for deterministic relations (strict JAGS).
    """
    tokens = tokenize(source)
    return _Parser(tokens, strict_assign=strict_assign).parse_model(source_name)


def parse_expression(source: str) -> Expression:
    """Parse a bare arithmetic expression (used for queries and trial specs)."""
    tokens = tokenize(source)
    parser = _Parser(tokens)
    expr = parser.expression()
    if parser._peek() is not None:
        parser._error("trailing input after expression")
    return expr


# -- canonical pretty-printer ------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}
_OP_TEXT = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


def format_expression(expr: Expression) -> str:
    return _fmt(expr, 0)


def _fmt(expr, parent_prec: int) -> str:
    if isinstance(expr, NumberLiteral):
        value = expr.value
        text = repr(value)
        return text
    if isinstance(expr, VarRef):
        if expr.index is None:
            return expr.name
        return f"{expr.name}[{_fmt(expr.index, 0)}]"
    if isinstance(expr, UnaryNeg):
        inner = _fmt(expr.operand, _PREC["neg"])
        text = f"-{inner}"
        return f"({text})" if parent_prec > _PREC["neg"] else text
    if isinstance(expr, FunctionCall):
        args = ", ".join(_fmt(a, 0) for a in expr.args)
        return f"{expr.name}({args})"
    if isinstance(expr, BinaryOp):
        prec = _PREC[expr.op]
        if expr.op == "pow":
            left = _fmt(expr.left, prec + 1)  # pow is right-associative
            right = _fmt(expr.right, prec)
        else:
            left = _fmt(expr.left, prec)
            right = _fmt(expr.right, prec + 1)
        text = f"{left} {_OP_TEXT[expr.op]} {right}" if expr.op != "pow" else f"{left}^{right}"
        return f"({text})" if prec < parent_prec else text
    raise TypeError(f"not an expression: {expr!r}")


def format_model(ast: ModelAst) -> str:
    """Canonical text form; parse(format_model(ast)) == ast."""
    lines = ["model {"]
    _fmt_items(ast.items, lines, 1)
    lines.append("}")
    return "\n".join(lines) + "\n"


def _fmt_items(items, lines, depth):
    pad = "  " * depth
    for item in items:
        if isinstance(item, ForLoop):
            lines.append(
                f"{pad}for ({item.index_var} in {_fmt(item.lower, 0)}:{_fmt(item.upper, 0)}) {{"
            )
            _fmt_items(item.body, lines, depth + 1)
            lines.append(f"{pad}}}")
        elif isinstance(item, Stochastic):
            args = ", ".join(_fmt(a, 0) for a in item.dist.args)
            lines.append(f"{pad}{_fmt(item.target, 0)} ~ {item.dist.name}({args})")
        elif isinstance(item, Deterministic):
            lines.append(f"{pad}{_fmt(item.target, 0)} <- {_fmt(item.expr, 0)}")
        else:
            raise TypeError(f"not a model item: {item!r}")
