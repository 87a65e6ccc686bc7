"""Tokenizer and recursive-descent parser for the rule language.

The grammar this accepts:

    program    : statement*
    statement  : 'query' '(' atom ')' '.'
               | weight '::' atom (';' weight '::' atom)* (':-' body)? '.'
               | atom '~' name '(' number (',' number)* ')' '.'
               | atom (':-' body)? '.'
    weight     : NUMBER ('/' NUMBER)?
    body       : conjunct (';' conjunct)*
    conjunct   : literal (',' literal)*
    literal    : VAR 'is' expr
               | expr (('<'|'>'|'=<'|'>=') expr)?
    expr       : term (('+'|'-') term)*
    term       : unary (('*'|'/') unary)*
    unary      : '-' unary | primary
    primary    : NUMBER | VAR | atom | '(' expr ')'

``%`` starts a comment running to end of line.  ``inf`` is a number
literal.  Variables start with an uppercase letter or underscore,
constants and functors with a lowercase letter.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .ast import (
    AnnotatedDisjunction,
    Atom,
    BinaryOp,
    Call,
    Comparison,
    Const,
    DistFact,
    Evaluation,
    Expr,
    Fact,
    Literal,
    MissionProgram,
    Negate,
    Number,
    ProbFact,
    Query,
    Rule,
    Statement,
    Term,
    Var,
)


class ParseError(Exception):
    """Syntax or validation error with a source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int
    value: float = 0.0


_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")
_NAME_RE = re.compile(r"[a-z][A-Za-z0-9_]*")
_VAR_RE = re.compile(r"[_A-Z][A-Za-z0-9_]*")
_PUNCT = ("::", ":-", "=<", ">=", "(", ")", ",", ";", ".", "~", "<", ">", "+", "-", "*", "/")


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    line = 1
    col = 1
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch == "\n":
            pos += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            pos += 1
            col += 1
            continue
        if ch == "%":
            while pos < n and text[pos] != "\n":
                pos += 1
            continue
        m = _NUMBER_RE.match(text, pos)
        if m:
            tokens.append(_Token("number", m.group(), line, col, float(m.group())))
            col += m.end() - pos
            pos = m.end()
            continue
        m = _NAME_RE.match(text, pos)
        if m:
            word = m.group()
            if word == "inf":
                tokens.append(_Token("number", word, line, col, math.inf))
            else:
                tokens.append(_Token("name", word, line, col))
            col += m.end() - pos
            pos = m.end()
            continue
        m = _VAR_RE.match(text, pos)
        if m:
            tokens.append(_Token("var", m.group(), line, col))
            col += m.end() - pos
            pos = m.end()
            continue
        for punct in _PUNCT:
            if text.startswith(punct, pos):
                tokens.append(_Token(punct, punct, line, col))
                col += len(punct)
                pos += len(punct)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


_COMPARE_OPS = ("<", ">", "=<", ">=")


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, offset: int = 0) -> _Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            found = tok.text or "end of input"
            raise ParseError(f"expected {what}, found {found!r}", tok.line, tok.column)
        return self.advance()

    def fail(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.column)

    # statements ---------------------------------------------------------

    def program(self) -> MissionProgram:
        statements: list[Statement] = []
        while self.peek().kind != "eof":
            statements.append(self.statement())
        return MissionProgram(tuple(statements))

    def statement(self) -> Statement:
        tok = self.peek()
        if tok.kind == "name" and tok.text == "query" and self.peek(1).kind == "(":
            self.advance()
            self.advance()
            atom = self.atom()
            self.expect(")", "')' closing query")
            self.expect(".", "'.' after query")
            return Query(atom)
        if tok.kind == "number":
            return self.weighted_clause()
        if tok.kind == "name":
            return self.plain_clause()
        raise self.fail(f"expected a statement, found {tok.text or 'end of input'!r}")

    def weight(self) -> float:
        tok = self.expect("number", "a probability")
        value = tok.value
        if self.peek().kind == "/":
            self.advance()
            denom = self.expect("number", "a denominator")
            if denom.value == 0:
                raise ParseError("zero denominator in weight", denom.line, denom.column)
            value = value / denom.value
        if not 0.0 <= value <= 1.0:
            raise ParseError(f"probability {value} outside [0, 1]", tok.line, tok.column)
        return value

    def weighted_clause(self) -> Statement:
        start = self.peek()
        choices: list[tuple[float, Atom]] = []
        while True:
            w = self.weight()
            self.expect("::", "'::' after probability")
            choices.append((w, self.atom()))
            if self.peek().kind != ";":
                break
            self.advance()
        if len(choices) > 1:
            if self.peek().kind == ":-":
                raise self.fail("annotated disjunctions cannot have a body")
            total = sum(w for w, _ in choices)
            if total > 1.0 + 1e-9:
                raise ParseError(
                    f"disjunction weights sum to {total}", start.line, start.column
                )
            self.expect(".", "'.' after annotated disjunction")
            return AnnotatedDisjunction(tuple(choices))
        prob, head = choices[0]
        if self.peek().kind == ":-":
            self.advance()
            body = self.body()
            self.expect(".", "'.' after rule body")
            return Rule(head, body, probability=prob)
        self.expect(".", "'.' after fact")
        return ProbFact(prob, head)

    def plain_clause(self) -> Statement:
        head = self.atom()
        tok = self.peek()
        if tok.kind == "~":
            self.advance()
            family = self.expect("name", "a distribution name")
            self.expect("(", "'(' after distribution name")
            params = [self.signed_number()]
            while self.peek().kind == ",":
                self.advance()
                params.append(self.signed_number())
            self.expect(")", "')' closing distribution parameters")
            self.expect(".", "'.' after distributional fact")
            try:
                return DistFact(head, family.text, tuple(params))
            except ValueError as exc:
                raise ParseError(str(exc), family.line, family.column) from None
        if tok.kind == ":-":
            self.advance()
            body = self.body()
            self.expect(".", "'.' after rule body")
            return Rule(head, body)
        self.expect(".", "'.' after fact")
        return Fact(head)

    def signed_number(self) -> float:
        sign = 1.0
        if self.peek().kind == "-":
            self.advance()
            sign = -1.0
        tok = self.expect("number", "a number")
        return sign * tok.value

    # terms and bodies ---------------------------------------------------

    def atom(self) -> Atom:
        functor = self.expect("name", "an atom")
        if self.peek().kind != "(":
            return Atom(functor.text)
        self.advance()
        args = [self.term()]
        while self.peek().kind == ",":
            self.advance()
            args.append(self.term())
        self.expect(")", "')' closing argument list")
        return Atom(functor.text, tuple(args))

    def term(self) -> Term:
        tok = self.peek()
        if tok.kind == "var":
            self.advance()
            return Var(tok.text)
        if tok.kind == "name":
            self.advance()
            if self.peek().kind == "(":
                raise self.fail("nested terms are not supported in atom arguments")
            return Const(tok.text)
        if tok.kind == "number" or tok.kind == "-":
            return Number(self.signed_number())
        raise self.fail(f"expected a term, found {tok.text or 'end of input'!r}")

    def body(self) -> tuple[tuple[Literal, ...], ...]:
        disjuncts = [self.conjunct()]
        while self.peek().kind == ";":
            self.advance()
            disjuncts.append(self.conjunct())
        return tuple(disjuncts)

    def conjunct(self) -> tuple[Literal, ...]:
        literals = [self.literal()]
        while self.peek().kind == ",":
            self.advance()
            literals.append(self.literal())
        return tuple(literals)

    def literal(self) -> Literal:
        tok = self.peek()
        if tok.kind == "var" and self.peek(1).kind == "name" and self.peek(1).text == "is":
            self.advance()
            self.advance()
            return Evaluation(Var(tok.text), self.expr())
        left = self.expr()
        op = self.peek()
        if op.kind in _COMPARE_OPS:
            self.advance()
            return Comparison(left, op.kind, self.expr())
        if isinstance(left, Atom):
            return Call(left)
        raise ParseError(
            "expected a comparison operator after arithmetic expression",
            op.line,
            op.column,
        )

    def expr(self) -> Expr:
        node = self.term_expr()
        while self.peek().kind in ("+", "-"):
            op = self.advance()
            node = BinaryOp(op.kind, node, self.term_expr())
        return node

    def term_expr(self) -> Expr:
        node = self.unary()
        while self.peek().kind in ("*", "/"):
            op = self.advance()
            node = BinaryOp(op.kind, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek().kind == "-":
            self.advance()
            return Negate(self.unary())
        return self.primary()

    def primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return Number(tok.value)
        if tok.kind == "var":
            self.advance()
            return Var(tok.text)
        if tok.kind == "name":
            return self.atom()
        if tok.kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")", "')' closing expression")
            return node
        raise self.fail(f"expected an expression, found {tok.text or 'end of input'!r}")


def parse_program(text: str) -> MissionProgram:
    """Parse source text into a program, raising ParseError on the first
    problem found."""
    return _Parser(_tokenize(text)).program()


def parse_diagnostics(text: str) -> list[dict]:
    """Diagnostics suitable for serialization: empty when the text parses."""
    try:
        parse_program(text)
    except ParseError as exc:
        return [{"line": exc.line, "column": exc.column, "message": exc.message}]
    return []
