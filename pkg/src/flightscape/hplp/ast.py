"""Syntax tree for the probabilistic rule language.

Programs are tuples of statements.  Statement kinds:

* ``Fact``                 -- a deterministic ground atom.
* ``ProbFact``             -- ``0.9::atom.``
* ``AnnotatedDisjunction`` -- ``0.1::fog; 0.9::clear.``
* ``DistFact``             -- ``charge ~ normal(90, 5).`` (second parameter
                              is the variance, not the standard deviation).
* ``Rule``                 -- ``head :- body.`` with an optional head
                              probability and ``;``-separated body disjuncts.
* ``Query``                -- ``query(atom).``

Terms inside atoms are variables, constants, or numbers.  Arithmetic lives
only in rule bodies (comparisons and ``is`` evaluations).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union


@dataclass(frozen=True)
class Var:
    """A logic variable; names start with an uppercase letter or ``_``."""

    name: str


@dataclass(frozen=True)
class Const:
    """A symbolic constant; names start with a lowercase letter."""

    name: str


@dataclass(frozen=True)
class Number:
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", float(self.value))


Term = Union[Var, Const, Number]


@dataclass(frozen=True)
class Atom:
    functor: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class BinaryOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Negate:
    operand: "Expr"


# Atoms may appear in arithmetic as references to distributional values.
Expr = Union[Number, Var, Const, Atom, BinaryOp, Negate]


@dataclass(frozen=True)
class Call:
    """Body literal that calls another atom."""

    atom: Atom


@dataclass(frozen=True)
class Comparison:
    left: Expr
    op: str  # one of < > =< >=
    right: Expr


@dataclass(frozen=True)
class Evaluation:
    """``Var is Expr`` -- binds Var to the value of the expression."""

    var: Var
    expr: Expr


Literal = Union[Call, Comparison, Evaluation]


@dataclass(frozen=True)
class Fact:
    atom: Atom


@dataclass(frozen=True)
class ProbFact:
    probability: float
    atom: Atom

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"fact probability out of range: {self.probability}")


@dataclass(frozen=True)
class AnnotatedDisjunction:
    """Mutually exclusive alternatives; weights may sum to less than one,
    in which case the residual mass selects none of the heads."""

    choices: tuple[tuple[float, Atom], ...]

    def __post_init__(self) -> None:
        if len(self.choices) < 2:
            raise ValueError("annotated disjunction needs at least two choices")
        total = sum(w for w, _ in self.choices)
        if total > 1.0 + 1e-9:
            raise ValueError(f"annotated disjunction weights sum to {total}")
        for w, _ in self.choices:
            if w < 0.0:
                raise ValueError(f"negative disjunction weight: {w}")


@dataclass(frozen=True)
class DistFact:
    """``atom ~ family(params...)``.  Only the normal family is defined;
    its parameters are mean and variance."""

    atom: Atom
    family: str
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.family != "normal":
            raise ValueError(f"unknown distribution family: {self.family}")
        if len(self.params) != 2:
            raise ValueError("normal takes exactly two parameters (mean, variance)")
        if not math.isinf(self.params[1]) and self.params[1] < 0.0:
            raise ValueError(f"negative variance: {self.params[1]}")


@dataclass(frozen=True)
class Rule:
    """``head :- d1 ; d2 ; ...`` where each disjunct is a conjunction of
    literals.  An optional head probability attaches an independent
    Bernoulli switch to every ground instance."""

    head: Atom
    disjuncts: tuple[tuple[Literal, ...], ...]
    probability: float | None = None

    def __post_init__(self) -> None:
        if not self.disjuncts or any(not d for d in self.disjuncts):
            raise ValueError("rule body must have at least one literal per disjunct")
        if self.probability is not None and not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"rule probability out of range: {self.probability}")


@dataclass(frozen=True)
class Query:
    atom: Atom


Statement = Union[Fact, ProbFact, AnnotatedDisjunction, DistFact, Rule, Query]


@dataclass(frozen=True)
class MissionProgram:
    statements: tuple[Statement, ...] = field(default_factory=tuple)

    @property
    def queries(self) -> tuple[Query, ...]:
        return tuple(s for s in self.statements if isinstance(s, Query))

    def render(self) -> str:
        """Canonical text form; re-parsing it yields an equal program."""
        return "".join(render_statement(s) + "\n" for s in self.statements)


def _render_number(value: float) -> str:
    if math.isinf(value):
        return "-inf" if value < 0 else "inf"
    return repr(value)


def render_term(term: Term) -> str:
    if isinstance(term, Var):
        return term.name
    if isinstance(term, Const):
        return term.name
    return _render_number(term.value)


def render_atom(atom: Atom) -> str:
    if not atom.args:
        return atom.functor
    inner = ", ".join(render_term(a) for a in atom.args)
    return f"{atom.functor}({inner})"


def render_expr(expr: Expr) -> str:
    if isinstance(expr, Number):
        return _render_number(expr.value)
    if isinstance(expr, (Var, Const)):
        return expr.name
    if isinstance(expr, Atom):
        return render_atom(expr)
    if isinstance(expr, Negate):
        return f"-({render_expr(expr.operand)})"
    return f"({render_expr(expr.left)} {expr.op} {render_expr(expr.right)})"


def render_literal(lit: Literal) -> str:
    if isinstance(lit, Call):
        return render_atom(lit.atom)
    if isinstance(lit, Evaluation):
        return f"{lit.var.name} is {render_expr(lit.expr)}"
    return f"{render_expr(lit.left)} {lit.op} {render_expr(lit.right)}"


def render_statement(stmt: Statement) -> str:
    if isinstance(stmt, Fact):
        return f"{render_atom(stmt.atom)}."
    if isinstance(stmt, ProbFact):
        return f"{_render_number(stmt.probability)}::{render_atom(stmt.atom)}."
    if isinstance(stmt, AnnotatedDisjunction):
        parts = "; ".join(
            f"{_render_number(w)}::{render_atom(a)}" for w, a in stmt.choices
        )
        return f"{parts}."
    if isinstance(stmt, DistFact):
        params = ", ".join(_render_number(p) for p in stmt.params)
        return f"{render_atom(stmt.atom)} ~ {stmt.family}({params})."
    if isinstance(stmt, Rule):
        body = "; ".join(
            ", ".join(render_literal(lit) for lit in d) for d in stmt.disjuncts
        )
        head = render_atom(stmt.head)
        if stmt.probability is not None:
            head = f"{_render_number(stmt.probability)}::{head}"
        return f"{head} :- {body}."
    return f"query({render_atom(stmt.atom)})."
