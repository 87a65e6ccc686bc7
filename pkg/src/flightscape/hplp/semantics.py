"""Grounding and inference over the rule language.

The pipeline is: ``specialize`` merges a program with generated clause
statements and binds query variables, ``ground_program`` computes the
ground instances bottom-up, and the ``infer_*`` functions estimate query
probabilities over the induced distribution on possible worlds.

Programs are negation-free, so each world has a unique least model and
truth is monotone: evaluation ANDs body literals and ORs disjuncts until
a fixpoint.  Sampling draws every random source in a canonical order
(statement order, then rule switches) from a single counter-based
stream, which keeps results bitwise reproducible for a given seed and
context regardless of how cells are batched or scheduled.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .. import rng
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
    render_atom,
)


class UnknownAtomError(ValueError):
    """A rule references a spatial relation with no declared clauses."""


class UnsupportedProgramError(ValueError):
    """The program falls outside what the requested solver handles."""


class CapacityError(ValueError):
    """Exact enumeration would exceed the switch budget."""


class EvaluationError(ValueError):
    """A rule uses a variable that no literal binds."""


# Ground atoms are plain tuples: (functor, arg, ...) with constant names
# as strings and numbers as floats.  They key every truth/value table.
GroundAtom = tuple


@dataclass(frozen=True)
class InferenceParams:
    sample_count: int = 2500
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sample_count < 1:
            raise ValueError(f"sample_count must be positive: {self.sample_count}")


@dataclass(frozen=True)
class GroundInstance:
    """One ground rule body: statics are variable-free comparisons and
    evaluations, calls are atoms resolved against the truth table."""

    head: GroundAtom
    calls: tuple[GroundAtom, ...]
    statics: tuple[Literal, ...]
    switch_prob: float | None


@dataclass(frozen=True)
class GroundProgram:
    det_facts: tuple[GroundAtom, ...]
    prob_facts: tuple[tuple[float, GroundAtom], ...]
    disjunctions: tuple[tuple[tuple[float, GroundAtom], ...], ...]
    dist_facts: tuple[tuple[GroundAtom, str, tuple[float, ...]], ...]
    instances: tuple[GroundInstance, ...]
    queries: tuple[GroundAtom, ...]
    # (kind, index) pairs in statement order; fixes the sampling order.
    source_order: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class PossibleWorld:
    """A single joint outcome of every random source."""

    truths: dict[GroundAtom, bool]
    values: dict[GroundAtom, float]
    switches: dict[int, bool]


# --------------------------------------------------------------------------
# specialization


def _term_key(term: Term):
    if isinstance(term, Const):
        return term.name
    if isinstance(term, Number):
        return term.value
    raise ValueError(f"term is not ground: {term}")


def _atom_key(atom: Atom) -> GroundAtom:
    return (atom.functor,) + tuple(_term_key(a) for a in atom.args)


def _atoms_in_expr(expr: Expr):
    if isinstance(expr, Atom):
        yield expr
    elif isinstance(expr, BinaryOp):
        yield from _atoms_in_expr(expr.left)
        yield from _atoms_in_expr(expr.right)
    elif isinstance(expr, Negate):
        yield from _atoms_in_expr(expr.operand)


def _atoms_in_literal(lit: Literal):
    if isinstance(lit, Call):
        yield lit.atom
    elif isinstance(lit, Comparison):
        yield from _atoms_in_expr(lit.left)
        yield from _atoms_in_expr(lit.right)
    else:
        yield from _atoms_in_expr(lit.expr)


def _spatial_tags(statements: tuple[Statement, ...], functor: str) -> set[str]:
    """Tags referenced as the third argument of functor/3 atoms in rule
    bodies and queries."""
    tags: set[str] = set()
    for stmt in statements:
        atoms = []
        if isinstance(stmt, Rule):
            for disjunct in stmt.disjuncts:
                for lit in disjunct:
                    atoms.extend(_atoms_in_literal(lit))
        elif isinstance(stmt, Query):
            atoms.append(stmt.atom)
        for atom in atoms:
            if atom.functor == functor and len(atom.args) == 3:
                tag = atom.args[2]
                if isinstance(tag, Const):
                    tags.add(tag.name)
    return tags


def _declared_tags(statements: tuple[Statement, ...], functor: str) -> set[str]:
    tags: set[str] = set()
    for stmt in statements:
        atom = None
        if isinstance(stmt, DistFact):
            atom = stmt.atom
        elif isinstance(stmt, ProbFact):
            atom = stmt.atom
        elif isinstance(stmt, Fact):
            atom = stmt.atom
        if atom is not None and atom.functor == functor and len(atom.args) == 3:
            tag = atom.args[2]
            if isinstance(tag, Const):
                tags.add(tag.name)
    return tags


def specialize(
    program: MissionProgram,
    clauses: tuple[Statement, ...] = (),
    bindings: dict[str, Term] | None = None,
) -> MissionProgram:
    """Merge generated clauses into the program and substitute query
    variables per ``bindings`` (variable name to ground term).

    Raises UnknownAtomError when rules reference a distance or occupancy
    tag that neither the program nor the clauses declare.  The operation
    is idempotent: specializing an already specialized program with the
    same arguments changes nothing.
    """
    bindings = bindings or {}
    statements: list[Statement] = []
    for stmt in program.statements:
        if isinstance(stmt, Query) and bindings:
            args = tuple(
                bindings.get(a.name, a) if isinstance(a, Var) else a
                for a in stmt.atom.args
            )
            stmt = Query(Atom(stmt.atom.functor, args))
        statements.append(stmt)
    merged = tuple(statements) + tuple(c for c in clauses if c not in statements)

    for functor in ("distance", "over"):
        wanted = _spatial_tags(merged, functor)
        declared = _declared_tags(merged, functor)
        missing = sorted(wanted - declared)
        if missing:
            raise UnknownAtomError(
                f"program references {functor} over undeclared feature types: "
                + ", ".join(missing)
            )
    return MissionProgram(merged)


# --------------------------------------------------------------------------
# grounding


def _expr_vars(expr: Expr) -> set[str]:
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Atom):
        return {a.name for a in expr.args if isinstance(a, Var)}
    if isinstance(expr, BinaryOp):
        return _expr_vars(expr.left) | _expr_vars(expr.right)
    if isinstance(expr, Negate):
        return _expr_vars(expr.operand)
    return set()


def _subst_term(term: Term, subst: dict[str, Term]) -> Term:
    if isinstance(term, Var):
        return subst.get(term.name, term)
    return term


def _subst_atom(atom: Atom, subst: dict[str, Term]) -> Atom:
    return Atom(atom.functor, tuple(_subst_term(a, subst) for a in atom.args))


def _subst_expr(expr: Expr, subst: dict[str, Term]) -> Expr:
    if isinstance(expr, Var):
        replacement = subst.get(expr.name)
        if replacement is None:
            return expr
        return replacement
    if isinstance(expr, Atom):
        return _subst_atom(expr, subst)
    if isinstance(expr, BinaryOp):
        return BinaryOp(expr.op, _subst_expr(expr.left, subst), _subst_expr(expr.right, subst))
    if isinstance(expr, Negate):
        return Negate(_subst_expr(expr.operand, subst))
    return expr


def _subst_literal(lit: Literal, subst: dict[str, Term]) -> Literal:
    if isinstance(lit, Call):
        return Call(_subst_atom(lit.atom, subst))
    if isinstance(lit, Comparison):
        return Comparison(_subst_expr(lit.left, subst), lit.op, _subst_expr(lit.right, subst))
    return Evaluation(lit.var, _subst_expr(lit.expr, subst))


def _unify_atom(pattern: Atom, fact: GroundAtom, subst: dict[str, Term]) -> dict[str, Term] | None:
    if pattern.functor != fact[0] or len(pattern.args) != len(fact) - 1:
        return None
    out = dict(subst)
    for arg, value in zip(pattern.args, fact[1:]):
        term = Const(value) if isinstance(value, str) else Number(value)
        if isinstance(arg, Var):
            bound = out.get(arg.name)
            if bound is None:
                out[arg.name] = term
            elif bound != term:
                return None
        elif arg != term:
            return None
    return out


def _require_ground(atom: Atom, what: str) -> GroundAtom:
    for arg in atom.args:
        if isinstance(arg, Var):
            raise EvaluationError(f"{what} '{render_atom(atom)}' must be ground")
    return _atom_key(atom)


def _universe(statements: tuple[Statement, ...]) -> list[Term]:
    """Every ground term appearing in an atom argument position."""
    seen: dict = {}

    def visit(atom: Atom) -> None:
        for arg in atom.args:
            if not isinstance(arg, Var):
                seen.setdefault(arg, None)

    for stmt in statements:
        if isinstance(stmt, (Fact, ProbFact, DistFact, Query)):
            visit(stmt.atom)
        elif isinstance(stmt, AnnotatedDisjunction):
            for _, atom in stmt.choices:
                visit(atom)
        elif isinstance(stmt, Rule):
            visit(stmt.head)
            for disjunct in stmt.disjuncts:
                for lit in disjunct:
                    for atom in _atoms_in_literal(lit):
                        visit(atom)

    def order(term: Term):
        if isinstance(term, Const):
            return (0, "", term.name)
        return (1, repr(term.value), "")

    return sorted(seen, key=order)


def ground_program(program: MissionProgram) -> GroundProgram:
    """Instantiate rules bottom-up against the derivable atom set.

    Variables in relational positions that body calls leave unbound are
    instantiated from the program's ground-term universe; instances whose
    value references name undeclared distributional atoms are dropped.
    A variable used only in arithmetic with no binder is an error.
    """
    det_facts: list[GroundAtom] = []
    prob_facts: list[tuple[float, GroundAtom]] = []
    disjunctions: list[tuple[tuple[float, GroundAtom], ...]] = []
    dist_facts: list[tuple[GroundAtom, str, tuple[float, ...]]] = []
    queries: list[GroundAtom] = []
    rules: list[tuple[int, Rule]] = []
    source_order: list[tuple[str, int]] = []

    possible: dict[GroundAtom, None] = {}
    value_atoms: set[GroundAtom] = set()

    for index, stmt in enumerate(program.statements):
        if isinstance(stmt, Fact):
            key = _require_ground(stmt.atom, "fact")
            det_facts.append(key)
            possible.setdefault(key, None)
        elif isinstance(stmt, ProbFact):
            key = _require_ground(stmt.atom, "probabilistic fact")
            source_order.append(("prob", len(prob_facts)))
            prob_facts.append((stmt.probability, key))
            possible.setdefault(key, None)
        elif isinstance(stmt, AnnotatedDisjunction):
            choices = []
            for weight, atom in stmt.choices:
                key = _require_ground(atom, "disjunction head")
                choices.append((weight, key))
                possible.setdefault(key, None)
            source_order.append(("ad", len(disjunctions)))
            disjunctions.append(tuple(choices))
        elif isinstance(stmt, DistFact):
            key = _require_ground(stmt.atom, "distributional fact")
            source_order.append(("dist", len(dist_facts)))
            dist_facts.append((key, stmt.family, stmt.params))
            value_atoms.add(key)
        elif isinstance(stmt, Query):
            queries.append(_require_ground(stmt.atom, "query"))
        elif isinstance(stmt, Rule):
            rules.append((index, stmt))

    universe = _universe(program.statements)

    # Instances keyed for dedup; values keep first-seen creation order.
    instances: dict[tuple, tuple[int, int, GroundInstance]] = {}

    def instantiate(rule_index: int, disjunct_index: int, rule: Rule) -> bool:
        disjunct = rule.disjuncts[disjunct_index]
        calls = [lit for lit in disjunct if isinstance(lit, Call)]
        statics = [lit for lit in disjunct if not isinstance(lit, Call)]

        substs: list[dict[str, Term]] = [{}]
        for call in calls:
            step: list[dict[str, Term]] = []
            for subst in substs:
                pattern = _subst_atom(call.atom, subst)
                for fact in possible:
                    extended = _unify_atom(pattern, fact, subst)
                    if extended is not None:
                        step.append(extended)
            substs = step
            if not substs:
                return False

        # Relational positions: head arguments plus arguments of atoms
        # referenced inside arithmetic.  Unbound ones range over the
        # ground-term universe.
        relational: list[str] = []
        for arg in rule.head.args:
            if isinstance(arg, Var) and arg.name not in relational:
                relational.append(arg.name)
        for lit in statics:
            for atom in _atoms_in_literal(lit):
                for arg in atom.args:
                    if isinstance(arg, Var) and arg.name not in relational:
                        relational.append(arg.name)

        eval_bound = {lit.var.name for lit in statics if isinstance(lit, Evaluation)}
        for name in relational:
            if name in eval_bound and not all(name in s for s in substs):
                raise EvaluationError(
                    f"rule '{render_atom(rule.head)}': variable {name} is bound "
                    "only by arithmetic but used in an atom position"
                )

        grew = False
        for subst in substs:
            free = [n for n in relational if n not in subst]
            for combo in itertools.product(universe, repeat=len(free)):
                full = dict(subst)
                full.update(zip(free, combo))

                # Any arithmetic-only variable with no binder is an error.
                loose = set()
                for lit in statics:
                    loose |= _expr_vars(lit.expr if isinstance(lit, Evaluation) else lit.left)
                    if isinstance(lit, Comparison):
                        loose |= _expr_vars(lit.right)
                loose -= set(full) | eval_bound
                if loose:
                    raise EvaluationError(
                        f"rule '{render_atom(rule.head)}': variable "
                        f"{sorted(loose)[0]} is not bound by any atom"
                    )

                ground_statics = tuple(_subst_literal(lit, full) for lit in statics)

                # Drop instances whose value references name atoms that no
                # distributional clause declares.
                dropped = False
                for lit in ground_statics:
                    for atom in _atoms_in_literal(lit):
                        if any(isinstance(a, Var) for a in atom.args):
                            raise EvaluationError(
                                f"rule '{render_atom(rule.head)}': value reference "
                                f"'{render_atom(atom)}' is not fully bound"
                            )
                        if _atom_key(atom) not in value_atoms:
                            dropped = True
                if dropped:
                    continue

                head_key = _atom_key(_subst_atom(rule.head, full))
                call_keys = tuple(_atom_key(_subst_atom(c.atom, full)) for c in calls)
                dedup = (rule_index, disjunct_index, head_key, call_keys, ground_statics)
                if dedup in instances:
                    continue
                instance = GroundInstance(
                    head=head_key,
                    calls=call_keys,
                    statics=ground_statics,
                    switch_prob=rule.probability,
                )
                instances[dedup] = (rule_index, disjunct_index, instance)
                if head_key not in possible:
                    possible[head_key] = None
                    grew = True
        return grew

    changed = True
    while changed:
        changed = False
        for rule_index, rule in rules:
            for disjunct_index in range(len(rule.disjuncts)):
                if instantiate(rule_index, disjunct_index, rule):
                    changed = True

    ordered = sorted(
        instances.values(),
        key=lambda item: (item[0], item[1], repr(item[2].head), repr(item[2].calls), repr(item[2].statics)),
    )
    return GroundProgram(
        det_facts=tuple(det_facts),
        prob_facts=tuple(prob_facts),
        disjunctions=tuple(disjunctions),
        dist_facts=tuple(dist_facts),
        instances=tuple(inst for _, _, inst in ordered),
        queries=tuple(queries),
        source_order=tuple(source_order),
    )


# --------------------------------------------------------------------------
# evaluation


class _NonNumeric(Exception):
    pass


def _eval_expr(expr: Expr, env: dict[str, object], values: dict[GroundAtom, object]):
    if isinstance(expr, Number):
        return expr.value
    if isinstance(expr, Var):
        value = env.get(expr.name)
        if value is None:
            raise EvaluationError(f"variable {expr.name} used before it is bound")
        return value
    if isinstance(expr, Const):
        raise _NonNumeric
    if isinstance(expr, Atom):
        return values[_atom_key(expr)]
    if isinstance(expr, Negate):
        return -_eval_expr(expr.operand, env, values)
    left = _eval_expr(expr.left, env, values)
    right = _eval_expr(expr.right, env, values)
    if expr.op == "+":
        return left + right
    if expr.op == "-":
        return left - right
    if expr.op == "*":
        return left * right
    return left / right


_COMPARE = {
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "=<": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
}


def _static_mask(instance: GroundInstance, values: dict[GroundAtom, object], n: int):
    """Truth of the instance's comparisons across all samples at once."""
    mask = np.ones(n, dtype=bool)
    env: dict[str, object] = {}
    try:
        with np.errstate(divide="ignore", invalid="ignore"):
            for lit in instance.statics:
                if isinstance(lit, Evaluation):
                    env[lit.var.name] = _eval_expr(lit.expr, env, values)
                else:
                    left = _eval_expr(lit.left, env, values)
                    right = _eval_expr(lit.right, env, values)
                    mask = mask & _COMPARE[lit.op](left, right)
    except _NonNumeric:
        return np.zeros(n, dtype=bool)
    return mask


def _draw_sources(
    ground: GroundProgram,
    n: int,
    gen: np.random.Generator,
    prob_overrides: dict[int, float] | None = None,
    dist_overrides: dict[int, tuple[float, ...]] | None = None,
):
    """Draw every random source in canonical order from one stream.

    Every source always consumes exactly one vector of draws, so the
    stream position of each source never depends on parameter values.
    """
    base: dict[GroundAtom, np.ndarray] = {}
    values: dict[GroundAtom, np.ndarray] = {}

    def add_truth(key: GroundAtom, arr: np.ndarray) -> None:
        if key in base:
            base[key] = base[key] | arr
        else:
            base[key] = arr

    for kind, index in ground.source_order:
        if kind == "prob":
            p, key = ground.prob_facts[index]
            if prob_overrides and index in prob_overrides:
                p = prob_overrides[index]
            add_truth(key, gen.random(n) < p)
        elif kind == "ad":
            u = gen.random(n)
            low = 0.0
            for weight, key in ground.disjunctions[index]:
                add_truth(key, (u >= low) & (u < low + weight))
                low += weight
        else:
            key, _, params = ground.dist_facts[index]
            if dist_overrides and index in dist_overrides:
                params = dist_overrides[index]
            mean, variance = params
            values[key] = mean + math.sqrt(variance) * gen.standard_normal(n)

    switches: dict[int, np.ndarray] = {}
    for i, instance in enumerate(ground.instances):
        if instance.switch_prob is not None:
            switches[i] = gen.random(n) < instance.switch_prob
    return base, values, switches


def _least_model(
    ground: GroundProgram,
    base: dict[GroundAtom, np.ndarray],
    values: dict[GroundAtom, np.ndarray],
    switches: dict[int, np.ndarray],
    n: int,
) -> dict[GroundAtom, np.ndarray]:
    truth: dict[GroundAtom, np.ndarray] = {}
    false = np.zeros(n, dtype=bool)
    for key in ground.det_facts:
        truth[key] = np.ones(n, dtype=bool)
    for key, arr in base.items():
        truth[key] = truth.get(key, false) | arr
    for instance in ground.instances:
        truth.setdefault(instance.head, false)

    masks = [_static_mask(inst, values, n) for inst in ground.instances]

    changed = True
    while changed:
        changed = False
        for i, instance in enumerate(ground.instances):
            body = masks[i]
            for call in instance.calls:
                body = body & truth.get(call, false)
            if i in switches:
                body = body & switches[i]
            old = truth[instance.head]
            new = old | body
            if (new ^ old).any():
                truth[instance.head] = new
                changed = True
    return truth


def sample_world(ground: GroundProgram, gen: np.random.Generator) -> PossibleWorld:
    """Draw one world: every fact outcome, value, and rule switch."""
    base, values, switches = _draw_sources(ground, 1, gen)
    return PossibleWorld(
        truths={k: bool(v[0]) for k, v in base.items()},
        values={k: float(v[0]) for k, v in values.items()},
        switches={i: bool(v[0]) for i, v in switches.items()},
    )


def evaluate(ground: GroundProgram, world: PossibleWorld, query: GroundAtom) -> bool:
    """Decide the query in the least model of one possible world."""
    base = {k: np.array([v]) for k, v in world.truths.items()}
    values = {k: np.array([float(v)]) for k, v in world.values.items()}
    switches = {i: np.array([v]) for i, v in world.switches.items()}
    truth = _least_model(ground, base, values, switches, 1)
    arr = truth.get(query)
    return bool(arr[0]) if arr is not None else False


def infer_sampling(
    ground: GroundProgram,
    query: GroundAtom,
    params: InferenceParams,
    context: tuple = (),
) -> float:
    """Monte Carlo estimate of the query probability.

    ``context`` extends the stream key after the seed; callers evaluating
    a grid pass the cell coordinates so every cell owns an independent,
    reproducible stream no matter how the grid is partitioned.
    """
    gen = rng.stream(params.seed, *context)
    base, values, switches = _draw_sources(ground, params.sample_count, gen)
    truth = _least_model(ground, base, values, switches, params.sample_count)
    arr = truth.get(query)
    if arr is None:
        return 0.0
    return float(arr.mean())


_EXACT_SWITCH_LIMIT = 24
_EXACT_BLOCK = 1 << 15


def infer_exact_discrete(ground: GroundProgram, query: GroundAtom) -> float:
    """Exact query probability by enumerating all switch outcomes.

    Only defined for programs without distributional facts.  Enumeration
    is chunked so memory stays bounded.
    """
    if ground.dist_facts:
        raise UnsupportedProgramError(
            "exact enumeration handles discrete programs only; "
            "this program declares distributional facts"
        )

    # Each source becomes a categorical switch with outcome weights.
    sources: list[tuple[str, int, np.ndarray]] = []
    bits = 0
    for kind, index in ground.source_order:
        if kind == "prob":
            p, _ = ground.prob_facts[index]
            sources.append(("prob", index, np.array([1.0 - p, p])))
            bits += 1
        else:
            weights = [w for w, _ in ground.disjunctions[index]]
            residual = 1.0 - sum(weights)
            if residual > 1e-12:
                weights.append(residual)
            sources.append(("ad", index, np.array(weights)))
            bits += max(1, math.ceil(math.log2(len(weights))))
    for i, instance in enumerate(ground.instances):
        if instance.switch_prob is not None:
            p = instance.switch_prob
            sources.append(("switch", i, np.array([1.0 - p, p])))
            bits += 1
    if bits > _EXACT_SWITCH_LIMIT:
        raise CapacityError(
            f"program has {bits} switch bits; exact enumeration is capped "
            f"at {_EXACT_SWITCH_LIMIT}"
        )

    radices = [len(w) for _, _, w in sources]
    total = 1
    for r in radices:
        total *= r

    strides = []
    acc = 1
    for r in reversed(radices):
        strides.append(acc)
        acc *= r
    strides.reverse()

    probability = 0.0
    for start in range(0, total, _EXACT_BLOCK):
        block = np.arange(start, min(start + _EXACT_BLOCK, total))
        n = block.size
        weight = np.ones(n)
        digits = []
        for (kind, index, outcome_probs), stride, radix in zip(sources, strides, radices):
            digit = (block // stride) % radix
            digits.append(digit)
            weight = weight * outcome_probs[digit]

        base: dict[GroundAtom, np.ndarray] = {}
        switches: dict[int, np.ndarray] = {}
        for (kind, index, _), digit in zip(sources, digits):
            if kind == "prob":
                _, key = ground.prob_facts[index]
                arr = digit == 1
                base[key] = base.get(key, np.zeros(n, bool)) | arr
            elif kind == "ad":
                for j, (_, key) in enumerate(ground.disjunctions[index]):
                    arr = digit == j
                    base[key] = base.get(key, np.zeros(n, bool)) | arr
            else:
                switches[index] = digit == 1

        truth = _least_model(ground, base, {}, switches, n)
        arr = truth.get(query)
        if arr is not None:
            probability += float(weight[arr].sum())
    return probability


# --------------------------------------------------------------------------
# per-cell template


class CellProgramTemplate:
    """Ground a cell program once and rebind its numeric parameters.

    Generated clause statements use fixed placeholder constants for the
    cell, so the ground structure is identical for every cell; only the
    distribution parameters and occupancy probabilities change.  Results
    are bitwise identical to specializing and grounding per cell because
    the sampling order and stream keys do not depend on the parameters.
    """

    def __init__(
        self,
        program: MissionProgram,
        clauses: tuple[Statement, ...],
        bindings: dict[str, Term] | None = None,
    ):
        specialized = specialize(program, clauses, bindings)
        self.ground = ground_program(specialized)
        if not self.ground.queries:
            raise ValueError("program declares no query")
        self.query = self.ground.queries[0]
        self.prob_slots: dict[GroundAtom, int] = {
            key: i for i, (_, key) in enumerate(self.ground.prob_facts)
        }
        self.dist_slots: dict[GroundAtom, int] = {
            key: i for i, (key, _, _) in enumerate(self.ground.dist_facts)
        }

    def infer_cell(
        self,
        context: tuple,
        params: InferenceParams,
        prob_values: dict[GroundAtom, float],
        dist_values: dict[GroundAtom, tuple[float, ...]],
    ) -> float:
        prob_overrides = {self.prob_slots[k]: v for k, v in prob_values.items()}
        dist_overrides = {self.dist_slots[k]: v for k, v in dist_values.items()}
        gen = rng.stream(params.seed, *context)
        base, values, switches = _draw_sources(
            self.ground, params.sample_count, gen, prob_overrides, dist_overrides
        )
        truth = _least_model(
            self.ground, base, values, switches, params.sample_count
        )
        arr = truth.get(self.query)
        if arr is None:
            return 0.0
        return float(arr.mean())
