"""Grounding and inference semantics.

Every discrete program here carries a hand-derived exact probability and
is additionally checked against an in-test brute-force world enumerator
written in plain Python, so the vectorised solver is never trusted to
grade itself.
"""

import itertools
import math

import numpy as np
import pytest

from flightscape import rng
from flightscape.hplp import (
    BinaryOp,
    CapacityError,
    Comparison,
    Const,
    Evaluation,
    EvaluationError,
    InferenceParams,
    Negate,
    Number,
    PossibleWorld,
    UnknownAtomError,
    UnsupportedProgramError,
    Var,
    evaluate,
    ground_program,
    infer_exact_discrete,
    infer_sampling,
    parse_program,
    sample_world,
    specialize,
)
from flightscape.hplp.semantics import CellProgramTemplate


# --------------------------------------------------------------------------
# independent oracle: plain-Python enumeration of every possible world


_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
}
_CMP = {
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "=<": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
}


def _oracle_expr(expr, env):
    if isinstance(expr, Number):
        return expr.value
    if isinstance(expr, Var):
        return env[expr.name]
    if isinstance(expr, Negate):
        return -_oracle_expr(expr.operand, env)
    if isinstance(expr, BinaryOp):
        return _OPS[expr.op](_oracle_expr(expr.left, env), _oracle_expr(expr.right, env))
    raise AssertionError(f"oracle cannot evaluate {expr!r}")


def _oracle_statics(statics) -> bool:
    env: dict[str, float] = {}
    for lit in statics:
        if isinstance(lit, Evaluation):
            env[lit.var.name] = _oracle_expr(lit.expr, env)
        elif isinstance(lit, Comparison):
            if not _CMP[lit.op](_oracle_expr(lit.left, env), _oracle_expr(lit.right, env)):
                return False
        else:
            raise AssertionError(f"oracle cannot evaluate {lit!r}")
    return True


def enumerate_worlds(ground, query) -> float:
    """Sum the weights of all worlds entailing the query.

    Walks the ground program with sets and dicts only; shares no code
    with the solver under test.
    """
    assert not ground.dist_facts, "oracle handles discrete programs only"
    sources = []
    for kind, index in ground.source_order:
        if kind == "prob":
            p, key = ground.prob_facts[index]
            sources.append(((p, ("atom", key)), (1.0 - p, None)))
        else:
            outcomes = [(w, ("atom", key)) for w, key in ground.disjunctions[index]]
            rest = 1.0 - sum(w for w, _ in outcomes)
            if rest > 1e-12:
                outcomes.append((rest, None))
            sources.append(tuple(outcomes))
    for i, inst in enumerate(ground.instances):
        if inst.switch_prob is not None:
            sources.append(((inst.switch_prob, ("switch", i)), (1.0 - inst.switch_prob, None)))

    total = 0.0
    for combo in itertools.product(*sources):
        weight = 1.0
        atoms = set(ground.det_facts)
        on = set()
        for w, effect in combo:
            weight *= w
            if effect is None:
                continue
            if effect[0] == "atom":
                atoms.add(effect[1])
            else:
                on.add(effect[1])
        if weight == 0.0:
            continue
        changed = True
        while changed:
            changed = False
            for i, inst in enumerate(ground.instances):
                if inst.head in atoms:
                    continue
                if inst.switch_prob is not None and i not in on:
                    continue
                if not all(c in atoms for c in inst.calls):
                    continue
                if inst.statics and not _oracle_statics(inst.statics):
                    continue
                atoms.add(inst.head)
                changed = True
        if query in atoms:
            total += weight
    return total


def compile_text(text):
    return ground_program(specialize(parse_program(text)))


def query_key(ground, functor):
    for key in ground.queries:
        if key[0] == functor:
            return key
    raise AssertionError(f"no query with functor {functor}")


# --------------------------------------------------------------------------
# discrete corpus with frozen hand-derived probabilities

# Each entry: (name, program text, query functor, exact probability).
# The constant is derived by hand from the world table and written out
# as arithmetic so the derivation stays visible.
CORPUS = [
    (
        "conjunction",
        "0.3::a. 0.7::b. q :- a, b. query(q).",
        "q",
        0.3 * 0.7,  # both independent facts must hold
    ),
    (
        "noisy_or",
        "0.3::a. 0.4::b. q :- a. q :- b. query(q).",
        "q",
        1.0 - 0.7 * 0.6,  # complement of both facts failing
    ),
    (
        "ad_marginal",
        "0.2::red; 0.5::blue; 0.3::green. q :- red. q :- blue. query(q).",
        "q",
        0.2 + 0.5,  # disjuncts are mutually exclusive
    ),
    (
        "ad_exclusive_pair",
        "0.4::x; 0.4::y. both :- x, y. query(both).",
        "both",
        0.0,  # one choice per disjunction, never both
    ),
    (
        "ad_residual",
        "0.4::x; 0.4::y. either :- x. either :- y. query(either).",
        "either",
        0.8,  # residual 0.2 leaves both heads false
    ),
    (
        "diamond_shared_cause",
        "0.5::a. b :- a. c :- a. d :- b, c. query(d).",
        "d",
        0.5,  # b and c are the same coin, not two coins
    ),
    (
        "per_instance_switches",
        "d(1). d(2). 0.4::q(X) :- d(X). s :- q(1). s :- q(2). query(s).",
        "s",
        1.0 - 0.6 * 0.6,  # each ground instance gets its own switch
    ),
    (
        "recursive_path",
        "0.5::edge(1, 2). 0.5::edge(2, 3). 0.5::edge(1, 3). "
        "path(X, Y) :- edge(X, Y). path(X, Y) :- edge(X, Z), path(Z, Y). "
        "query(path(1, 3)).",
        "path",
        1.0 - (1.0 - 0.5) * (1.0 - 0.25),  # direct edge or two-hop chain
    ),
    (
        "two_probabilistic_rules",
        "0.5::a. 0.5::b. 0.8::q :- a. 0.6::q :- b. query(q).",
        "q",
        1.0 - (1.0 - 0.4) * (1.0 - 0.3),  # each rule fires with p*switch
    ),
    (
        "ad_join",
        "1/3::m(1); 2/3::m(2). n(2). q :- m(X), n(X). query(q).",
        "q",
        2.0 / 3.0,  # only the m(2) branch meets n(2)
    ),
    (
        "exhaustive_ad_cover",
        "0.5::heads; 0.5::tails. win :- heads. win :- tails. query(win).",
        "win",
        1.0,  # weights sum to one, some head always fires
    ),
    (
        "mixed_conjunction",
        "0.3::a. 0.3::b. both :- a, b. query(both).",
        "both",
        0.3 * 0.3,
    ),
    (
        "static_comparison_false",
        "0.5::a. q :- a, 20 < 15. query(q).",
        "q",
        0.0,  # body contains an unsatisfiable comparison
    ),
    (
        "static_arithmetic_true",
        "0.5::a. q :- a, X is 2 + 3, X < 10. query(q).",
        "q",
        0.5,  # arithmetic guard always holds
    ),
]


@pytest.mark.parametrize("name,text,functor,expected", CORPUS, ids=[c[0] for c in CORPUS])
def test_corpus_exact_matches_frozen_constant(name, text, functor, expected):
    ground = compile_text(text)
    query = query_key(ground, functor)
    assert infer_exact_discrete(ground, query) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("name,text,functor,expected", CORPUS, ids=[c[0] for c in CORPUS])
def test_corpus_brute_force_oracle_agrees(name, text, functor, expected):
    ground = compile_text(text)
    query = query_key(ground, functor)
    assert enumerate_worlds(ground, query) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("name,text,functor,expected", CORPUS, ids=[c[0] for c in CORPUS])
def test_corpus_sampling_within_three_sigma(name, text, functor, expected):
    n = 20_000
    ground = compile_text(text)
    query = query_key(ground, functor)
    est = infer_sampling(ground, query, InferenceParams(sample_count=n, seed=3))
    sigma = math.sqrt(expected * (1.0 - expected) / n)
    assert abs(est - expected) <= 3.0 * sigma + 1e-12


def test_drone_operation_fixture_probability(fixtures_dir):
    # Two rule switches gate the derivation chain: the friend rule must
    # grant owns_drone(jonas) (0.2) and the operate rule must fire (0.9).
    text = (fixtures_dir / "corpus" / "drone_operation.pl").read_text()
    ground = compile_text(text)
    query = query_key(ground, "operates_drone")
    assert query == ("operates_drone", "jonas")
    assert infer_exact_discrete(ground, query) == pytest.approx(0.18, abs=1e-12)
    assert enumerate_worlds(ground, query) == pytest.approx(0.18, abs=1e-12)


def test_single_fact_sampling_large_sample():
    ground = compile_text("0.3::a. query(a).")
    est = infer_sampling(ground, ("a",), InferenceParams(sample_count=100_000, seed=1))
    assert abs(est - 0.3) <= 0.005
    assert infer_exact_discrete(ground, ("a",)) == pytest.approx(0.3)


def test_weather_disjunction_weights():
    ground = compile_text("1/10::fog; 9/10::clear. query(clear). query(fog).")
    assert infer_exact_discrete(ground, ("clear",)) == pytest.approx(0.9)
    est = infer_sampling(ground, ("fog",), InferenceParams(sample_count=100_000, seed=2))
    assert abs(est - 0.1) <= 0.003


def test_deterministic_program_is_certain():
    ground = compile_text("a. q :- a. query(q).")
    assert infer_exact_discrete(ground, ("q",)) == 1.0
    assert infer_sampling(ground, ("q",), InferenceParams(sample_count=500, seed=0)) == 1.0


def test_distributional_value_sample_mean():
    ground = compile_text("weight ~ normal(2.0, 0.1). ok :- weight > 0. query(ok).")
    gen = rng.stream(9, "weights")
    draws = [sample_world(ground, gen).values[("weight",)] for _ in range(20_000)]
    # standard error sqrt(0.1/20000) = 0.0022, so 0.01 is a 4.5 sigma bound
    assert abs(float(np.mean(draws)) - 2.0) <= 0.01
    assert float(np.var(draws, ddof=1)) == pytest.approx(0.1, rel=0.05)


def test_one_draw_per_world_forbids_contradictions():
    # Both comparisons see the same draw of d, so low and high can never
    # hold in the same world even though each is individually likely.
    text = (
        "d ~ normal(10, 4). low :- d < 9. high :- d > 11. "
        "c :- low, high. query(c)."
    )
    ground = compile_text(text)
    est = infer_sampling(ground, ("c",), InferenceParams(sample_count=10_000, seed=5))
    assert est == 0.0


def test_gaussian_threshold_probability_matches_closed_form():
    # P(N(20, 0.5) > 19) with variance 0.5: 1 - Phi((19-20)/sqrt(0.5))
    ground = compile_text("d ~ normal(20, 0.5). q :- d > 19. query(q).")
    est = infer_sampling(ground, ("q",), InferenceParams(sample_count=100_000, seed=4))
    exact = 0.5 * math.erfc((19.0 - 20.0) / math.sqrt(2.0 * 0.5))
    assert abs(est - exact) <= 0.01


# --------------------------------------------------------------------------
# sampled worlds


def test_sampled_worlds_respect_disjunction_exclusivity():
    ground = compile_text("0.4::x; 0.4::y. either :- x. query(either).")
    gen = rng.stream(7, "ad")
    seen_x = seen_y = neither = 0
    for _ in range(600):
        world = sample_world(ground, gen)
        x = world.truths.get(("x",), False)
        y = world.truths.get(("y",), False)
        assert not (x and y)
        seen_x += x
        seen_y += y
        neither += not (x or y)
    assert seen_x and seen_y and neither


def test_sample_world_draws_every_source():
    ground = compile_text(
        "0.5::a. 0.3::b; 0.7::c. d ~ normal(1, 4). q :- a. query(q)."
    )
    world = sample_world(ground, rng.stream(0, "world"))
    assert set(world.truths) == {("a",), ("b",), ("c",)}
    assert set(world.values) == {("d",)}
    assert world.switches == {}


# --------------------------------------------------------------------------
# evaluate on forced worlds


def test_evaluate_forced_derivation_chain(fixtures_dir):
    text = (fixtures_dir / "corpus" / "drone_operation.pl").read_text()
    ground = compile_text(text)
    switch_ids = {
        inst.head: i
        for i, inst in enumerate(ground.instances)
        if inst.switch_prob is not None
    }
    all_on = PossibleWorld(
        truths={}, values={}, switches={i: True for i in switch_ids.values()}
    )
    assert evaluate(ground, all_on, ("operates_drone", "jonas")) is True

    friends_off = dict.fromkeys(switch_ids.values(), True)
    friends_off[switch_ids[("owns_drone", "jonas")]] = False
    world = PossibleWorld(truths={}, values={}, switches=friends_off)
    assert evaluate(ground, world, ("operates_drone", "jonas")) is False
    assert evaluate(ground, world, ("operates_drone", "justus")) is True


def test_evaluate_comparison_against_world_value():
    ground = compile_text("d ~ normal(20, 0.5). q :- d < 15. query(q).")
    near = PossibleWorld(truths={}, values={("d",): 14.0}, switches={})
    far = PossibleWorld(truths={}, values={("d",): 20.0}, switches={})
    assert evaluate(ground, near, ("q",)) is True
    assert evaluate(ground, far, ("q",)) is False


def test_evaluate_energy_budget_rule():
    text = (
        "battery ~ normal(90, 25). discharge ~ normal(-0.2, 0.01). "
        "can_return :- E is battery + discharge * 100, E > 50. "
        "query(can_return)."
    )
    ground = compile_text(text)
    world = PossibleWorld(
        truths={},
        values={("battery",): 90.0, ("discharge",): -0.2},
        switches={},
    )
    # 90 - 0.2 * 100 = 70 > 50
    assert evaluate(ground, world, ("can_return",)) is True
    drained = PossibleWorld(
        truths={},
        values={("battery",): 90.0, ("discharge",): -0.5},
        switches={},
    )
    assert evaluate(ground, drained, ("can_return",)) is False


def test_evaluate_unknown_query_is_false():
    ground = compile_text("a. query(a).")
    world = PossibleWorld(truths={}, values={}, switches={})
    assert evaluate(ground, world, ("never_mentioned",)) is False


# --------------------------------------------------------------------------
# determinism and stream separation


def test_sampling_is_deterministic_per_seed():
    ground = compile_text("0.5::a. q :- a. query(q).")
    params = InferenceParams(sample_count=4000, seed=21)
    first = infer_sampling(ground, ("q",), params)
    second = infer_sampling(ground, ("q",), params)
    assert first == second
    other = infer_sampling(ground, ("q",), InferenceParams(sample_count=4000, seed=22))
    assert first != other


def test_sampling_context_separates_streams():
    ground = compile_text("0.5::a. query(a).")
    params = InferenceParams(sample_count=1000, seed=13)
    a = infer_sampling(ground, ("a",), params, context=("pml", 0, 0))
    b = infer_sampling(ground, ("a",), params, context=("pml", 5, 7))
    assert a != b


def test_adding_a_fact_never_lowers_the_query():
    base = compile_text("0.3::a. 0.4::b. q :- a. q :- b. query(q).")
    extended = compile_text("0.3::a. 0.4::b. q :- a. q :- b. b. query(q).")
    p_base = infer_exact_discrete(base, ("q",))
    p_ext = infer_exact_discrete(extended, ("q",))
    assert p_ext >= p_base
    assert p_ext == pytest.approx(1.0, abs=1e-12)


# --------------------------------------------------------------------------
# specialization


def test_specialize_binds_query_variables():
    program = parse_program(
        "0.5::over(r, c, park). landscape(R, C) :- over(r, c, park). "
        "query(landscape(R, C))."
    )
    bound = specialize(program, bindings={"R": Number(3.0), "C": Number(4.0)})
    ground = ground_program(bound)
    assert ground.queries == ((("landscape", 3.0, 4.0)),)


def test_specialize_is_idempotent():
    program = parse_program(
        "landscape(R, C) :- over(r, c, park). query(landscape(R, C))."
    )
    clauses = parse_program("0.5::over(r, c, park).").statements
    bindings = {"R": Number(1.0), "C": Number(2.0)}
    once = specialize(program, clauses, bindings)
    twice = specialize(once, clauses, bindings)
    assert once == twice


def test_specialize_rejects_undeclared_spatial_tags():
    program = parse_program(
        "bad :- distance(r, c, hospital) < 5. query(bad)."
    )
    with pytest.raises(UnknownAtomError, match="hospital"):
        specialize(program)


def test_specialize_accepts_declared_tags_via_clauses():
    program = parse_program("ok :- distance(r, c, hospital) < 5. query(ok).")
    clauses = parse_program("distance(r, c, hospital) ~ normal(30, 4).").statements
    specialized = specialize(program, clauses)
    ground = ground_program(specialized)
    assert ground.dist_facts[0][0] == ("distance", "r", "c", "hospital")


# --------------------------------------------------------------------------
# error paths


def test_exact_rejects_distributional_programs():
    ground = compile_text("d ~ normal(0, 1). q :- d < 0. query(q).")
    with pytest.raises(UnsupportedProgramError):
        infer_exact_discrete(ground, ("q",))


def test_exact_rejects_oversized_switch_space():
    facts = " ".join(f"0.5::f{i}." for i in range(25))
    ground = compile_text(f"{facts} q :- f0. query(q).")
    with pytest.raises(CapacityError):
        infer_exact_discrete(ground, ("q",))


def test_exact_at_switch_budget_boundary():
    facts = " ".join(f"0.5::f{i}." for i in range(24))
    ground = compile_text(f"{facts} q :- f0. query(q).")
    assert infer_exact_discrete(ground, ("q",)) == pytest.approx(0.5)


def test_unbound_rule_variable_is_rejected():
    with pytest.raises(EvaluationError, match="X"):
        compile_text("q :- X < 5. query(q).")


# --------------------------------------------------------------------------
# template route matches per-cell specialization bitwise


def test_cell_template_matches_direct_route():
    program_text = (
        "safe :- distance(r, c, building) > 15, over(r, c, park). "
        "query(safe)."
    )
    base_clauses = parse_program(
        "distance(r, c, building) ~ normal(20, 0.5). 0.7::over(r, c, park)."
    ).statements
    cell_clauses = parse_program(
        "distance(r, c, building) ~ normal(12, 0.25). 0.2::over(r, c, park)."
    ).statements
    params = InferenceParams(sample_count=2000, seed=11)
    context = (11, "pml", 4, 9)

    direct_ground = ground_program(specialize(parse_program(program_text), cell_clauses))
    direct = infer_sampling(direct_ground, ("safe",), params, context=context)

    template = CellProgramTemplate(parse_program(program_text), base_clauses)
    rebased = template.infer_cell(
        context,
        params,
        prob_values={("over", "r", "c", "park"): 0.2},
        dist_values={("distance", "r", "c", "building"): (12.0, 0.25)},
    )
    assert rebased == direct


def test_cell_template_requires_a_query():
    with pytest.raises(ValueError, match="query"):
        CellProgramTemplate(parse_program("a."), ())
