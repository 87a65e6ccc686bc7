from pathlib import Path

import pytest

from flightscape.hplp import (
    AnnotatedDisjunction,
    Atom,
    Call,
    Comparison,
    Const,
    DistFact,
    Evaluation,
    Fact,
    Number,
    ParseError,
    ProbFact,
    Query,
    Rule,
    Var,
    parse_diagnostics,
    parse_program,
)

CORPUS = Path(__file__).resolve().parent.parent / "src" / "flightscape" / "fixtures" / "corpus"


def first(text: str):
    return parse_program(text).statements[0]


class TestStatements:
    def test_prob_fact(self):
        stmt = first("0.9::over(r0, c0, primary).")
        assert stmt == ProbFact(0.9, Atom("over", (Const("r0"), Const("c0"),
                                                   Const("primary"))))

    def test_dist_fact(self):
        stmt = first("initial_charge ~ normal(90, 5).")
        assert stmt == DistFact(Atom("initial_charge"), "normal", (90.0, 5.0))

    def test_plain_fact_and_query(self):
        program = parse_program("registered.\nquery(landscape(R, C)).")
        assert program.statements[0] == Fact(Atom("registered"))
        assert program.statements[1] == Query(Atom("landscape", (Var("R"), Var("C"))))
        assert [q.atom.functor for q in program.queries] == ["landscape"]

    def test_rational_weights(self):
        stmt = first("1/10::fog; 9/10::clear.")
        assert isinstance(stmt, AnnotatedDisjunction)
        weights = [w for w, _ in stmt.choices]
        assert weights == [pytest.approx(0.1), pytest.approx(0.9)]

    def test_disjunctive_rule_body(self):
        stmt = first("vlos(R, C) :- fog, distance(R, C, operator) < 250; "
                     "clear, distance(R, C, operator) < 500.")
        assert isinstance(stmt, Rule)
        assert stmt.probability is None
        assert len(stmt.disjuncts) == 2
        fog_branch = stmt.disjuncts[0]
        assert fog_branch[0] == Call(Atom("fog"))
        assert isinstance(fog_branch[1], Comparison)
        assert fog_branch[1].op == "<"
        assert fog_branch[1].right == Number(250.0)

    def test_probabilistic_rule(self):
        stmt = first("0.9::operates_drone(X) :- person(X), owns_drone(X).")
        assert isinstance(stmt, Rule)
        assert stmt.probability == 0.9
        assert stmt.head == Atom("operates_drone", (Var("X"),))

    def test_evaluation_and_arithmetic(self):
        stmt = first("can_return(R, C) :- B is initial_charge, O is discharge, "
                     "D is distance(R, C, operator), 0 < B + (2 * O * D).")
        body = stmt.disjuncts[0]
        assert isinstance(body[0], Evaluation) and body[0].var == Var("B")
        comparison = body[3]
        assert isinstance(comparison, Comparison)
        assert comparison.left == Number(0.0)

    def test_inf_literal(self):
        stmt = first("far ~ normal(inf, 0).")
        assert stmt.params[0] == float("inf")

    def test_comments_and_blank_lines(self):
        program = parse_program("% a comment\n\nregistered. % trailing\n")
        assert len(program.statements) == 1

    def test_comparison_operators(self):
        text = "q :- a =< 3, b >= 2, c < 1, d > 0."
        body = first(text).disjuncts[0]
        assert [lit.op for lit in body] == ["=<", ">=", "<", ">"]

    def test_unary_minus(self):
        stmt = first("discharge ~ normal(-0.2, 0.1).")
        assert stmt.params == (-0.2, 0.1)


class TestErrors:
    def err(self, text: str) -> ParseError:
        with pytest.raises(ParseError) as info:
            parse_program(text)
        return info.value

    def test_missing_period_position(self):
        err = self.err("a :- b\nc.")
        assert (err.line, err.column) == (2, 1)
        assert "line 2, column 1" in str(err)

    def test_probability_above_one(self):
        err = self.err("1.5::a.")
        assert err.line == 1
        assert "probability" in err.message or "weight" in err.message

    def test_ad_weights_sum_above_one(self):
        err = self.err("0.6::a; 0.6::b.")
        assert "sum" in err.message

    def test_zero_denominator(self):
        self.err("1/0::a.")

    def test_unbalanced_parens(self):
        err = self.err("q :- f(a, b.")
        assert err.line == 1

    def test_nested_terms_rejected(self):
        self.err("q(f(a)).")

    def test_variance_negative(self):
        self.err("d ~ normal(0, -1).")

    def test_unknown_family(self):
        self.err("d ~ uniform(0, 1).")

    def test_diagnostics_shape(self):
        diags = parse_diagnostics("a :- b\nc.")
        assert diags == [{"line": 2, "column": 1,
                          "message": diags[0]["message"]}]
        assert parse_diagnostics("a.") == []


class TestRoundTrip:
    @pytest.mark.parametrize("name", ["drone_operation.pl", "distance_facts.pl", "mission_landscape.pl"])
    def test_corpus_files_round_trip(self, name):
        text = (CORPUS / name).read_text()
        assert parse_diagnostics(text) == []
        program = parse_program(text)
        again = parse_program(program.render())
        assert again == program

    def test_kitchen_sink_round_trip(self):
        text = "\n".join([
            "registered.",
            "0.25::maybe(a, b).",
            "1/3::x; 1/3::y; 1/3::z.",
            "d ~ normal(-2.5, 0.75).",
            "0.5::head(X) :- body(X), d > 1.5; other(X).",
            "calc(V) :- W is (d + 2) * -3, W < V.",
            "query(head(q)).",
        ])
        program = parse_program(text)
        assert parse_program(program.render()) == program

    def test_scenario_rules_round_trip(self):
        fixtures = CORPUS.parent
        for name in ("park", "bay", "crossing", "rails"):
            text = (fixtures / name / "rules.pl").read_text()
            assert parse_diagnostics(text) == []
            program = parse_program(text)
            assert parse_program(program.render()) == program
