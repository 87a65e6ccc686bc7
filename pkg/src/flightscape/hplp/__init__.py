"""Hybrid probabilistic rule language: syntax, grounding, and inference."""

from .ast import (
    AnnotatedDisjunction,
    Atom,
    BinaryOp,
    Call,
    Comparison,
    Const,
    DistFact,
    Evaluation,
    Fact,
    MissionProgram,
    Negate,
    Number,
    ProbFact,
    Query,
    Rule,
    Var,
    render_atom,
)
from .parser import ParseError, parse_diagnostics, parse_program
from .semantics import (
    CapacityError,
    EvaluationError,
    GroundProgram,
    InferenceParams,
    PossibleWorld,
    UnknownAtomError,
    UnsupportedProgramError,
    evaluate,
    ground_program,
    infer_exact_discrete,
    infer_sampling,
    sample_world,
    specialize,
)

__all__ = [
    "AnnotatedDisjunction",
    "Atom",
    "BinaryOp",
    "Call",
    "CapacityError",
    "Comparison",
    "Const",
    "DistFact",
    "Evaluation",
    "EvaluationError",
    "Fact",
    "GroundProgram",
    "InferenceParams",
    "MissionProgram",
    "Negate",
    "Number",
    "ParseError",
    "PossibleWorld",
    "ProbFact",
    "Query",
    "Rule",
    "UnknownAtomError",
    "UnsupportedProgramError",
    "Var",
    "evaluate",
    "ground_program",
    "infer_exact_discrete",
    "infer_sampling",
    "parse_diagnostics",
    "parse_program",
    "render_atom",
    "sample_world",
    "specialize",
]
