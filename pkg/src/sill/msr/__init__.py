"""First-order multiset rewriting: terms, states, rules, traces."""

from .terms import App, Const, Term, Var, Wrap, term_to_str
from .multiset import Fact, Multiset, fact_to_str
from .rules import (
    Inst,
    Mrs,
    NotApplicable,
    Rule,
    Signature,
    apply_inst,
    inst_equiv,
    match_rule,
    parallel_combine,
)
from .canon import canonical_form, find_renaming
from .reach import BudgetExceeded, overlap, is_non_overlapping, reachable_within
from .trace import Invalid, Step, Trace, permute_trace, union_equivalent
from .text import ParseError, parse_fact, parse_system, parse_term, system_to_str

__all__ = [
    "App",
    "BudgetExceeded",
    "Const",
    "Fact",
    "Inst",
    "Invalid",
    "Mrs",
    "Multiset",
    "NotApplicable",
    "ParseError",
    "Rule",
    "Signature",
    "Step",
    "Term",
    "Trace",
    "Var",
    "Wrap",
    "apply_inst",
    "canonical_form",
    "fact_to_str",
    "find_renaming",
    "inst_equiv",
    "is_non_overlapping",
    "match_rule",
    "overlap",
    "parallel_combine",
    "parse_fact",
    "parse_system",
    "parse_term",
    "permute_trace",
    "reachable_within",
    "system_to_str",
    "term_to_str",
    "union_equivalent",
]
