"""Rules, instantiations, matching and application.

A rule consumes a multiset of ephemeral facts and requires a set of
persistent ones, then produces new facts, possibly over fresh constants
bound by existential variables::

    name : forall xs. pi, F  -o  exists ns. pi', G

Universal variables must all occur in the antecedent (range restriction);
matching would otherwise admit infinitely many instantiations.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .multiset import Fact, Multiset, fact_key, fact_to_str, fact_vars
from .terms import Const, Term, Var, match_term, subst_term, term_key, term_to_str


class NotApplicable(Exception):
    """The instantiation's antecedent is not contained in the state."""


# Suffix characters reserved for generated names; the parsers reject them in
# source identifiers, so generated constants can never collide with declared
# ones.
FRESH_MARKS = ("#", "'", "%", "~")

_TRAILING_INT = re.compile(r"^(.*?)(?:[#'])(\d+)$")


def is_generated_name(name: str) -> bool:
    return any(m in name for m in FRESH_MARKS)


@dataclass(frozen=True)
class Signature:
    """Declared constants plus a monotone counter for fresh names."""

    declared: frozenset[str] = frozenset()
    counter: int = 0

    def fresh(self, hint: str, style: str = "hash") -> tuple[str, "Signature"]:
        base = hint
        for m in FRESH_MARKS:
            if m in base:
                base = base[: base.index(m)]
        if not base:
            base = "c"
        mark = "'" if style == "prime" else "#"
        name = f"{base}{mark}{self.counter}"
        return name, Signature(self.declared, self.counter + 1)

    def absorb(self, name: str) -> "Signature":
        """Advance the counter past an externally supplied generated name."""
        m = _TRAILING_INT.match(name)
        if m:
            n = int(m.group(2))
            if n >= self.counter:
                return Signature(self.declared, n + 1)
        return self

    def absorb_all(self, names: Iterable[str]) -> "Signature":
        sig = self
        for n in names:
            sig = sig.absorb(n)
        return sig


@dataclass(frozen=True)
class Rule:
    name: str
    uvars: tuple[str, ...]
    pers_ant: tuple[Fact, ...]
    eph_ant: tuple[Fact, ...]
    evars: tuple[str, ...]
    pers_con: tuple[Fact, ...]
    eph_con: tuple[Fact, ...]
    # evar -> (hint, style) for fresh-name generation
    fresh_hints: tuple[tuple[str, tuple[str, str]], ...] = ()
    # step cost: a combined rule counts as the sum of its parts
    cost: int = 1

    def __post_init__(self):
        uset, eset = set(self.uvars), set(self.evars)
        if uset & eset:
            raise ValueError(f"rule {self.name}: universal and existential variables overlap")
        ant_vars: set[str] = set()
        for f in self.pers_ant + self.eph_ant:
            if not f.persistent and f in self.pers_ant:
                raise ValueError(f"rule {self.name}: ephemeral fact in persistent antecedent")
            ant_vars |= fact_vars(f)
        if not ant_vars <= uset:
            raise ValueError(f"rule {self.name}: unbound antecedent variables {ant_vars - uset}")
        if not uset <= ant_vars:
            raise ValueError(
                f"rule {self.name}: universal variables {uset - ant_vars} missing from antecedent"
            )
        for f in self.pers_con + self.eph_con:
            extra = fact_vars(f) - uset - eset
            if extra:
                raise ValueError(f"rule {self.name}: unbound consequent variables {extra}")
        for v, _ in self.fresh_hints:
            if v not in eset:
                raise ValueError(f"rule {self.name}: fresh hint for unknown variable {v}")

    def hint_for(self, evar: str) -> tuple[str, str]:
        for v, h in self.fresh_hints:
            if v == evar:
                return h
        return (self.name, "hash")

    def to_str(self) -> str:
        lhs = ", ".join(fact_to_str(f) for f in self.pers_ant + self.eph_ant) or "."
        rhs = ", ".join(fact_to_str(f) for f in self.pers_con + self.eph_con) or "."
        fa = f"forall {', '.join(self.uvars)}. " if self.uvars else ""
        ex = f"exists {', '.join(self.evars)}. " if self.evars else ""
        return f"rule {self.name}: {fa}{lhs} -o {ex}{rhs}"


@dataclass(frozen=True)
class Inst:
    """A rule instantiated with ground terms for its universal variables."""

    rule: Rule
    theta: tuple[tuple[str, Term], ...]

    @staticmethod
    def make(rule: Rule, theta: Mapping[str, Term]) -> "Inst":
        return Inst(rule, tuple((v, theta[v]) for v in rule.uvars))

    def theta_map(self) -> dict[str, Term]:
        return dict(self.theta)

    def theta_key(self) -> tuple:
        return tuple(term_key(t) for _, t in self.theta)

    def pers_ant_g(self) -> frozenset[Fact]:
        th = self.theta_map()
        return frozenset(_ground_fact(f, th) for f in self.rule.pers_ant)

    def eph_ant_g(self) -> Multiset:
        th = self.theta_map()
        return Multiset.of(_ground_fact(f, th) for f in self.rule.eph_ant)

    def active(self) -> Multiset:
        """The instantiated antecedent, persistent and ephemeral together."""
        return self.eph_ant_g().with_pers(self.pers_ant_g())

    def applicable(self, state: Multiset) -> bool:
        return self.pers_ant_g() <= state.pers and self.eph_ant_g().leq(state)

    def consequent(self, xi: Mapping[str, Term]) -> tuple[frozenset[Fact], Multiset]:
        th = self.theta_map()
        th.update(xi)
        pers = frozenset(_ground_fact(f, th) for f in self.rule.pers_con)
        eph = Multiset.of(_ground_fact(f, th) for f in self.rule.eph_con)
        return pers, eph

    def to_str(self) -> str:
        args = ", ".join(f"{v} := {term_to_str(t)}" for v, t in self.theta)
        return f"{self.rule.name}[{args}]" if args else self.rule.name


def _ground_fact(f: Fact, th: Mapping[str, Term]) -> Fact:
    return Fact(f.pred, tuple(subst_term(a, th) for a in f.args), f.persistent)


# -- matching ---------------------------------------------------------------


def match_rule(rule: Rule, state: Multiset) -> list[Inst]:
    """All instantiations of rule applicable to state.

    Deduplicated up to instantiation equivalence (the representative with the
    least theta is kept) and sorted by theta for a stable enumeration order.
    """
    pers_pool = sorted((f for f in state.pers), key=fact_key)
    eph_pool = sorted(state.eph_support(), key=fact_key)
    thetas: list[dict[str, Term]] = []

    def go_pers(i: int, theta: dict[str, Term]):
        if i == len(rule.pers_ant):
            avail = {f: state.count(f) for f in eph_pool}
            go_eph(0, theta, avail)
            return
        pat = rule.pers_ant[i]
        for f in pers_pool:
            if f.pred != pat.pred or len(f.args) != len(pat.args):
                continue
            th = dict(theta)
            if _match_fact(pat, f, th) is not None:
                go_pers(i + 1, th)

    def go_eph(j: int, theta: dict[str, Term], avail: dict[Fact, int]):
        if j == len(rule.eph_ant):
            thetas.append(theta)
            return
        pat = rule.eph_ant[j]
        for f in eph_pool:
            if avail[f] == 0 or f.pred != pat.pred or len(f.args) != len(pat.args):
                continue
            th = dict(theta)
            if _match_fact(pat, f, th) is not None:
                avail[f] -= 1
                go_eph(j + 1, th, avail)
                avail[f] += 1

    go_pers(0, {})

    seen: set[tuple] = set()
    insts: list[Inst] = []
    for th in thetas:
        inst = Inst.make(rule, th)
        k = inst.theta_key()
        if k not in seen:
            seen.add(k)
            insts.append(inst)
    insts.sort(key=Inst.theta_key)
    out: list[Inst] = []
    keys: set = set()
    for inst in insts:
        k = _equiv_key(inst)
        if k not in keys:
            keys.add(k)
            out.append(inst)
    return out


def _match_fact(pat: Fact, f: Fact, theta: dict[str, Term]) -> Optional[dict[str, Term]]:
    if pat.persistent != f.persistent:
        return None
    for p, g in zip(pat.args, f.args):
        if match_term(p, g, theta) is None:
            return None
    return theta


def match_all(rules: Sequence[Rule], state: Multiset) -> list[Inst]:
    """Distinct applicable instantiations across rules, deduplicated by
    instantiation equivalence globally, in (rule order, theta) order."""
    out: list[Inst] = []
    keys: set = set()
    for r in rules:
        for inst in match_rule(r, state):
            k = _equiv_key(inst)
            if k not in keys:
                keys.add(k)
                out.append(inst)
    return out


# -- instantiation equivalence ------------------------------------------------

_PLACEHOLDER = "\x00"


def _equiv_key(inst: Inst) -> tuple:
    """Instantiations are equivalent iff their keys are equal.

    Two instantiations are equivalent when they consume exactly the same
    facts and produce the same facts up to a consistent renaming of the
    fresh constants; the persistent consequent is compared together with the
    persistent antecedent, since re-asserting an already-required persistent
    fact is unobservable.
    """
    ant_p = tuple(sorted(fact_key(f) for f in inst.pers_ant_g()))
    ant_e = tuple(sorted((fact_key(f), n) for f, n in inst.eph_ant_g().eph_items()))
    rule = inst.rule
    best = None
    for perm in itertools.permutations(range(len(rule.evars))):
        xi = {v: Const(f"{_PLACEHOLDER}{i}") for v, i in zip(rule.evars, perm)}
        pers, eph = inst.consequent(xi)
        pers_all = pers | inst.pers_ant_g()
        key = (
            tuple(sorted(fact_key(f) for f in pers_all)),
            tuple(sorted((fact_key(f), n) for f, n in eph.eph_items())),
        )
        if best is None or key < best:
            best = key
    return (ant_p, ant_e, best)


def inst_equiv(i1: Inst, i2: Inst) -> bool:
    """Same consumption and, up to renaming fresh constants, same production."""
    return _equiv_key(i1) == _equiv_key(i2)


# -- application ---------------------------------------------------------------


def apply_inst(
    state: Multiset,
    inst: Inst,
    sig: Signature,
    xi: Optional[Mapping[str, str]] = None,
) -> tuple[Multiset, Signature, dict[str, str]]:
    """Apply an instantiation, generating fresh constants unless xi is given.

    Returns the successor state, the advanced signature, and the fresh-name
    assignment actually used.
    """
    if not inst.applicable(state):
        raise NotApplicable(inst.to_str())
    names: dict[str, str] = {}
    if xi is None:
        for v in inst.rule.evars:
            hint, style = inst.rule.hint_for(v)
            name, sig = sig.fresh(hint, style)
            names[v] = name
    else:
        for v in inst.rule.evars:
            names[v] = xi[v]
            sig = sig.absorb(xi[v])
    xi_terms = {v: Const(n) for v, n in names.items()}
    pers, eph = inst.consequent(xi_terms)
    result = state.mdiff(inst.eph_ant_g()).msum(eph).with_pers(pers)
    return result, sig, names


# -- parallel combination ------------------------------------------------------

IDENTITY = Rule("1*", (), (), (), (), (), (), cost=0)


def parallel_combine(r1: Rule, r2: Rule) -> Rule:
    """Combine two rules for joint application in one step.

    The antecedent takes the union of the persistent parts and the sum of
    the ephemeral ones; likewise the consequent.  Variables are renamed
    apart.  Combining with the empty rule returns the other rule.
    """
    if not any((r1.uvars, r1.evars, r1.pers_ant, r1.eph_ant, r1.pers_con, r1.eph_con)):
        return r2
    if not any((r2.uvars, r2.evars, r2.pers_ant, r2.eph_ant, r2.pers_con, r2.eph_con)):
        return r1

    def side(r: Rule, i: int):
        ren_t = {v: Var(f"{v}~{i}") for v in r.uvars + r.evars}

        def rf(f: Fact) -> Fact:
            return Fact(f.pred, tuple(subst_term(a, ren_t) for a in f.args), f.persistent)

        return (
            tuple(f"{v}~{i}" for v in r.uvars),
            tuple(f"{v}~{i}" for v in r.evars),
            tuple(rf(f) for f in r.pers_ant),
            tuple(rf(f) for f in r.eph_ant),
            tuple(rf(f) for f in r.pers_con),
            tuple(rf(f) for f in r.eph_con),
            tuple((f"{v}~{i}", h) for v, h in r.fresh_hints),
        )

    u1, e1, pa1, ea1, pc1, ec1, fh1 = side(r1, 1)
    u2, e2, pa2, ea2, pc2, ec2, fh2 = side(r2, 2)

    def set_union(a: tuple[Fact, ...], b: tuple[Fact, ...]) -> tuple[Fact, ...]:
        out = list(a)
        for f in b:
            if f not in out:
                out.append(f)
        return tuple(out)

    return Rule(
        name=f"{r1.name}*{r2.name}",
        uvars=u1 + u2,
        pers_ant=set_union(pa1, pa2),
        eph_ant=ea1 + ea2,
        evars=e1 + e2,
        pers_con=set_union(pc1, pc2),
        eph_con=ec1 + ec2,
        fresh_hints=fh1 + fh2,
        cost=r1.cost + r2.cost,
    )


@dataclass(frozen=True)
class Mrs:
    """A multiset rewriting system: named rules plus declared constants."""

    rules: tuple[Rule, ...]
    declared: frozenset[str] = frozenset()
    initial: Optional[Multiset] = None
    source: Optional[str] = field(default=None, compare=False)

    def rule(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    def signature(self) -> Signature:
        return Signature(self.declared, 0)

    def applicable(self, state: Multiset) -> list[Inst]:
        return match_all(self.rules, state)

    def pairwise_closure(self) -> "Mrs":
        """The rules plus all pairwise parallel combinations."""
        combined = list(self.rules)
        for r1 in self.rules:
            for r2 in self.rules:
                combined.append(parallel_combine(r1, r2))
        return Mrs(tuple(combined), self.declared, self.initial)
