"""Text format for rewriting systems.

A system file consists of rule declarations and at most one initial state::

    # tokens after '#' are comments
    rule step: forall x, y. edge(x, y), at(x) -o at(y)
    rule spawn: forall x. at(x) -o exists n. at(x), mark(n)
    init: edge(a, b), at(a), !root(a)

``!p(...)`` marks a persistent fact.  Identifiers may use letters, digits
and underscores; the characters ``# ' %% ~`` are reserved for generated
names.  An empty fact list is written ``.``.
"""

from __future__ import annotations

import re
from typing import Optional

from .multiset import Fact, Multiset, fact_consts, fact_to_str
from .rules import Mrs, Rule, is_generated_name
from .terms import App, Const, Term, Var


class ParseError(Exception):
    def __init__(self, line: int, col: int, expected: str, found: str = ""):
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found
        where = f"{line}:{col}"
        msg = f"{where}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)


# A name may carry generated-name suffixes (e.g. e1#0, c'2, %3) so that
# serialized traces parse back; '#' elsewhere starts a comment.
_TOKEN = re.compile(
    r"""(?P<ws>[ \t\r]+)
      | (?P<name>[A-Za-z0-9_]+(?:[\#'][0-9]+)*|%[0-9]+)
      | (?P<comment>\#[^\n]*)
      | (?P<nl>\n)
      | (?P<lolli>-o)
      | (?P<punct>[(),.:!])
    """,
    re.VERBOSE,
)


class _Lexer:
    def __init__(self, src: str):
        self.src = src
        self.pos = 0
        self.line = 1
        self.col = 1
        self.toks: list[tuple[str, str, int, int]] = []
        while self.pos < len(src):
            m = _TOKEN.match(src, self.pos)
            if not m:
                raise ParseError(self.line, self.col, "a token", src[self.pos])
            kind = m.lastgroup
            text = m.group()
            if kind == "nl":
                self.line += 1
                self.col = 1
            elif kind in ("ws", "comment"):
                self.col += len(text)
            else:
                self.toks.append((kind, text, self.line, self.col))
                self.col += len(text)
            self.pos = m.end()
        self.toks.append(("eof", "", self.line, self.col))
        self.i = 0

    def peek(self) -> tuple[str, str, int, int]:
        return self.toks[self.i]

    def next(self) -> tuple[str, str, int, int]:
        t = self.toks[self.i]
        if t[0] != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> tuple[str, str, int, int]:
        t = self.next()
        if t[1] != text:
            raise ParseError(t[2], t[3], repr(text), t[1] or "end of input")
        return t

    def expect_name(self, what: str = "an identifier") -> tuple[str, str, int, int]:
        t = self.next()
        if t[0] != "name":
            raise ParseError(t[2], t[3], what, t[1] or "end of input")
        return t


def _parse_term(lx: _Lexer, scope: frozenset[str]) -> Term:
    t = lx.expect_name("a term")
    name = t[1]
    if lx.peek()[1] == "(":
        lx.next()
        args = [_parse_term(lx, scope)]
        while lx.peek()[1] == ",":
            lx.next()
            args.append(_parse_term(lx, scope))
        lx.expect(")")
        return App(name, tuple(args))
    return Var(name) if name in scope else Const(name)


def _parse_fact(lx: _Lexer, scope: frozenset[str]) -> Fact:
    persistent = False
    if lx.peek()[1] == "!":
        lx.next()
        persistent = True
    t = lx.expect_name("a predicate")
    args: list[Term] = []
    if lx.peek()[1] == "(":
        lx.next()
        args.append(_parse_term(lx, scope))
        while lx.peek()[1] == ",":
            lx.next()
            args.append(_parse_term(lx, scope))
        lx.expect(")")
    return Fact(t[1], tuple(args), persistent)


def _parse_facts(lx: _Lexer, scope: frozenset[str], stop: tuple[str, ...]) -> list[Fact]:
    if lx.peek()[1] == ".":
        lx.next()
        return []
    if lx.peek()[1] in stop or lx.peek()[0] == "eof":
        return []
    facts = [_parse_fact(lx, scope)]
    while lx.peek()[1] == ",":
        lx.next()
        facts.append(_parse_fact(lx, scope))
    return facts


def _parse_vars(lx: _Lexer) -> list[str]:
    names = [lx.expect_name("a variable")[1]]
    while lx.peek()[1] == ",":
        lx.next()
        names.append(lx.expect_name("a variable")[1])
    lx.expect(".")
    return names


def parse_term(s: str, scope: frozenset[str] = frozenset()) -> Term:
    lx = _Lexer(s)
    t = _parse_term(lx, scope)
    end = lx.peek()
    if end[0] != "eof":
        raise ParseError(end[2], end[3], "end of input", end[1])
    return t


def parse_fact(s: str, scope: frozenset[str] = frozenset()) -> Fact:
    lx = _Lexer(s)
    f = _parse_fact(lx, scope)
    end = lx.peek()
    if end[0] != "eof":
        raise ParseError(end[2], end[3], "end of input", end[1])
    return f


def parse_system(src: str) -> Mrs:
    """Parse a system file into rules, declared constants and initial state."""
    lx = _Lexer(src)
    rules: list[Rule] = []
    init: Optional[Multiset] = None
    while lx.peek()[0] != "eof":
        kw = lx.expect_name("'rule' or 'init'")
        if kw[1] == "rule":
            name = lx.expect_name("a rule name")[1]
            lx.expect(":")
            uvars: list[str] = []
            if lx.peek()[1] == "forall":
                lx.next()
                uvars = _parse_vars(lx)
            scope = frozenset(uvars)
            lhs = _parse_facts(lx, scope, stop=("-o",))
            lx.expect("-o")
            evars: list[str] = []
            if lx.peek()[1] == "exists":
                lx.next()
                evars = _parse_vars(lx)
            scope2 = frozenset(uvars) | frozenset(evars)
            rhs = _parse_facts(lx, scope2, stop=("rule", "init"))
            try:
                rules.append(
                    Rule(
                        name=name,
                        uvars=tuple(uvars),
                        pers_ant=tuple(f for f in lhs if f.persistent),
                        eph_ant=tuple(f for f in lhs if not f.persistent),
                        evars=tuple(evars),
                        pers_con=tuple(f for f in rhs if f.persistent),
                        eph_con=tuple(f for f in rhs if not f.persistent),
                    )
                )
            except ValueError as e:
                raise ParseError(kw[2], kw[3], f"a well-formed rule ({e})")
        elif kw[1] == "init":
            if init is not None:
                raise ParseError(kw[2], kw[3], "at most one init declaration")
            lx.expect(":")
            facts = _parse_facts(lx, frozenset(), stop=("rule", "init"))
            init = Multiset.of(
                (f for f in facts if not f.persistent),
                (f for f in facts if f.persistent),
            )
        else:
            raise ParseError(kw[2], kw[3], "'rule' or 'init'", kw[1])

    declared: set[str] = set()
    for r in rules:
        for f in r.pers_ant + r.eph_ant + r.pers_con + r.eph_con:
            declared |= fact_consts(f)
    if init is not None:
        declared |= init.consts()
    for c in declared:
        if is_generated_name(c):
            raise ParseError(1, 1, f"a plain constant name (got generated-style {c!r})")
    return Mrs(tuple(rules), frozenset(declared), init, source=src)


def system_to_str(mrs: Mrs) -> str:
    lines = [r.to_str() for r in mrs.rules]
    if mrs.initial is not None:
        parts = [fact_to_str(f) for f in sorted(mrs.initial.pers, key=lambda f: fact_to_str(f))]
        for f in sorted(mrs.initial.eph_support(), key=lambda f: fact_to_str(f)):
            parts.extend([fact_to_str(f)] * mrs.initial.count(f))
        lines.append(f"init: {', '.join(parts) if parts else '.'}")
    return "\n".join(lines) + "\n"
