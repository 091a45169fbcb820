"""First-order terms over constants, variables and function symbols.

A fourth form, :class:`Wrap`, carries an opaque ground payload (the process
layer stores typed ASTs in facts this way).  Pattern matching never descends
into a payload; two wraps match only if their payloads are equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Union

Term = Union["Const", "Var", "App", "Wrap"]


@dataclass(frozen=True)
class Const:
    name: str

    def __post_init__(self):
        object.__setattr__(self, "_h", hash((Const, self.name)))


@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self):
        object.__setattr__(self, "_h", hash((Var, self.name)))


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "_h", hash((App, self.fn, self.args)))


@dataclass(frozen=True)
class Wrap:
    """Opaque ground payload embedded in a term position.

    The payload must be hashable and have a deterministic ``str``.
    """

    payload: object

    def __post_init__(self):
        object.__setattr__(self, "_h", hash((Wrap, self.payload)))

    def __str__(self) -> str:
        return f"<{self.payload}>"


# deep states hash terms constantly, so each node caches its hash at
# construction; children are already built, making every cache O(1)
Const.__hash__ = lambda self: self._h  # type: ignore[method-assign]
Var.__hash__ = lambda self: self._h  # type: ignore[method-assign]
App.__hash__ = lambda self: self._h  # type: ignore[method-assign]
Wrap.__hash__ = lambda self: self._h  # type: ignore[method-assign]


def term_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, App):
        out: set[str] = set()
        for a in t.args:
            out |= term_vars(a)
        return out
    return set()


def term_consts(t: Term) -> set[str]:
    """Names of all constants occurring in t (not inside wraps)."""
    if isinstance(t, Const):
        return {t.name}
    if isinstance(t, App):
        out: set[str] = set()
        for a in t.args:
            out |= term_consts(a)
        return out
    return set()


def is_ground(t: Term) -> bool:
    return not term_vars(t)


def subst_term(t: Term, theta: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return theta.get(t.name, t)
    if isinstance(t, App):
        return App(t.fn, tuple(subst_term(a, theta) for a in t.args))
    return t


def rename_consts(t: Term, rho: Mapping[str, str]) -> Term:
    if isinstance(t, Const):
        return Const(rho.get(t.name, t.name))
    if isinstance(t, App):
        return App(t.fn, tuple(rename_consts(a, rho) for a in t.args))
    return t


def match_term(pat: Term, ground: Term, theta: dict[str, Term]) -> Optional[dict[str, Term]]:
    """Extend theta so that pat[theta] == ground, or return None.

    Mutates and returns theta on success; the caller must copy if it needs
    to backtrack.
    """
    if isinstance(pat, Var):
        bound = theta.get(pat.name)
        if bound is None:
            theta[pat.name] = ground
            return theta
        return theta if bound == ground else None
    if isinstance(pat, Const):
        return theta if pat == ground else None
    if isinstance(pat, App):
        if not isinstance(ground, App) or pat.fn != ground.fn or len(pat.args) != len(ground.args):
            return None
        for p, g in zip(pat.args, ground.args):
            if match_term(p, g, theta) is None:
                return None
        return theta
    # Wrap: opaque, must be identical
    return theta if pat == ground else None


def term_key(t: Term) -> tuple:
    """Total order key on ground terms (and patterns), for determinism."""
    if isinstance(t, Const):
        return (0, t.name)
    if isinstance(t, Var):
        return (1, t.name)
    if isinstance(t, App):
        return (2, t.fn, tuple(term_key(a) for a in t.args))
    return (3, str(t.payload))


def term_to_str(t: Term) -> str:
    if isinstance(t, Const):
        return t.name
    if isinstance(t, Var):
        return t.name
    if isinstance(t, App):
        return f"{t.fn}({', '.join(term_to_str(a) for a in t.args)})"
    return str(t)


def iter_subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from iter_subterms(a)
