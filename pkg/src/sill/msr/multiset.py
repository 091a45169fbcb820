"""Facts and states.

A state has a persistent part (a set of facts, monotonically growing) and an
ephemeral part (a finite multiset).  The multiset operations are pointwise on
multiplicities: sum adds, union takes the max, intersection the min,
difference truncates at zero, and inclusion compares pointwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .terms import Term, rename_consts, term_consts, term_key, term_to_str, term_vars


@dataclass(frozen=True)
class Fact:
    pred: str
    args: tuple[Term, ...] = ()
    persistent: bool = False

    def __post_init__(self):
        object.__setattr__(
            self, "_h", hash((Fact, self.pred, self.args, self.persistent)))

    def rename(self, rho: Mapping[str, str]) -> "Fact":
        return Fact(self.pred, tuple(rename_consts(a, rho) for a in self.args), self.persistent)


# states hash facts on every operation; the terms below cache their own
# hashes, so caching here makes the whole lookup O(1)
Fact.__hash__ = lambda self: self._h  # type: ignore[method-assign]


def fact_key(f: Fact) -> tuple:
    return (f.pred, f.persistent, tuple(term_key(a) for a in f.args))


def fact_to_str(f: Fact) -> str:
    bang = "!" if f.persistent else ""
    if not f.args:
        return f"{bang}{f.pred}"
    return f"{bang}{f.pred}({', '.join(term_to_str(a) for a in f.args)})"


def fact_vars(f: Fact) -> set[str]:
    out: set[str] = set()
    for a in f.args:
        out |= term_vars(a)
    return out


def fact_consts(f: Fact) -> set[str]:
    out: set[str] = set()
    for a in f.args:
        out |= term_consts(a)
    return out


class Multiset:
    """Immutable state: persistent fact set plus ephemeral fact multiset."""

    __slots__ = ("_eph", "_pers", "_hash")

    def __init__(self, eph: Mapping[Fact, int] | None = None, pers: Iterable[Fact] = ()):
        clean: dict[Fact, int] = {}
        if eph:
            for f, n in eph.items():
                if n < 0:
                    raise ValueError(f"negative multiplicity for {fact_to_str(f)}")
                if n > 0:
                    if f.persistent:
                        raise ValueError("persistent fact in ephemeral part")
                    clean[f] = n
        self._eph = clean
        self._pers = frozenset(pers)
        for f in self._pers:
            if not f.persistent:
                raise ValueError("ephemeral fact in persistent part")
        self._hash: int | None = None

    @staticmethod
    def of(eph: Iterable[Fact] = (), pers: Iterable[Fact] = ()) -> "Multiset":
        counts: dict[Fact, int] = {}
        for f in eph:
            counts[f] = counts.get(f, 0) + 1
        return Multiset(counts, pers)

    @classmethod
    def _make(cls, eph: dict[Fact, int], pers: frozenset[Fact]) -> "Multiset":
        # trusted constructor for internally produced parts: skips
        # validation and, crucially, does not rehash every key the way a
        # fresh dict build would
        m = object.__new__(cls)
        m._eph = eph
        m._pers = pers
        m._hash = None
        return m

    # -- access -----------------------------------------------------------

    @property
    def pers(self) -> frozenset[Fact]:
        return self._pers

    def count(self, f: Fact) -> int:
        if f.persistent:
            return 1 if f in self._pers else 0
        return self._eph.get(f, 0)

    def eph_items(self) -> Iterator[tuple[Fact, int]]:
        return iter(self._eph.items())

    def eph_support(self) -> Iterator[Fact]:
        return iter(self._eph.keys())

    def eph_size(self) -> int:
        return sum(self._eph.values())

    def support(self) -> set[Fact]:
        """All facts present, persistent and ephemeral, as a set."""
        return set(self._eph.keys()) | set(self._pers)

    def consts(self) -> set[str]:
        out: set[str] = set()
        for f in self.support():
            out |= fact_consts(f)
        return out

    def is_empty(self) -> bool:
        return not self._eph and not self._pers

    # -- equality ----------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Multiset):
            return NotImplemented
        return self._eph == other._eph and self._pers == other._pers

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((frozenset(self._eph.items()), self._pers))
        return self._hash

    def __repr__(self) -> str:
        return f"Multiset({self.to_str()!r})"

    def to_str(self) -> str:
        parts = [fact_to_str(f) for f in sorted(self._pers, key=fact_key)]
        for f in sorted(self._eph, key=fact_key):
            parts.extend([fact_to_str(f)] * self._eph[f])
        return ", ".join(parts) if parts else "."

    # -- algebra on the ephemeral part --------------------------------------

    def _binop(self, other: "Multiset", op) -> "Multiset":
        keys = set(self._eph) | set(other._eph)
        out = {f: op(self._eph.get(f, 0), other._eph.get(f, 0)) for f in keys}
        return Multiset(out, self._pers | other._pers)

    def msum(self, other: "Multiset") -> "Multiset":
        # dict(d) reuses stored hashes, so only other's keys get hashed
        out = dict(self._eph)
        for f, n in other._eph.items():
            out[f] = out.get(f, 0) + n
        return Multiset._make(out, self._pers | other._pers)

    def munion(self, other: "Multiset") -> "Multiset":
        return self._binop(other, max)

    def minter(self, other: "Multiset") -> "Multiset":
        keys = set(self._eph) & set(other._eph)
        out = {f: min(self._eph[f], other._eph[f]) for f in keys}
        return Multiset(out, self._pers & other._pers)

    def mdiff(self, other: "Multiset") -> "Multiset":
        """Pointwise difference truncated at zero; persistent part kept."""
        out = dict(self._eph)
        for f, n in other._eph.items():
            cur = out.get(f, 0)
            if cur <= n:
                out.pop(f, None)
            else:
                out[f] = cur - n
        return Multiset._make(out, self._pers)

    def leq(self, other: "Multiset") -> bool:
        """Pointwise inclusion of the ephemeral parts and set inclusion of
        the persistent parts."""
        if not self._pers <= other._pers:
            return False
        return all(n <= other._eph.get(f, 0) for f, n in self._eph.items())

    def with_pers(self, extra: Iterable[Fact]) -> "Multiset":
        pers = self._pers | frozenset(extra)
        for f in pers:
            if not f.persistent:
                raise ValueError("ephemeral fact in persistent part")
        return Multiset._make(self._eph, pers)

    def rename(self, rho: Mapping[str, str]) -> "Multiset":
        eph: dict[Fact, int] = {}
        for f, n in self._eph.items():
            g = f.rename(rho)
            eph[g] = eph.get(g, 0) + n
        return Multiset(eph, (f.rename(rho) for f in self._pers))


EMPTY = Multiset()
