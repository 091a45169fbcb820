"""Bounded reachability and the overlap test for interference freedom."""

from __future__ import annotations

import heapq
from typing import Iterable

from .canon import canonical_form, ms_key
from .multiset import Multiset
from .rules import Mrs, apply_inst
from .terms import Const


class BudgetExceeded(Exception):
    """The search frontier grew past the configured bound."""


def overlap(state: Multiset, parts: Iterable[Multiset]) -> Multiset:
    """What the parts jointly need beyond what the state can supply.

    Pointwise max(0, sum of parts - state), on the ephemeral fragment.
    """
    total = Multiset()
    for p in parts:
        total = total.msum(p)
    return Multiset({f: n for f, n in total.mdiff(state).eph_items()})


def is_non_overlapping(mrs: Mrs, state: Multiset) -> bool:
    """Every applicable instantiation preserves its share of the overlap.

    For each distinct applicable instantiation, the part of its ephemeral
    antecedent that lies in the joint overlap must reappear in its
    consequent, where fresh constants are replaced by placeholders that
    cannot occur in the state.
    """
    insts = mrs.applicable(state)
    parts = [i.eph_ant_g() for i in insts]
    ol = overlap(state, parts)
    for inst in insts:
        xi = {v: Const(f"\x01{k}") for k, v in enumerate(inst.rule.evars)}
        _, eph_out = inst.consequent(xi)
        if not inst.eph_ant_g().minter(ol).leq(eph_out):
            return False
    return True


def reachable_within(
    mrs: Mrs, start: Multiset, k: int, max_states: int = 100_000
) -> set[Multiset]:
    """States reachable from start within a step budget of k, canonicalized.

    A combined rule consumes budget equal to its cost (the number of base
    rules it stands for), so the result is invariant under closing the
    system under parallel combination.  Generated constants are renamed in
    order of first appearance, making the set stable across runs.
    """
    if k < 0:
        raise ValueError("negative step budget")
    start_c, _ = canonical_form(start)
    dist: dict[tuple, tuple[int, Multiset]] = {ms_key(start_c): (0, start_c)}
    heap: list[tuple[int, tuple]] = [(0, ms_key(start_c))]
    sig0 = mrs.signature()
    while heap:
        d, key = heapq.heappop(heap)
        cur_d, state = dist[key]
        if d > cur_d:
            continue
        for inst in mrs.applicable(state):
            nd = d + inst.rule.cost
            if nd > k:
                continue
            nxt, _, _ = apply_inst(state, inst, sig0.absorb_all(state.consts()))
            nxt_c, _ = canonical_form(nxt)
            nkey = ms_key(nxt_c)
            if nkey not in dist or nd < dist[nkey][0]:
                dist[nkey] = (nd, nxt_c)
                if len(dist) > max_states:
                    raise BudgetExceeded(f"more than {max_states} states within budget")
                heapq.heappush(heap, (nd, nkey))
    return {ms for _, ms in dist.values()}
