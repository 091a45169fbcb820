"""Type checking for session types, functional terms, processes, and
configurations.

Processes are checked against a sequent: a single offered channel on the
right and a linear context of used channels on the left.  Every used channel
must be consumed exactly once; the only implicit weakening is inside a case
with no branches, where there is nothing left to run.
"""

from __future__ import annotations

from typing import Mapping, Optional

from . import ast
from .ast import NEGATIVE, POSITIVE
from .errors import (
    CyclicSharing,
    IllFormed,
    IllTyped,
    InterfaceMismatch,
    LinearityError,
    NotAMessage,
    SillError,
    SillTypeError,
    UnboundTypeVariable,
)

__all__ = [
    "CyclicSharing", "IllFormed", "IllTyped", "InterfaceMismatch",
    "LinearityError", "NotAMessage", "SillError", "SillTypeError",
    "UnboundTypeVariable", "carrier_continuation", "check_config",
    "check_functype", "check_proc", "check_term", "check_type", "oc_ic",
]


# -- type formation ------------------------------------------------------------


def check_type(a: ast.SessionType, xi: Optional[Mapping[str, str]] = None) -> str:
    """Validate formation of a session type and return its polarity.

    xi maps bound type variables to their polarities; with the default empty
    xi the type must be closed.
    """
    return _formation(a, dict(xi) if xi else {})


def _formation(a, xi):
    if isinstance(a, ast.One):
        return POSITIVE
    if isinstance(a, ast.Plus):
        for label, t in a.branches:
            if _formation(t, xi) != POSITIVE:
                raise IllFormed(f"internal choice branch {label} must be positive")
        return POSITIVE
    if isinstance(a, ast.With):
        for label, t in a.branches:
            if _formation(t, xi) != NEGATIVE:
                raise IllFormed(f"external choice branch {label} must be negative")
        return NEGATIVE
    if isinstance(a, ast.Tensor):
        if _formation(a.left, xi) != POSITIVE or _formation(a.right, xi) != POSITIVE:
            raise IllFormed("both components of * must be positive")
        return POSITIVE
    if isinstance(a, ast.Lolli):
        if _formation(a.left, xi) != POSITIVE:
            raise IllFormed("the argument of -o must be positive")
        if _formation(a.right, xi) != NEGATIVE:
            raise IllFormed("the result of -o must be negative")
        return NEGATIVE
    if isinstance(a, ast.Down):
        if _formation(a.body, xi) != NEGATIVE:
            raise IllFormed("down must wrap a negative type")
        return POSITIVE
    if isinstance(a, ast.Up):
        if _formation(a.body, xi) != POSITIVE:
            raise IllFormed("up must wrap a positive type")
        return NEGATIVE
    if isinstance(a, ast.AndVal):
        check_functype(a.vtype)
        if _formation(a.body, xi) != POSITIVE:
            raise IllFormed("the continuation of ^ must be positive")
        return POSITIVE
    if isinstance(a, ast.ImpVal):
        check_functype(a.vtype)
        if _formation(a.body, xi) != NEGATIVE:
            raise IllFormed("the continuation of => must be negative")
        return NEGATIVE
    if isinstance(a, ast.TVar):
        if a.name not in xi:
            raise UnboundTypeVariable(a.name)
        return xi[a.name]
    if isinstance(a, ast.Rec):
        pol = ast.polarity(a, xi)
        inner = dict(xi)
        inner[a.var] = pol
        body_pol = _formation(a.body, inner)
        if body_pol != pol:
            raise IllFormed(
                f"rec {a.var} is {pol} but its body is {body_pol}")
        return pol
    raise IllFormed(f"not a session type: {a!r}")


def check_functype(t: ast.FuncType) -> None:
    if isinstance(t, ast.Arrow):
        check_functype(t.arg)
        check_functype(t.res)
        return
    if isinstance(t, ast.ProcType):
        names = [t.offered[0]] + [c for c, _ in t.used]
        if len(set(names)) != len(names):
            raise IllFormed("a process type repeats a channel name")
        check_type(t.offered[1])
        for _, a in t.used:
            check_type(a)
        return
    raise IllFormed(f"not a functional type: {t!r}")


# -- term typing ---------------------------------------------------------------


def check_term(m: ast.FuncTerm,
               env: Optional[Mapping[str, ast.FuncType]] = None,
               expected: Optional[ast.FuncType] = None) -> ast.FuncType:
    """Type a functional term.

    With expected=None the type is synthesized; otherwise the term is checked
    against expected, which lets unannotated fixed points through.
    """
    env = dict(env) if env else {}
    if expected is None:
        return _synth(m, env)
    _against(m, env, expected)
    return expected


def _synth(m, env):
    if isinstance(m, ast.FVar):
        if m.name not in env:
            raise SillTypeError(f"unbound variable {m.name}")
        return env[m.name]
    if isinstance(m, ast.Lam):
        check_functype(m.ann)
        inner = dict(env)
        inner[m.var] = m.ann
        return ast.Arrow(m.ann, _synth(m.body, inner))
    if isinstance(m, ast.FApp):
        fn = _synth(m.fn, env)
        if not isinstance(fn, ast.Arrow):
            raise SillTypeError(f"applied a term of type {fn}")
        _against(m.arg, env, fn.arg)
        return fn.res
    if isinstance(m, ast.Fix):
        ann = _annot_type(m.body)
        inner = dict(env)
        inner[m.var] = ann
        _against(m.body, inner, ann)
        return ann
    if isinstance(m, ast.Quote):
        pt = ast.ProcType(m.offered, m.used)
        check_functype(pt)
        check_proc(m.body, m.offered, dict(m.used), env)
        return pt
    raise SillTypeError(f"not a term: {m!r}")


def _annot_type(m):
    """Read a type off a fix body's annotations."""
    if isinstance(m, ast.Lam):
        return ast.Arrow(m.ann, _annot_type(m.body))
    if isinstance(m, ast.Quote):
        return ast.ProcType(m.offered, m.used)
    raise SillTypeError(
        "cannot infer a type for this fixed point; its body must be built "
        "from annotated lambdas and quoted processes")


def _against(m, env, t):
    if isinstance(m, ast.Lam) and isinstance(t, ast.Arrow):
        check_functype(m.ann)
        if not ast.functype_eq(m.ann, t.arg):
            raise SillTypeError(
                f"lambda annotation {m.ann} does not match expected {t.arg}")
        inner = dict(env)
        inner[m.var] = m.ann
        _against(m.body, inner, t.res)
        return
    if isinstance(m, ast.Fix):
        inner = dict(env)
        inner[m.var] = t
        _against(m.body, inner, t)
        return
    got = _synth(m, env)
    if not ast.functype_eq(got, t):
        raise SillTypeError(f"expected {t}, found {got}")


# -- process typing ------------------------------------------------------------


def check_proc(p: ast.Process,
               offered: tuple[str, ast.SessionType],
               used: Optional[Mapping[str, ast.SessionType]] = None,
               env: Optional[Mapping[str, ast.FuncType]] = None) -> None:
    """Check that p provides the offered channel using exactly `used`."""
    name, a = offered
    delta = dict(used) if used else {}
    if name in delta:
        raise SillTypeError(f"offered channel {name} also appears on the left")
    _proc(p, name, a, delta, dict(env) if env else {})


def _leaf(delta, what):
    if delta:
        raise LinearityError(f"{what} leaves channels unused: "
                             + ", ".join(sorted(delta)))


def _need(delta, c):
    if c not in delta:
        raise SillTypeError(f"channel {c} is not in scope")
    return delta[c]


def _proc(p, cname, ctype, delta, env):
    if isinstance(p, (ast.FwdPos, ast.FwdNeg)):
        pos = isinstance(p, ast.FwdPos)
        word = "fwd+" if pos else "fwd-"
        if p.dst != cname:
            raise SillTypeError(f"{word} must provide the offered channel {cname}")
        src_t = _need(delta, p.src)
        del delta[p.src]
        _leaf(delta, word)
        if not ast.type_eq(src_t, ctype):
            raise SillTypeError(
                f"{word} connects {p.src}:{src_t} to {p.dst}:{ctype}")
        want = POSITIVE if pos else NEGATIVE
        if ast.polarity(ctype) != want:
            raise SillTypeError(f"{word} needs a {want} type, got {ctype}")
        return

    if isinstance(p, ast.Close):
        if p.chan != cname:
            raise SillTypeError(f"close must act on the offered channel {cname}")
        if not isinstance(ctype, ast.One):
            raise SillTypeError(f"close needs type 1, the channel has {ctype}")
        _leaf(delta, "close")
        return

    if isinstance(p, ast.Wait):
        t = _need(delta, p.chan)
        if not isinstance(t, ast.One):
            raise SillTypeError(f"wait needs type 1, channel {p.chan} has {t}")
        del delta[p.chan]
        _proc(p.cont, cname, ctype, delta, env)
        return

    if isinstance(p, ast.SendLabel):
        a, k = p.chan, p.label
        if a == cname:
            if not isinstance(ctype, ast.Plus):
                raise SillTypeError(f"cannot select on {a}: {ctype}")
            t = ctype.branch(k)
            if t is None:
                raise SillTypeError(f"label {k} is not offered by {ctype}")
            _proc(p.cont, cname, t, delta, env)
            return
        at = _need(delta, a)
        if not isinstance(at, ast.With):
            raise SillTypeError(f"cannot select on {a}: {at}")
        t = at.branch(k)
        if t is None:
            raise SillTypeError(f"label {k} is not offered by {at}")
        delta[a] = t
        _proc(p.cont, cname, ctype, delta, env)
        return

    if isinstance(p, ast.Case):
        a = p.chan
        if a == cname:
            t = ctype
            if not isinstance(t, ast.With):
                raise SillTypeError(f"cannot branch on {a}: {t}")
        else:
            t = _need(delta, a)
            if not isinstance(t, ast.Plus):
                raise SillTypeError(f"cannot branch on {a}: {t}")
        if t.labels() != tuple(l for l, _ in p.branches):
            raise SillTypeError(
                f"case on {a} must cover exactly the labels of {t}")
        for label, q in p.branches:
            cont_t = t.branch(label)
            if a == cname:
                _proc(q, cname, cont_t, dict(delta), env)
            else:
                inner = dict(delta)
                inner[a] = cont_t
                _proc(q, cname, ctype, inner, env)
        return

    if isinstance(p, ast.SendChan):
        a, b = p.chan, p.payload
        if b == a:
            raise SillTypeError(f"cannot send channel {b} on itself")
        bt = _need(delta, b)
        if a == cname:
            if not isinstance(ctype, ast.Tensor):
                raise SillTypeError(f"cannot send a channel on {a}: {ctype}")
            if not ast.type_eq(bt, ctype.left):
                raise SillTypeError(
                    f"payload {b} has type {bt}, expected {ctype.left}")
            del delta[b]
            _proc(p.cont, cname, ctype.right, delta, env)
            return
        at = _need(delta, a)
        if not isinstance(at, ast.Lolli):
            raise SillTypeError(f"cannot send a channel on {a}: {at}")
        if not ast.type_eq(bt, at.left):
            raise SillTypeError(f"payload {b} has type {bt}, expected {at.left}")
        del delta[b]
        delta[a] = at.right
        _proc(p.cont, cname, ctype, delta, env)
        return

    if isinstance(p, ast.RecvChan):
        x, a = p.var, p.chan
        if x == cname or x in delta:
            raise SillTypeError(f"received channel name {x} is already in scope")
        if a == cname:
            if not isinstance(ctype, ast.Lolli):
                raise SillTypeError(f"cannot receive a channel on {a}: {ctype}")
            delta[x] = ctype.left
            _proc(p.cont, cname, ctype.right, delta, env)
            return
        at = _need(delta, a)
        if not isinstance(at, ast.Tensor):
            raise SillTypeError(f"cannot receive a channel on {a}: {at}")
        delta[x] = at.left
        delta[a] = at.right
        _proc(p.cont, cname, ctype, delta, env)
        return

    if isinstance(p, (ast.SendShift, ast.RecvShift)):
        a = p.chan
        send = isinstance(p, ast.SendShift)
        if a == cname:
            want = ast.Down if send else ast.Up
            if not isinstance(ctype, want):
                raise SillTypeError(f"shift does not fit {a}: {ctype}")
            _proc(p.cont, cname, ctype.body, delta, env)
            return
        at = _need(delta, a)
        want = ast.Up if send else ast.Down
        if not isinstance(at, want):
            raise SillTypeError(f"shift does not fit {a}: {at}")
        delta[a] = at.body
        _proc(p.cont, cname, ctype, delta, env)
        return

    if isinstance(p, (ast.SendUnfold, ast.RecvUnfold)):
        a = p.chan
        send = isinstance(p, ast.SendUnfold)
        if a == cname:
            t = ctype
        else:
            t = _need(delta, a)
        if not isinstance(t, ast.Rec):
            raise SillTypeError(f"cannot unfold {a}: {t}")
        sender_side = send == (a == cname)
        want = POSITIVE if sender_side else NEGATIVE
        if ast.polarity(t) != want:
            verb = "send" if send else "receive"
            raise SillTypeError(
                f"cannot {verb} an unfold on {a}: {t} has the wrong polarity")
        unfolded = ast.unfold_rec(t)
        if a == cname:
            _proc(p.cont, cname, unfolded, delta, env)
        else:
            delta[a] = unfolded
            _proc(p.cont, cname, ctype, delta, env)
        return

    if isinstance(p, ast.SendVal):
        a = p.chan
        if a == cname:
            if not isinstance(ctype, ast.AndVal):
                raise SillTypeError(f"cannot send a value on {a}: {ctype}")
            check_term(p.term, env, ctype.vtype)
            _proc(p.cont, cname, ctype.body, delta, env)
            return
        at = _need(delta, a)
        if not isinstance(at, ast.ImpVal):
            raise SillTypeError(f"cannot send a value on {a}: {at}")
        check_term(p.term, env, at.vtype)
        delta[a] = at.body
        _proc(p.cont, cname, ctype, delta, env)
        return

    if isinstance(p, ast.RecvVal):
        x, a = p.var, p.chan
        inner = dict(env)
        if a == cname:
            if not isinstance(ctype, ast.ImpVal):
                raise SillTypeError(f"cannot receive a value on {a}: {ctype}")
            inner[x] = ctype.vtype
            _proc(p.cont, cname, ctype.body, delta, inner)
            return
        at = _need(delta, a)
        if not isinstance(at, ast.AndVal):
            raise SillTypeError(f"cannot receive a value on {a}: {at}")
        inner[x] = at.vtype
        delta[a] = at.body
        _proc(p.cont, cname, ctype, delta, inner)
        return

    if isinstance(p, ast.Cut):
        x = p.chan
        if p.ann is None:
            raise SillTypeError(f"cut binding {x} needs a type annotation")
        check_type(p.ann)
        if x == cname or x in delta:
            raise SillTypeError(f"cut reuses the channel name {x}")
        fcl = ast.fc(p.left)
        fcr = ast.fc(p.right)
        dup = (fcl & fcr) & set(delta)
        if dup:
            raise LinearityError("channels used on both sides of a cut: "
                                 + ", ".join(sorted(dup)))
        left_delta = {c: t for c, t in delta.items() if c in fcl}
        right_delta = {c: t for c, t in delta.items() if c not in fcl}
        _proc(p.left, x, p.ann, left_delta, env)
        right_delta[x] = p.ann
        _proc(p.right, cname, ctype, right_delta, env)
        return

    if isinstance(p, ast.Unquote):
        if p.chan != cname:
            raise SillTypeError(
                f"unquote must provide the offered channel {cname}")
        pt = _synth(p.term, env)
        if not isinstance(pt, ast.ProcType):
            raise SillTypeError(f"unquoted a term of type {pt}")
        if len(p.used) != len(pt.used):
            raise SillTypeError(
                f"unquote passes {len(p.used)} channels, the process type "
                f"wants {len(pt.used)}")
        if len(set(p.used)) != len(p.used):
            raise LinearityError("unquote passes a channel twice")
        for c in p.used:
            _need(delta, c)
        leftover = set(delta) - set(p.used)
        if leftover:
            raise LinearityError("unquote leaves channels unused: "
                                 + ", ".join(sorted(leftover)))
        if not ast.type_eq(pt.offered[1], ctype):
            raise SillTypeError(
                f"unquoted process provides {pt.offered[1]}, expected {ctype}")
        for c, (_, want) in zip(p.used, pt.used):
            if not ast.type_eq(delta[c], want):
                raise SillTypeError(
                    f"unquote passes {c}:{delta[c]} where {want} is expected")
        return

    raise SillTypeError(f"not a process: {p!r}")


# -- configurations ------------------------------------------------------------


def check_config(facts, claimed: ast.Interface):
    """Typecheck a configuration against its claimed interface.

    Facts must form a forest: every channel has at most one providing fact
    and at most one consuming fact, and following consumers never loops.
    Returns the tree decomposition as a mapping from each provided channel
    to its tree's facts in root-first order.
    """
    facts = tuple(facts)
    types: dict[str, ast.SessionType] = {}
    for group in (claimed.used, claimed.internal, claimed.provided):
        for c, t in group:
            if c in types:
                raise InterfaceMismatch(f"channel {c} listed twice in the interface")
            check_type(t)
            types[c] = t

    providers: dict[str, ast.ConfigFact] = {}
    for f in facts:
        if f.chan in providers:
            raise CyclicSharing(f"two facts provide channel {f.chan}")
        providers[f.chan] = f

    consumers: dict[str, ast.ConfigFact] = {}
    for f in facts:
        if f.chan not in types:
            raise InterfaceMismatch(f"fact channel {f.chan} is not in the interface")
        for c in sorted(ast.fc(f.proc) - {f.chan}):
            if c not in types:
                raise InterfaceMismatch(f"channel {c} is not in the interface")
            if c in consumers:
                raise CyclicSharing(f"channel {c} is consumed by two facts")
            consumers[c] = f

    for f in facts:
        if isinstance(f, ast.MsgF) and ast.message_parts(f.chan, f.proc) is None:
            raise IllTyped(f"msg fact on {f.chan} does not hold a message")
        uses = ast.fc(f.proc) - {f.chan}
        try:
            check_proc(f.proc, (f.chan, types[f.chan]),
                       {c: types[c] for c in uses})
        except (SillTypeError, IllFormed) as e:
            raise IllTyped(f"fact providing {f.chan}: {e}") from e

    actual_used = {c for c in consumers if c not in providers}
    actual_provided = {c for c in providers if c not in consumers}
    actual_internal = set(providers) & set(consumers)
    for label, actual, claim in (
            ("used", actual_used, {c for c, _ in claimed.used}),
            ("internal", actual_internal, {c for c, _ in claimed.internal}),
            ("provided", actual_provided, {c for c, _ in claimed.provided})):
        if actual != claim:
            raise InterfaceMismatch(
                f"{label} channels are {sorted(actual)}, "
                f"the interface claims {sorted(claim)}")

    # cycle check: follow each fact to the fact consuming its channel
    state: dict[str, str] = {}
    for start in providers:
        if state.get(start) == "done":
            continue
        path = []
        c: Optional[str] = start
        while c is not None and state.get(c) != "done":
            if state.get(c) == "active":
                raise CyclicSharing(f"facts around channel {c} form a cycle")
            state[c] = "active"
            path.append(c)
            nxt = consumers.get(c)
            c = nxt.chan if nxt is not None else None
        for d in path:
            state[d] = "done"

    children = {
        c: sorted(ch for ch in ast.fc(providers[c].proc) - {c}
                  if ch in providers)
        for c in providers
    }
    trees: dict[str, tuple[ast.ConfigFact, ...]] = {}
    for root in sorted(actual_provided):
        order = []
        stack = [root]
        while stack:
            c = stack.pop()
            order.append(providers[c])
            stack.extend(reversed(children[c]))
        trees[root] = tuple(order)
    return trees


def check_module(m: ast.Module) -> None:
    """Check every declaration of a parsed module.

    A configuration with a hole cannot be checked as a forest until something
    is plugged in, so only its individual facts are typed; the hole's
    interface supplies the types of the channels it touches.
    """
    for d in m.decls:
        if isinstance(d, ast.TypeDecl):
            check_type(d.body)
        elif isinstance(d, ast.TermDecl):
            check_functype(d.ann)
            check_term(d.body, expected=d.ann)
        elif isinstance(d, ast.ProcDecl):
            check_type(d.offered[1])
            for _, t in d.used:
                check_type(t)
            check_proc(d.body, d.offered, dict(d.used))
        elif isinstance(d, ast.ConfigDecl):
            if d.hole is None:
                check_config(d.facts, d.interface)
            else:
                types = d.interface.all_types()
                types.update(dict(d.hole.used))
                types.update(dict(d.hole.provided))
                for t in types.values():
                    check_type(t)
                for f in d.facts:
                    if (isinstance(f, ast.MsgF)
                            and ast.message_parts(f.chan, f.proc) is None):
                        raise IllTyped(
                            f"msg fact on {f.chan} does not hold a message")
                    uses = ast.fc(f.proc) - {f.chan}
                    missing = sorted(c for c in uses | {f.chan}
                                     if c not in types)
                    if missing:
                        raise InterfaceMismatch(
                            f"channels {missing} are not in the interface")
                    try:
                        check_proc(f.proc, (f.chan, types[f.chan]),
                                   {c: types[c] for c in uses})
                    except (SillTypeError, IllFormed) as e:
                        raise IllTyped(f"fact providing {f.chan}: {e}") from e
        else:
            raise SillError(f"unknown declaration {d!r}")


def oc_ic(fact: ast.ConfigFact,
          types: Mapping[str, ast.SessionType]) -> tuple[set, set]:
    """Split a fact's channels into output and input channels.

    A provided channel is an output exactly when its type is positive; a
    used channel is an output exactly when its type is negative.
    """
    oc: set = set()
    ic: set = set()
    for c in ast.fc(fact.proc) | {fact.chan}:
        provided = c == fact.chan
        positive = ast.polarity(types[c]) == POSITIVE
        (oc if provided == positive else ic).add(c)
    return oc, ic


def carrier_continuation(fact: ast.ConfigFact) -> tuple[str, Optional[str]]:
    """Carrier and continuation channel of a message fact.

    The carrier is where the communication happens; the continuation is the
    channel the rest of the session moves to, absent for close.
    """
    info = ast.message_parts(fact.chan, fact.proc)
    if info is None:
        raise NotAMessage(str(fact))
    return info.carrier, info.cont
