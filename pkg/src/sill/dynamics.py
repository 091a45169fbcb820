"""Process configurations as multiset rewriting.

A running configuration is a multiset of ``proc`` and ``msg`` facts whose
second argument encodes a process as a first-order term.  Rewrite rules are
not fixed up front: each state generates one ground rule per enabled step,
so the fair scheduler and the trace machinery apply unchanged.

Sending is asynchronous.  A sender turns into a message fact plus a
continuation running on a fresh channel; a receiver consumes the matching
message and renames itself onto the message's continuation channel.  The
fresh channel is an existential of the generated rule, which keeps traces
replayable and permutable.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Iterable, Mapping, Optional, Union

from .fairness import fair_execute
from .lang import ast
from .lang.check import check_config
from .lang.errors import SillError, SillTypeError
from .msr.multiset import Fact, Multiset, fact_key
from .msr.rules import Inst, Rule, Signature, _equiv_key
from .msr.terms import App, Const, Term, Var, Wrap
from .msr.trace import Trace

DEFAULT_EVAL_FUEL = 10_000

# placeholder channel for rule existentials; '%' keeps it disjoint from
# source identifiers and from generated runtime names
_FRESH = "%fresh"
_EVAR = "nc"


class PreservationViolation(SillError):
    """A run reached a state that no longer typechecks at the recorded
    channel types."""


# -- functional evaluation ---------------------------------------------------------


class _Diverged:
    __slots__ = ()

    def __repr__(self) -> str:
        return "DIVERGED"


DIVERGED = _Diverged()


class _OutOfFuel(Exception):
    pass


def eval_term(m: ast.FuncTerm, fuel: int = DEFAULT_EVAL_FUEL):
    """Big-step call-by-value evaluation.

    fuel bounds the number of recursive unfoldings; exhausting it returns
    the DIVERGED sentinel rather than raising, since callers treat
    divergence as an ordinary (negative) side-condition outcome.
    """
    left = [fuel]
    try:
        return _eval(m, left)
    except _OutOfFuel:
        return DIVERGED


def _eval(m: ast.FuncTerm, left: list) -> ast.FuncTerm:
    # the loop keeps unfolding in tail position so recursion depth stays
    # bounded by the syntactic nesting of the term, not by the fuel
    while True:
        if isinstance(m, (ast.Lam, ast.Quote)):
            return m
        if isinstance(m, ast.Fix):
            if left[0] <= 0:
                raise _OutOfFuel
            left[0] -= 1
            m = ast.subst_fvar(m.body, m.var, m)
        elif isinstance(m, ast.FApp):
            f = _eval(m.fn, left)
            if not isinstance(f, ast.Lam):
                raise SillTypeError(f"applied a non-function: {f}")
            a = _eval(m.arg, left)
            m = ast.subst_fvar(f.body, f.var, a)
        elif isinstance(m, ast.FVar):
            raise SillTypeError(f"unbound variable {m.name} in evaluation")
        else:
            raise SillTypeError(f"cannot evaluate {m!r}")


# -- process encoding --------------------------------------------------------------


def enc_proc(p: ast.Process, env: Optional[Mapping[str, Term]] = None) -> Term:
    """Encode a process as a term.

    Channel names go through env (defaulting to constants of the same
    name), so rule consequents can place existential variables at fresh
    positions.  Binders shadow env.  Functional payloads and cut
    annotations are wrapped opaquely: they never contain free channels.
    """
    return _enc(p, dict(env) if env else {})


def _enc(p: ast.Process, e: dict) -> Term:
    def ch(n: str) -> Term:
        return e.get(n, Const(n))

    def under(n: str) -> dict:
        return {k: v for k, v in e.items() if k != n} if n in e else e

    if isinstance(p, ast.FwdPos):
        return App("fwd+", (ch(p.src), ch(p.dst)))
    if isinstance(p, ast.FwdNeg):
        return App("fwd-", (ch(p.src), ch(p.dst)))
    if isinstance(p, ast.Cut):
        inner = under(p.chan)
        return App("cut", (Const(p.chan), Wrap(p.ann),
                           _enc(p.left, inner), _enc(p.right, inner)))
    if isinstance(p, ast.Close):
        return App("close", (ch(p.chan),))
    if isinstance(p, ast.Wait):
        return App("wait", (ch(p.chan), _enc(p.cont, e)))
    if isinstance(p, ast.SendLabel):
        return App("send_label", (ch(p.chan), Const(p.label), _enc(p.cont, e)))
    if isinstance(p, ast.Case):
        bs = tuple(App("branch", (Const(l), _enc(q, e))) for l, q in p.branches)
        return App("case", (ch(p.chan),) + bs)
    if isinstance(p, ast.SendChan):
        return App("send_chan", (ch(p.chan), ch(p.payload), _enc(p.cont, e)))
    if isinstance(p, ast.RecvChan):
        return App("recv_chan", (Const(p.var), ch(p.chan), _enc(p.cont, under(p.var))))
    if isinstance(p, ast.SendShift):
        return App("send_shift", (ch(p.chan), _enc(p.cont, e)))
    if isinstance(p, ast.RecvShift):
        return App("recv_shift", (ch(p.chan), _enc(p.cont, e)))
    if isinstance(p, ast.SendUnfold):
        return App("send_unfold", (ch(p.chan), _enc(p.cont, e)))
    if isinstance(p, ast.RecvUnfold):
        return App("recv_unfold", (ch(p.chan), _enc(p.cont, e)))
    if isinstance(p, ast.SendVal):
        return App("send_val", (ch(p.chan), Wrap(p.term), _enc(p.cont, e)))
    if isinstance(p, ast.RecvVal):
        return App("recv_val", (Const(p.var), ch(p.chan), _enc(p.cont, e)))
    if isinstance(p, ast.Unquote):
        return App("unquote", (ch(p.chan), Wrap(p.term)) + tuple(ch(u) for u in p.used))
    raise TypeError(f"not a process: {p!r}")


def _name(t: Term) -> str:
    if not isinstance(t, Const):
        raise ValueError(f"expected a channel constant, got {t!r}")
    return t.name


def _payload(t: Term):
    if not isinstance(t, Wrap):
        raise ValueError(f"expected a wrapped payload, got {t!r}")
    return t.payload


def dec_proc(t: Term) -> ast.Process:
    """Decode a term produced by enc_proc back to a process."""
    if not isinstance(t, App):
        raise ValueError(f"not a process encoding: {t!r}")
    tag, a = t.fn, t.args
    if tag == "fwd+":
        return ast.FwdPos(_name(a[0]), _name(a[1]))
    if tag == "fwd-":
        return ast.FwdNeg(_name(a[0]), _name(a[1]))
    if tag == "cut":
        return ast.Cut(_name(a[0]), _payload(a[1]), dec_proc(a[2]), dec_proc(a[3]))
    if tag == "close":
        return ast.Close(_name(a[0]))
    if tag == "wait":
        return ast.Wait(_name(a[0]), dec_proc(a[1]))
    if tag == "send_label":
        return ast.SendLabel(_name(a[0]), _name(a[1]), dec_proc(a[2]))
    if tag == "case":
        bs = []
        for b in a[1:]:
            if not (isinstance(b, App) and b.fn == "branch" and len(b.args) == 2):
                raise ValueError(f"bad branch encoding: {b!r}")
            bs.append((_name(b.args[0]), dec_proc(b.args[1])))
        return ast.Case(_name(a[0]), tuple(bs))
    if tag == "send_chan":
        return ast.SendChan(_name(a[0]), _name(a[1]), dec_proc(a[2]))
    if tag == "recv_chan":
        return ast.RecvChan(_name(a[0]), _name(a[1]), dec_proc(a[2]))
    if tag == "send_shift":
        return ast.SendShift(_name(a[0]), dec_proc(a[1]))
    if tag == "recv_shift":
        return ast.RecvShift(_name(a[0]), dec_proc(a[1]))
    if tag == "send_unfold":
        return ast.SendUnfold(_name(a[0]), dec_proc(a[1]))
    if tag == "recv_unfold":
        return ast.RecvUnfold(_name(a[0]), dec_proc(a[1]))
    if tag == "send_val":
        return ast.SendVal(_name(a[0]), _payload(a[1]), dec_proc(a[2]))
    if tag == "recv_val":
        return ast.RecvVal(_name(a[0]), _name(a[1]), dec_proc(a[2]))
    if tag == "unquote":
        return ast.Unquote(_name(a[0]), _payload(a[1]), tuple(_name(u) for u in a[2:]))
    raise ValueError(f"unknown process tag {tag!r}")


def proc_fact(chan: str, p: ast.Process) -> Fact:
    return Fact("proc", (Const(chan), enc_proc(p)))


def msg_fact(chan: str, p: ast.Process) -> Fact:
    return Fact("msg", (Const(chan), enc_proc(p)))


@lru_cache(maxsize=65536)
def dec_fact(f: Fact) -> tuple[str, ast.Process]:
    """Decode a proc or msg fact to (channel, process)."""
    if f.pred not in ("proc", "msg") or len(f.args) != 2:
        raise ValueError(f"not a process fact: {f!r}")
    return _name(f.args[0]), dec_proc(f.args[1])


# states mostly persist between steps, so per-fact work is cached; keys are
# facts with construction-time hashes, making hits cheap
_fkey = lru_cache(maxsize=65536)(fact_key)


@lru_cache(maxsize=65536)
def classify_fact(f: Fact) -> tuple:
    """(pred, channel, process, message info or None) for a process fact."""
    chan, p = dec_fact(f)
    info = ast.message_parts(chan, p) if f.pred == "msg" else None
    return f.pred, chan, p, info


def config_state(facts: Iterable[Union[ast.ProcF, ast.MsgF]]) -> Multiset:
    """Encode checked configuration facts as a rewriting state."""
    out = []
    for f in facts:
        pred = "msg" if isinstance(f, ast.MsgF) else "proc"
        out.append(Fact(pred, (Const(f.chan), enc_proc(f.proc))))
    return Multiset.of(out)


def state_facts(st: Multiset) -> list[Union[ast.ProcF, ast.MsgF]]:
    """Decode a state back to configuration facts, sorted, with multiplicity."""
    out: list[Union[ast.ProcF, ast.MsgF]] = []
    for f in sorted(st.eph_support(), key=fact_key):
        chan, p = dec_fact(f)
        cf = ast.MsgF(chan, p) if f.pred == "msg" else ast.ProcF(chan, p)
        out.extend([cf] * st.count(f))
    return out


def initial_config(
    p: ast.Process,
    delta: Optional[Mapping[str, ast.SessionType]],
    offered: tuple[str, ast.SessionType],
) -> tuple[Multiset, ast.Interface]:
    """State holding the single fact ``proc c {p}``, plus its interface."""
    used = tuple(sorted((delta or {}).items()))
    iface = ast.Interface(used=used, internal=(), provided=(offered,))
    return Multiset.of([proc_fact(offered[0], p)]), iface


# -- step generation ---------------------------------------------------------------


def _stem(name: str) -> str:
    for mark in ("#", "'", "%", "~"):
        name = name.split(mark)[0]
    return name or "c"


def _ground(name: str, consumed: list, produced: list,
            evars: tuple = (), hints: tuple = ()) -> Inst:
    rule = Rule(name, (), (), tuple(consumed), evars, (), tuple(produced),
                fresh_hints=hints)
    return Inst.make(rule, {})


class SillSystem:
    """Rule interface over process states.

    Quacks like a rule system for the scheduler and the trace machinery,
    but generates its ground rules on demand by decoding the current
    facts: one rule per enabled step, deduplicated and deterministically
    ordered.  Functional side conditions are evaluated with a fixed fuel;
    a divergent side condition makes the step silently unavailable.
    """

    rules: tuple = ()
    source: Optional[str] = None

    def __init__(self, declared: Iterable[str] = (),
                 eval_fuel: int = DEFAULT_EVAL_FUEL):
        self.declared = frozenset(declared)
        self.eval_fuel = eval_fuel
        self._memo: dict = {}

    def signature(self) -> Signature:
        return Signature(self.declared, 0)

    def eval(self, m: ast.FuncTerm):
        try:
            return self._memo[m]
        except KeyError:
            v = eval_term(m, self.eval_fuel)
            self._memo[m] = v
            return v

    def applicable(self, state: Multiset) -> list[Inst]:
        msgs: dict[str, list] = {}
        procs: list[tuple[Fact, str, ast.Process]] = []
        for f in state.eph_support():
            pred, chan, p, info = classify_fact(f)
            if pred == "msg":
                if info is not None:
                    msgs.setdefault(info.carrier, []).append((f, info, p))
            else:
                procs.append((f, chan, p))
        # rules come from proc facts, so only these (and the rare ambiguous
        # message bucket) need a state-independent order
        procs.sort(key=lambda t: _fkey(t[0]))
        for bucket in msgs.values():
            if len(bucket) > 1:
                bucket.sort(key=lambda t: _fkey(t[0]))
        out: list[Inst] = []
        seen = set()
        for f, c, p in procs:
            for inst in self._steps(f, c, p, msgs):
                k = _equiv_key(inst)
                if k not in seen:
                    seen.add(k)
                    out.append(inst)
        return out

    def _steps(self, fact: Fact, c: str, p: ast.Process, msgs: dict) -> list[Inst]:
        key = fact.args[0]
        rs: list[Inst] = []

        def send(name: str, kind: str, payload=None) -> None:
            provider = p.chan == c
            pol = ast.POSITIVE if provider else ast.NEGATIVE
            mkey, mproc = ast.make_message(kind, pol, p.chan, _FRESH, payload)
            env = {_FRESH: Var(_EVAR)}
            mfact = Fact("msg", (Const(p.chan) if mkey == p.chan else Var(_EVAR),
                                 enc_proc(mproc, env)))
            cont = ast.subst_chan(p.cont, {p.chan: _FRESH})
            ckey = Var(_EVAR) if provider else key
            cfact = Fact("proc", (ckey, enc_proc(cont, env)))
            rs.append(_ground(name, [fact], [mfact, cfact], evars=(_EVAR,),
                              hints=((_EVAR, (_stem(p.chan), "prime")),)))

        def recv(name_r: str, name_l: str, kind: str,
                 make_cont: Callable[[ast.MsgInfo], Optional[ast.Process]]) -> None:
            provider = p.chan == c
            want = ast.NEGATIVE if provider else ast.POSITIVE
            name = name_r if provider else name_l
            for mf, info, _ in msgs.get(p.chan, ()):
                if info.kind != kind or info.polarity != want:
                    continue
                q = make_cont(info)
                if q is None:
                    continue
                q = ast.subst_chan(q, {p.chan: info.cont})
                nk = Const(info.cont) if provider else key
                rs.append(_ground(name, [fact, mf],
                                  [Fact("proc", (nk, enc_proc(q)))]))

        if isinstance(p, ast.FwdPos):
            # a waiting positive message is relabeled onto the forwarder's
            # own channel; the forwarder disappears
            for mf, info, m in msgs.get(p.src, ()):
                if info.polarity == ast.POSITIVE:
                    new = ast.subst_chan(m, {p.src: p.dst})
                    rs.append(_ground("fwd+", [fact, mf],
                                      [Fact("msg", (Const(p.dst), enc_proc(new)))]))
        elif isinstance(p, ast.FwdNeg):
            # negative messages travel toward the provider: one addressed to
            # the forwarder is redirected to its source channel
            for mf, info, m in msgs.get(p.dst, ()):
                if info.polarity == ast.NEGATIVE:
                    new = ast.subst_chan(m, {p.dst: p.src})
                    rs.append(_ground("fwd-", [fact, mf],
                                      [Fact("msg", (mf.args[0], enc_proc(new)))]))
        elif isinstance(p, ast.Cut):
            left = ast.subst_chan(p.left, {p.chan: _FRESH})
            right = ast.subst_chan(p.right, {p.chan: _FRESH})
            env = {_FRESH: Var(_EVAR)}
            rs.append(_ground(
                "cut", [fact],
                [Fact("proc", (Var(_EVAR), enc_proc(left, env))),
                 Fact("proc", (key, enc_proc(right, env)))],
                evars=(_EVAR,), hints=((_EVAR, (_stem(p.chan), "prime")),)))
        elif isinstance(p, ast.Unquote):
            v = self.eval(p.term)
            if isinstance(v, ast.Quote) and len(v.used) == len(p.used):
                rho = {v.offered[0]: c}
                for (formal, _), actual in zip(v.used, p.used):
                    rho[formal] = actual
                body = ast.subst_chan(v.body, rho)
                rs.append(_ground("unquote", [fact],
                                  [Fact("proc", (key, enc_proc(body)))]))
        elif isinstance(p, ast.Close):
            if p.chan == c:
                rs.append(_ground("one_r", [fact], [Fact("msg", (key, enc_proc(p)))]))
        elif isinstance(p, ast.Wait):
            for mf, info, _ in msgs.get(p.chan, ()):
                if info.kind == "close":
                    rs.append(_ground("one_l", [fact, mf],
                                      [Fact("proc", (key, enc_proc(p.cont)))]))
        elif isinstance(p, ast.SendLabel):
            send("plus_r" if p.chan == c else "with_l", "label", p.label)
        elif isinstance(p, ast.SendChan):
            send("tensor_r" if p.chan == c else "lolli_l", "chan", p.payload)
        elif isinstance(p, ast.SendShift):
            send("down_r" if p.chan == c else "up_l", "shift")
        elif isinstance(p, ast.SendUnfold):
            send("rec_pos_r" if p.chan == c else "rec_neg_l", "unfold")
        elif isinstance(p, ast.SendVal):
            v = self.eval(p.term)
            if v is not DIVERGED:
                send("and_r" if p.chan == c else "imp_l", "val", v)
        elif isinstance(p, ast.Case):
            branches = dict(p.branches)

            def pick(info: ast.MsgInfo) -> Optional[ast.Process]:
                return branches.get(info.payload)

            recv("with_r", "plus_l", "label", pick)
        elif isinstance(p, ast.RecvChan):
            recv("lolli_r", "tensor_l", "chan",
                 lambda info: ast.subst_chan(p.cont, {p.var: info.payload}))
        elif isinstance(p, ast.RecvShift):
            recv("up_r", "down_l", "shift", lambda info: p.cont)
        elif isinstance(p, ast.RecvUnfold):
            recv("rec_neg_r", "rec_pos_l", "unfold", lambda info: p.cont)
        elif isinstance(p, ast.RecvVal):
            recv("imp_r", "and_l", "val",
                 lambda info: ast.proc_subst_fvar(p.cont, p.var, info.payload))
        return rs


# -- typed runs --------------------------------------------------------------------


def _birth_type(types: dict, step) -> ast.SessionType:
    """Type of the channel a step created, read off the consumed fact."""
    pf = next(f for f in step.inst.rule.eph_ant if f.pred == "proc")
    _, p = dec_fact(pf)
    if isinstance(p, ast.Cut):
        if p.ann is None:
            raise PreservationViolation("cut without a type annotation")
        return p.ann
    t = types.get(p.chan)
    if t is None:
        raise PreservationViolation(f"no recorded type for {p.chan}")
    try:
        if isinstance(p, ast.SendLabel):
            cont = t.branch(p.label)
            if cont is None:
                raise PreservationViolation(
                    f"channel {p.chan}: label {p.label} not in its type")
            return cont
        if isinstance(p, ast.SendChan):
            return t.right
        if isinstance(p, ast.SendShift):
            return t.body
        if isinstance(p, ast.SendUnfold):
            return ast.unfold_rec(t)
        if isinstance(p, ast.SendVal):
            return t.body
    except (AttributeError, KeyError) as ex:
        raise PreservationViolation(f"channel {p.chan}: {ex}") from ex
    raise PreservationViolation(f"rule {step.inst.rule.name} created an "
                                f"unexpected fresh channel")


def _check_state(st: Multiset, types: dict, gamma: set, delta: set, idx: int) -> None:
    facts = state_facts(st)
    provided = []
    internal = []
    for cf in facts:
        if cf.chan not in types:
            raise PreservationViolation(
                f"step {idx}: channel {cf.chan} has no recorded type")
        entry = (cf.chan, types[cf.chan])
        (provided if cf.chan in delta else internal).append(entry)
    used = tuple((n, types[n]) for n in sorted(gamma))
    claim = ast.Interface(used=used, internal=tuple(internal),
                          provided=tuple(provided))
    try:
        check_config(facts, claim)
    except SillError as ex:
        raise PreservationViolation(f"step {idx}: {ex}") from ex


def run(
    system: SillSystem,
    state: Multiset,
    interface: ast.Interface,
    fuel: int = 1000,
    seed: Optional[int] = None,
    check: bool = False,
    observer: Optional[Callable[[Trace], None]] = None,
) -> Trace:
    """Fair execution of a process state.

    interface claims the types of the initial channels.  Channels created
    along the way are typed as they are born; the complete map ends up in
    meta["channel_types"].  With check=True, the initial state and every
    intermediate state are re-checked against those types, raising
    PreservationViolation on the first failure.
    """
    types = dict(interface.all_types())
    gamma = {n for n, _ in interface.used}
    delta = {n for n, _ in interface.provided}

    def watch(tr: Trace) -> None:
        step = tr.steps[-1]
        if step.xi:
            types[step.xi_map()[_EVAR]] = _birth_type(types, step)
        if check:
            _check_state(tr.final(), types, gamma, delta, len(tr.steps))
        if observer is not None:
            observer(tr)

    if check:
        _check_state(state, types, gamma, delta, 0)
    tr = fair_execute(system, state, budget=fuel, seed=seed, observer=watch)
    tr.meta["channel_types"] = types
    tr.meta["interface"] = interface
    return tr


def run_config(
    decl: ast.ConfigDecl,
    fuel: int = 1000,
    seed: Optional[int] = None,
    check: bool = False,
    eval_fuel: int = DEFAULT_EVAL_FUEL,
) -> Trace:
    """Check and run a hole-free configuration declaration."""
    if decl.hole is not None:
        raise SillError(f"configuration {decl.name} has a hole; plug it first")
    check_config(list(decl.facts), decl.interface)
    system = SillSystem(eval_fuel=eval_fuel)
    return run(system, config_state(decl.facts), decl.interface,
               fuel=fuel, seed=seed, check=check)
