"""Barbs, barbed similarity, and bounded observational equivalence checking.

Two configurations are compared by subjecting both to experiments
(configuration contexts plus a choice of observed channels) and comparing
the observed communications.  Universal quantification over contexts is
replaced by a user-supplied context suite plus generated experiment
families at bounded depth, so every verdict here is bounded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .dynamics import SillSystem, classify_fact, config_state, run, state_facts
from .fairness import fair_execute
from .lang import ast
from .lang.check import check_config
from .lang.errors import InterfaceMismatch, SillError
from .msr.multiset import Multiset
from .msr.rules import Signature, apply_inst
from .obs import (
    BOT,
    Bot,
    CloseMsg,
    CommTree,
    Label,
    Pair,
    Shift,
    Unfold,
    Val,
    ValueRelation,
    check_comm,
    comm_eq,
    observe,
    observe_config,
    syntactic,
    tree_to_str,
    universal,
)


class UnknownChannel(SillError):
    pass


class IllTypedObservation(SillError):
    pass


Subject = tuple[Multiset, ast.Interface]

# answer protocols for generated experiments: a single yes label, after
# which nothing more can be said
Y_POS = ast.Plus((("y", ast.Plus(())),))
Y_NEG = ast.With((("y", ast.With(())),))

ORACLE_REPLY = ast.Up(ast.Plus((("tt", ast.One()), ("ff", ast.One()))))


def _fc_state(state: Multiset) -> set[str]:
    out: set[str] = set()
    for cf in state_facts(state):
        out.add(cf.chan)
        out |= ast.fc(cf.proc)
    return out


# -- barbs -------------------------------------------------------------------------


def barb(state: Multiset, a: str, system: Optional[SillSystem] = None) -> bool:
    """Can an observable action on a occur after at most one step?

    Holds exactly when the state, or one of its single-step successors,
    contains a message whose carrier is a.
    """
    if a not in _fc_state(state):
        raise UnknownChannel(a)
    sys = system or SillSystem()

    def carried(st: Multiset) -> bool:
        for f in st.eph_support():
            pred, _, _, info = classify_fact(f)
            if pred == "msg" and info is not None and info.carrier == a:
                return True
        return False

    if carried(state):
        return True
    sig = Signature(frozenset(state.consts()) | sys.signature().declared, 0)
    for inst in sys.applicable(state):
        nxt, _, _ = apply_inst(state, inst, sig)
        if carried(nxt):
            return True
    return False


def weak_barb(
    state: Multiset,
    a: str,
    fuel: int = 500,
    seed: Optional[int] = None,
    system: Optional[SillSystem] = None,
) -> bool:
    """Does some state within a fair run of length <= fuel satisfy the barb?"""
    if a not in _fc_state(state):
        raise UnknownChannel(a)
    sys = system or SillSystem()
    tr = fair_execute(sys, state, budget=fuel, seed=seed)
    for st in tr.states:
        for f in st.eph_support():
            pred, _, _, info = classify_fact(f)
            if pred == "msg" and info is not None and info.carrier == a:
                return True
    return barb(tr.final(), a, sys)


def barbed_sim(
    c: Subject,
    d: Subject,
    fuel: int = 500,
    seed: Optional[int] = None,
) -> bool:
    """Per channel of the shared interface, a weak barb of c implies one of d."""
    cs, ci = c
    ds, di = d
    _require_shared(ci, di)
    for x in sorted([n for n, _ in ci.used] + [n for n, _ in ci.provided]):
        if weak_barb(cs, x, fuel, seed) and not weak_barb(ds, x, fuel, seed):
            return False
    return True


# -- prelude processes -------------------------------------------------------------


def divergent(chan: str, a: ast.SessionType,
              used: tuple[tuple[str, ast.SessionType], ...] = ()) -> ast.Process:
    """A process at chan : a that steps forever without communicating.

    It holds the channels in used without ever touching them.
    """
    names = tuple(n for n, _ in used)
    k = 0
    while f"z{k}" in names or f"z{k}" == chan:
        k += 1
    inner = f"z{k}"
    q = ast.Quote((inner, a), ast.Unquote(inner, ast.FVar("w"), names), used)
    return ast.Unquote(chan, ast.Fix("w", q), names)


def universal_oracle(chan: str, vtype: ast.FuncType) -> ast.Process:
    """Oracle relating any received value to the expected one: always answers tt."""
    return ast.RecvVal("w", chan,
                       ast.RecvShift(chan, ast.SendLabel(chan, "tt",
                                                         ast.Close(chan))))


def oracle_type(vtype: ast.FuncType) -> ast.SessionType:
    return ast.ImpVal(vtype, ORACLE_REPLY)


# -- generated experiment families ---------------------------------------------------

OracleFactory = Callable[[str, ast.FuncType], ast.Process]


def _gen(n: int, i: str, a: ast.SessionType, v: CommTree, r: str,
         ytype: ast.SessionType, speaks_when: str, provides: Optional[str],
         extra: tuple[tuple[str, ast.SessionType], ...],
         fresh: Callable[[], str],
         oracle: OracleFactory) -> list[ast.Process]:
    hold = extra + ((i, a),)
    y_after = ytype.branch("y")

    def spin(answer_residual, held):
        """Terminal loop at whichever channel the experiment provides."""
        if provides is None:
            return divergent(r, answer_residual, held)
        now = [t for name, t in held if name == provides]
        rest = tuple(p for p in held if p[0] != provides)
        return divergent(provides, now[0], rest + ((r, answer_residual),))

    def yes(held):
        return ast.SendLabel(r, "y", spin(y_after, held))

    def no(held):
        return spin(ytype, held)

    if isinstance(v, Bot):
        return [yes(hold)]
    if ast.polarity(a) != speaks_when:
        # the examined side only receives here, so nothing is ever seen
        return [no(hold)]

    if isinstance(v, CloseMsg):
        return [ast.Wait(i, yes(extra))]

    if isinstance(v, Label):
        def branches(k_body):
            out = []
            for l, t in a.branches:
                if l == v.label:
                    out.append((l, k_body))
                else:
                    out.append((l, no(extra + ((i, t),))))
            return tuple(out)

        cont_t = a.branch(v.label)
        if n == 0:
            return [ast.Case(i, branches(yes(extra + ((i, cont_t),))))]
        return [ast.Case(i, branches(e))
                for e in _gen(n - 1, i, cont_t, v.rest, r, ytype, speaks_when,
                              provides, extra, fresh, oracle)]

    if isinstance(v, Unfold):
        t = ast.unfold_rec(a)
        if n == 0:
            return [ast.RecvUnfold(i, yes(extra + ((i, t),)))]
        return [ast.RecvUnfold(i, e)
                for e in _gen(n - 1, i, t, v.rest, r, ytype, speaks_when,
                              provides, extra, fresh, oracle)]

    if isinstance(v, Shift):
        if n == 0:
            return [ast.RecvShift(i, yes(extra + ((i, a.body),)))]
        return [ast.RecvShift(i, e)
                for e in _gen(n - 1, i, a.body, v.rest, r, ytype, speaks_when,
                              provides, extra, fresh, oracle)]

    if isinstance(v, Pair):
        x = fresh()
        if n == 0:
            return [ast.RecvChan(x, i,
                                 yes(extra + ((x, a.left), (i, a.right))))]
        drop = [ast.RecvChan(x, i, e)
                for e in _gen(n - 1, i, a.right, v.rest, r, ytype, speaks_when,
                              provides, extra + ((x, a.left),), fresh, oracle)]
        # the received channel is on the experiment's used side either way,
        # so its provider speaks at positive types
        take = [ast.RecvChan(x, i, e)
                for e in _gen(n - 1, x, a.left, v.payload, r, ytype,
                              ast.POSITIVE, provides,
                              extra + ((i, a.right),), fresh, oracle)]
        return drop + take

    if isinstance(v, Val):
        c = fresh()
        otype = oracle_type(a.vtype)

        def wrap(tail):
            inner = ast.Case(c, (
                ("tt", ast.Wait(c, tail)),
                ("ff", no(extra + ((c, ast.One()), (i, a.body)))),
            ))
            client = ast.RecvVal("x", i,
                                 ast.SendVal(c, ast.FVar("x"),
                                             ast.SendShift(c, inner)))
            return ast.Cut(c, otype, oracle(c, a.vtype), client)

        if n == 0:
            return [wrap(yes(extra + ((i, a.body),)))]
        return [wrap(e)
                for e in _gen(n - 1, i, a.body, v.rest, r, ytype, speaks_when,
                              provides, extra, fresh, oracle)]

    raise TypeError(f"not a communication tree: {v!r}")


def _fresh_namer(avoid: set[str]) -> Callable[[], str]:
    seen = set(avoid)
    counter = [0]

    def fresh() -> str:
        while f"x{counter[0]}" in seen:
            counter[0] += 1
        name = f"x{counter[0]}"
        seen.add(name)
        return name

    return fresh


def gen_experiments_R(n: int, i: str, r: str, v: CommTree, a: ast.SessionType,
                      oracle: OracleFactory = universal_oracle,
                      ) -> list[ast.Process]:
    """Experiments that use i : a, report on the provided channel r, and
    answer (y, bot) exactly when the communication sent on i extends the
    depth n+1 cut of v."""
    try:
        check_comm(v, a)
    except SillError as ex:
        raise IllTypedObservation(str(ex)) from ex
    fresh = _fresh_namer({i, r})
    return _gen(n, i, a, v, r, Y_POS, ast.POSITIVE, None, (), fresh, oracle)


def gen_experiments_L(n: int, i: str, r: str, v: CommTree, a: ast.SessionType,
                      oracle: OracleFactory = universal_oracle,
                      ) -> list[ast.Process]:
    """The mirror family: experiments that provide i : a and report on the
    used channel r.  The processes are the same constructs as in the
    provided-side family; only the extrinsic typing differs."""
    try:
        check_comm(v, a)
    except SillError as ex:
        raise IllTypedObservation(str(ex)) from ex
    fresh = _fresh_namer({i, r})
    return _gen(n, i, a, v, r, Y_NEG, ast.NEGATIVE, i, (), fresh, oracle)


# -- experiments -------------------------------------------------------------------


def config_subject(decl: ast.ConfigDecl) -> Subject:
    """Typecheck a hole-free configuration and package it for experiments."""
    if decl.hole is not None:
        raise SillError(f"configuration {decl.name} has a hole")
    check_config(list(decl.facts), decl.interface)
    return config_state(decl.facts), decl.interface


@dataclass(frozen=True)
class ConfigContext:
    """A configuration with a single hole.

    outer.internal must list the context's own channels; the hole interface
    names the channels the plugged configuration must use and provide.
    """

    facts: tuple[ast.ConfigFact, ...]
    hole: ast.Interface
    outer: ast.Interface
    name: str = field(default="", compare=False)

    @classmethod
    def from_decl(cls, decl: ast.ConfigDecl) -> "ConfigContext":
        if decl.hole is None:
            raise SillError(f"configuration {decl.name} has no hole")
        return cls(decl.facts, decl.hole, decl.interface, name=decl.name)


@dataclass(frozen=True)
class Experiment:
    context: ConfigContext
    observed: Optional[tuple[str, ...]] = None


@dataclass(frozen=True)
class ObservationSystem:
    mode: str  # external | internal | total
    rel: ValueRelation
    experiments: tuple[Experiment, ...] = ()


def make_system(mode: str, experiments: Iterable[Experiment] = (),
                rel: Optional[ValueRelation] = None) -> ObservationSystem:
    if mode not in ("external", "internal", "total"):
        raise ValueError(f"unknown mode {mode!r}")
    if rel is None:
        rel = syntactic if mode == "total" else universal
    return ObservationSystem(mode, rel, tuple(experiments))


def empty_context(interface: ast.Interface) -> ConfigContext:
    hole = ast.Interface(used=interface.used, provided=interface.provided)
    return ConfigContext((), hole, hole, name="hole")


def mode_channels(context: ConfigContext, mode: str) -> tuple[str, ...]:
    outer = context.outer
    ext = [n for n, _ in outer.used] + [n for n, _ in outer.provided]
    internal = [n for n, _ in context.hole.used] + \
               [n for n, _ in context.hole.provided]
    if mode == "external":
        chans = ext
    elif mode == "internal":
        chans = internal
    else:
        chans = ext + [n for n, _ in outer.internal] + internal
    return tuple(sorted(set(chans)))


def _require_shared(ci: ast.Interface, di: ast.Interface) -> None:
    for side in ("used", "provided"):
        left = dict(getattr(ci, side))
        right = dict(getattr(di, side))
        if left.keys() != right.keys() or not all(
                ast.type_eq(left[k], right[k]) for k in left):
            raise InterfaceMismatch(f"{side} channels differ")


def _rename_internals(subject: Subject, avoid: set[str]) -> tuple[list, list]:
    """Fresh names for every non-interface channel of the subject."""
    state, iface = subject
    keep = {n for n, _ in iface.used} | {n for n, _ in iface.provided}
    facts = state_facts(state)
    internal = sorted({n for cf in facts
                       for n in ast.fc(cf.proc) | {cf.chan}} - keep)
    taken = set(avoid) | keep | set(internal)
    rho = {}
    for name in internal:
        if name not in avoid:
            rho[name] = name
            continue
        k = 0
        while f"{name}%{k}" in taken:
            k += 1
        rho[name] = f"{name}%{k}"
        taken.add(rho[name])
    out = [type(cf)(rho.get(cf.chan, cf.chan), ast.subst_chan(cf.proc, rho))
           for cf in facts]
    itypes = dict(iface.internal)
    pairs = [(rho[n], itypes[n]) for n in internal if n in itypes]
    missing = [n for n in internal if n not in itypes]
    if missing:
        raise SillError(f"no recorded types for internal channels {missing}")
    return out, pairs


def plug(context: ConfigContext, subject: Subject) -> Subject:
    """Fill the context's hole, renaming subject internals apart."""
    _require_shared(context.hole, subject[1])
    ctx_names = {n for cf in context.facts
                 for n in ast.fc(cf.proc) | {cf.chan}}
    ctx_names |= {n for n, _ in context.outer.used}
    ctx_names |= {n for n, _ in context.outer.provided}
    ctx_names |= {n for n, _ in context.outer.internal}
    subject_facts, internal_pairs = _rename_internals(subject, ctx_names)
    facts = tuple(context.facts) + tuple(subject_facts)
    # hole channels not exposed by the outer interface become internal;
    # channels the context already lists are not repeated
    ext = {n for n, _ in context.outer.used}
    ext |= {n for n, _ in context.outer.provided}
    hole_pairs = tuple(context.hole.used) + tuple(context.hole.provided)
    seen: dict[str, ast.SessionType] = {}
    internal = []
    for n, t in tuple(context.outer.internal) + hole_pairs \
            + tuple(internal_pairs):
        if n in ext:
            continue
        if n in seen:
            if not ast.type_eq(seen[n], t):
                raise InterfaceMismatch(f"channel {n} typed two ways")
            continue
        seen[n] = t
        internal.append((n, t))
    iface = ast.Interface(
        used=context.outer.used,
        internal=tuple(internal),
        provided=context.outer.provided,
    )
    check_config(list(facts), iface)
    return config_state(facts), iface


def run_experiment(subject: Subject, experiment: Experiment,
                   mode: str = "external", fuel: int = 500, depth: int = 8,
                   seed: Optional[int] = None,
                   system: Optional[SillSystem] = None):
    """Plug the subject in, run fairly, observe per the mode."""
    state, iface = plug(experiment.context, subject)
    chans = experiment.observed or mode_channels(experiment.context, mode)
    return observe_config(state, iface, channels=chans, fuel=fuel,
                          depth=depth, seed=seed, system=system)


# -- bounded equivalence checking ----------------------------------------------------


def _observe_alone(subject: Subject, fuel, depth, seed, system):
    state, iface = subject
    tr = run(system or SillSystem(), state, iface, fuel=fuel, seed=seed)
    rows = {}
    for c, t in list(iface.used) + list(iface.provided):
        rows[c] = (observe(tr, c, depth)[0], t)
    return rows


def _answer_name(base: str, taken: set[str]) -> str:
    k = 0
    while f"{base}_ans{k if k else ''}" in taken:
        k += 1
    return f"{base}_ans{k if k else ''}"


def _check_family(ref: dict, target: Subject, n: int, fuel: int,
                  seed, system) -> Optional[dict]:
    """Generated experiments from reference observations, run against target.

    Tests that the target's communications extend the reference ones, cut
    at depth n+1.  Returns a counterexample record, or None if every
    experiment answers yes.  Experiments never send on subject channels,
    so each interface channel is tested by its own composite rather than
    by one combined context.
    """
    t_state, t_iface = target
    names = set(ref) | _fc_state(t_state)
    used = dict(t_iface.used)
    for chan in sorted(ref):
        v, a = ref[chan]
        r = _answer_name(chan, names)
        if chan in used:
            family = gen_experiments_L(n, chan, r, v, a)
        else:
            family = gen_experiments_R(n, chan, r, v, a)
        for proc in family:
            key = chan if chan in used else r
            facts = (ast.ProcF(key, proc),)
            state, iface = plug_experiment(facts, target, chan, r)
            tr = run(system or SillSystem(), state, iface, fuel=fuel,
                     seed=seed)
            got = observe(tr, r, 2)[0]
            if got != Label("y", BOT):
                return {
                    "kind": "generated",
                    "depth": n,
                    "channel": chan,
                    "experiment": ast.proc_to_str(proc),
                    "answer": tree_to_str(got),
                }
    return None


def plug_experiment(exp_facts: tuple[ast.ConfigFact, ...], subject: Subject,
                    chan: str, r: str) -> Subject:
    """Compose a generated experiment with its subject.

    The tested channel moves inside; the answer channel r joins the
    interface on the experiment's side.
    """
    state, iface = subject
    avoid = {n for cf in exp_facts for n in ast.fc(cf.proc) | {cf.chan}}
    avoid |= {r}
    subject_facts, internal_pairs = _rename_internals(subject, avoid)
    facts = tuple(exp_facts) + tuple(subject_facts)
    used = dict(iface.used)
    if chan in used:
        new_used = tuple((c, t) for c, t in iface.used if c != chan) \
                   + ((r, Y_NEG),)
        new_prov = iface.provided
        internal = ((chan, used[chan]),)
    else:
        prov = dict(iface.provided)
        new_used = iface.used
        new_prov = tuple((c, t) for c, t in iface.provided if c != chan) \
                   + ((r, Y_POS),)
        internal = ((chan, prov[chan]),)
    out = ast.Interface(used=new_used,
                        internal=internal + tuple(internal_pairs),
                        provided=new_prov)
    check_config(list(facts), out)
    return config_state(facts), out


def equiv_check(c: Subject, d: Subject, sys: ObservationSystem,
                fuel: int = 500, depth: int = 8, seed: Optional[int] = None,
                system: Optional[SillSystem] = None) -> dict:
    """Bounded equivalence verdict over the system's experiments plus the
    generated families at increasing depth.

    The verdict is a dict with mode, bounded (always true), equivalent, and
    a counterexample when one was found.
    """
    _require_shared(c[1], d[1])
    verdict = {"mode": sys.mode, "bounded": True, "equivalent": True}

    suite = [Experiment(empty_context(c[1]))] + list(sys.experiments)
    for idx, e in enumerate(suite):
        obs_c = run_experiment(c, e, sys.mode, fuel, depth, seed, system)
        obs_d = run_experiment(d, e, sys.mode, fuel, depth, seed, system)
        for (name, tc, _), (_, td, _) in zip(obs_c.channels, obs_d.channels):
            if not comm_eq(tc, td, sys.rel):
                verdict["equivalent"] = False
                verdict["counterexample"] = {
                    "kind": "context",
                    "context": e.context.name or f"#{idx}",
                    "channel": name,
                    "left": tree_to_str(tc),
                    "right": tree_to_str(td),
                }
                return verdict

    ref_c = _observe_alone(c, fuel, depth, seed, system)
    ref_d = _observe_alone(d, fuel, depth, seed, system)
    for n in range(depth):
        for ref, tgt, tag in ((ref_c, d, "left-right"),
                              (ref_d, c, "right-left")):
            bad = _check_family(ref, tgt, n, fuel, seed, system)
            if bad is not None:
                bad["direction"] = tag
                verdict["equivalent"] = False
                verdict["counterexample"] = bad
                return verdict
    return verdict
