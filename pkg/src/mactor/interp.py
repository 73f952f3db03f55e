"""Small-step interpreter for MAC programs.

The machine state (:class:`Configuration`) mirrors the runtime structure of
the language: a heap of active-object records, one event queue per actor
group, a store of futures, and per group the call-stack thread of each
member object.  :func:`enabled_steps` enumerates every transition rule
instance whose premises hold in a configuration, :func:`step` applies one,
and :func:`run` drives the machine under a schedule policy.  Steps are pure:
they build a new configuration and never touch the old one, which is what
lets the explorer fan out over all interleavings.

Runtime errors in the interpreted program (calling a method on null, an
asynchronous call on a plain object, a non-boolean guard) do not raise in
the host; they produce a terminal configuration whose ``fault`` field holds
the diagnostic.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace as dc_replace
from typing import Callable, Iterable, Optional, Sequence

from .scheduler import (
    EMPTY_LOCKS,
    QueuedMessage,
    SyncEntry,
    lock_union,
    select as default_select,
    sync_set_of,
)
from .syntax import (
    Assign,
    AsyncCall,
    BinOp,
    BoolLit,
    BoolType,
    ClassDecl,
    Expr,
    GetStmt,
    If,
    IntLit,
    IntType,
    MethodDef,
    MethodSig,
    NewActor,
    NewObject,
    NullLit,
    Program,
    Resolved,
    Return,
    Stmt,
    SyncCall,
    This,
    Type,
    Var,
    While,
)


# --------------------------------------------------------------------------
# runtime values

@dataclass(frozen=True, slots=True)
class ObjRef:
    """Reference to an active object.  A group is identified by the
    reference of its first object, so actor references are ObjRefs too;
    whether a reference names a group is decided by the queue domain."""

    id: int

    def __repr__(self) -> str:
        return f"obj{self.id}"


@dataclass(frozen=True, slots=True)
class FutRef:
    id: int

    def __repr__(self) -> str:
        return f"fut{self.id}"


class _PendingType:
    __slots__ = ()

    def __repr__(self) -> str:
        return "<pending>"


PENDING = _PendingType()

# Values flowing through the machine: None, bool, int, ObjRef, FutRef.
Value = object


def default_value(t: Type) -> Value:
    if isinstance(t, BoolType):
        return False
    if isinstance(t, IntType):
        return 0
    return None


# Internal expression forms used only by the step rules, never produced by
# the parser and never printed.

@dataclass(frozen=True, slots=True)
class ValueLit(Expr):
    """Wraps an already-computed runtime value (synchronous return rewrite)."""

    value: Value


@dataclass(frozen=True, slots=True)
class Hole(Expr):
    """Placeholder right-hand side while a synchronous callee runs."""


# --------------------------------------------------------------------------
# machine state

@dataclass(frozen=True)
class Closure:
    env: dict  # var name -> Value; includes 'this' and, in message bodies, 'dest'
    stmts: tuple[Stmt, ...]


Thread = tuple  # of Closure; empty tuple means idle


@dataclass(frozen=True)
class ObjectState:
    cls: Optional[str]
    myactor: ObjRef
    ifaces: frozenset[str]
    locks: frozenset[SyncEntry]
    fields: dict  # field name -> Value


@dataclass(frozen=True, slots=True)
class StepLabel:
    """Identity of one enabled rule instance."""

    rule: str
    actor: ObjRef
    obj: ObjRef
    method: Optional[str] = None
    priority: Optional[int] = None


class StepNotEnabled(Exception):
    pass


class FuelExhausted(Exception):
    """Raised by run() when the step budget runs out with steps still enabled."""

    def __init__(self, config: "Configuration", trace: list[StepLabel]):
        super().__init__(f"fuel exhausted after {len(trace)} step(s)")
        self.config = config
        self.trace = trace


class _EvalFault(Exception):
    def __init__(self, diagnostic: str):
        super().__init__(diagnostic)
        self.diagnostic = diagnostic


class ProgramIndex:
    """Lookup tables derived once from a resolved program."""

    def __init__(self, program: Program):
        self.program = program
        self.interfaces = {i.name: i for i in program.interfaces}
        self.classes: dict[str, ClassDecl] = {c.name: c for c in program.classes}
        self.class_methods: dict[str, dict[str, MethodDef]] = {
            c.name: {m.sig.name: m for m in c.methods} for c in program.classes
        }
        self.class_ifaces: dict[str, frozenset[str]] = {
            c.name: frozenset(c.implements) for c in program.classes
        }
        # Signatures an object of a class supports, for the select filter.
        self.class_supported: dict[str, frozenset[MethodSig]] = {
            c.name: frozenset(
                sig for iname in c.implements for sig in self.interfaces[iname].signatures
            )
            for c in program.classes
        }

    def supported(self, cls: Optional[str]) -> frozenset[MethodSig]:
        if cls is None:
            return frozenset()
        return self.class_supported[cls]

    def event_signature(self, ifaces: frozenset[str], method: str, nargs: int) -> MethodSig:
        """Signature attached to an event sent to a group whose first object
        implements ``ifaces``.  Ambiguity across interfaces is a fault."""
        found = {
            sig
            for iname in ifaces
            for sig in self.interfaces[iname].signatures
            if sig.name == method and sig.arity == nargs
        }
        if not found:
            raise _EvalFault(f"actor does not accept '{method}' with {nargs} argument(s)")
        if len(found) > 1:
            raise _EvalFault(f"ambiguous signature for '{method}' across interfaces")
        return next(iter(found))


class Configuration:
    """One machine state.  Treat as immutable; steps build new ones."""

    __slots__ = (
        "program",
        "index",
        "heap",
        "queues",
        "futures",
        "actors",
        "next_obj",
        "next_fut",
        "next_priority",
        "fault",
        "_canon",
    )

    def __init__(
        self,
        program: Program,
        index: ProgramIndex,
        heap: dict,
        queues: dict,
        futures: dict,
        actors: dict,
        next_obj: int,
        next_fut: int,
        next_priority: int,
        fault: Optional[str] = None,
    ):
        self.program = program
        self.index = index
        self.heap = heap  # ObjRef -> ObjectState
        self.queues = queues  # ObjRef (group id) -> tuple[QueuedMessage, ...]
        self.futures = futures  # FutRef -> Value | PENDING
        self.actors = actors  # ObjRef (group id) -> {ObjRef: Thread}
        self.next_obj = next_obj
        self.next_fut = next_fut
        self.next_priority = next_priority
        self.fault = fault
        self._canon = None

    def evolve(self, **changes) -> "Configuration":
        kwargs = dict(
            program=self.program,
            index=self.index,
            heap=self.heap,
            queues=self.queues,
            futures=self.futures,
            actors=self.actors,
            next_obj=self.next_obj,
            next_fut=self.next_fut,
            next_priority=self.next_priority,
            fault=self.fault,
        )
        kwargs.update(changes)
        return Configuration(**kwargs)

    # Canonical form: nested tuples with dict entries sorted, usable as a
    # visited-set key during exploration and for equality in tests.
    def canonical(self):
        if self._canon is None:
            heap = tuple(
                (
                    o.id,
                    st.cls,
                    st.myactor.id,
                    st.ifaces,
                    st.locks,
                    tuple(sorted(st.fields.items())),
                )
                for o, st in sorted(self.heap.items(), key=lambda kv: kv[0].id)
            )
            queues = tuple(
                (a.id, q) for a, q in sorted(self.queues.items(), key=lambda kv: kv[0].id)
            )
            futures = tuple(
                (f.id, v if v is not PENDING else "<pending>")
                for f, v in sorted(self.futures.items(), key=lambda kv: kv[0].id)
            )
            actors = tuple(
                (
                    a.id,
                    tuple(
                        (o.id, tuple((tuple(sorted(c.env.items())), c.stmts) for c in thread))
                        for o, thread in sorted(group.items(), key=lambda kv: kv[0].id)
                    ),
                )
                for a, group in sorted(self.actors.items(), key=lambda kv: kv[0].id)
            )
            self._canon = (
                self.fault,
                heap,
                queues,
                futures,
                actors,
                self.next_obj,
                self.next_fut,
                self.next_priority,
            )
        return self._canon

    def __eq__(self, other) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash(self.canonical())

    # ---- inspection helpers

    def main_env(self) -> dict:
        """Environment of the main block's closure (anonymous object)."""
        anon = ObjRef(0)
        thread = self.actors[anon][anon]
        return dict(thread[0].env) if thread else {}

    def resolved_futures(self) -> dict:
        return {f: v for f, v in self.futures.items() if v is not PENDING}

    def group_locks(self, actor: ObjRef) -> frozenset[SyncEntry]:
        return lock_union(self.heap[o].locks for o in self.actors[actor])


ANONYMOUS = ObjRef(0)


def initial_config(program: Program) -> Configuration:
    """The starting state: one anonymous group holding the main process.

    The anonymous object has no class and no interfaces, and its group has
    no event queue, so it can never be sent or scheduled a message.  Objects
    created from main (and transitively from those) join this group.
    """
    index = ProgramIndex(program)
    env: dict = {"this": ANONYMOUS}
    for d in program.main_vars:
        env[d.name] = default_value(d.type)
    heap = {
        ANONYMOUS: ObjectState(
            cls=None, myactor=ANONYMOUS, ifaces=frozenset(), locks=EMPTY_LOCKS, fields={}
        )
    }
    actors = {ANONYMOUS: {ANONYMOUS: (Closure(env, program.main_body),)}}
    return Configuration(
        program=program,
        index=index,
        heap=heap,
        queues={},
        futures={},
        actors=actors,
        next_obj=1,
        next_fut=0,
        next_priority=0,
    )


# --------------------------------------------------------------------------
# expression evaluation

_INT_CMP = {"<", "<=", ">", ">="}


def _eval(config: Configuration, env: dict, e: Expr) -> Value:
    if isinstance(e, NullLit):
        return None
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, ValueLit):
        return e.value
    if isinstance(e, This):
        return env["this"]
    if isinstance(e, Var):
        if e.name in env:
            return env[e.name]
        this = env["this"]
        fields = config.heap[this].fields
        if e.name in fields:
            return fields[e.name]
        raise _EvalFault(f"unbound variable '{e.name}'")
    if isinstance(e, BinOp):
        left = _eval(config, env, e.left)
        right = _eval(config, env, e.right)
        op = e.op
        if op == "&&":
            if not isinstance(left, bool) or not isinstance(right, bool):
                raise _EvalFault("'&&' applied to non-boolean operands")
            return left and right
        if op == "==":
            return left == right
        if op == "!=":
            return left != right
        # arithmetic and ordering are integer-only; bool is not an Int here
        if isinstance(left, bool) or isinstance(right, bool) or not (
            isinstance(left, int) and isinstance(right, int)
        ):
            raise _EvalFault(f"'{op}' applied to non-integer operands")
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op in _INT_CMP:
            if op == "<":
                return left < right
            if op == "<=":
                return left <= right
            if op == ">":
                return left > right
            return left >= right
        raise _EvalFault(f"unknown operator '{op}'")
    if isinstance(e, Resolved):
        v = _eval(config, env, e.target)
        if not isinstance(v, FutRef):
            raise _EvalFault("'?' applied to a non-future value")
        return config.futures[v] is not PENDING
    raise _EvalFault(f"expression {type(e).__name__} cannot be evaluated in place")


def _eval_guard(config: Configuration, env: dict, e: Expr) -> bool:
    v = _eval(config, env, e)
    if not isinstance(v, bool):
        raise _EvalFault("guard did not evaluate to a boolean")
    return v


# --------------------------------------------------------------------------
# enabled-step enumeration

def enabled_steps(
    config: Configuration,
    select_fn: Callable = default_select,
) -> list[StepLabel]:
    """All rule instances whose premises hold, in deterministic order
    (group id, then object id).  A faulted configuration has none."""
    if config.fault is not None:
        return []
    labels: list[StepLabel] = []
    for actor in sorted(config.actors, key=lambda r: r.id):
        group = config.actors[actor]
        for obj in sorted(group, key=lambda r: r.id):
            thread = group[obj]
            if not thread:
                label = _sched_label(config, actor, obj, select_fn)
                if label is not None:
                    labels.append(label)
                continue
            top = thread[-1]
            if not top.stmts:
                continue  # the main closure after its last statement
            labels.extend(_stmt_labels(config, actor, obj, thread, top))
    return labels


def _sched_label(
    config: Configuration, actor: ObjRef, obj: ObjRef, select_fn: Callable
) -> Optional[StepLabel]:
    queue = config.queues.get(actor)
    if not queue:
        return None
    held = config.group_locks(actor)
    supported = config.index.supported(config.heap[obj].cls)
    msg = select_fn(supported, held, queue)
    if msg is None:
        return None
    return StepLabel("SCHED-MSG", actor, obj, msg.method, msg.priority)


def _stmt_labels(
    config: Configuration, actor: ObjRef, obj: ObjRef, thread: Thread, top: Closure
) -> Iterable[StepLabel]:
    s = top.stmts[0]
    if isinstance(s, Assign):
        rhs = s.value
        if isinstance(rhs, SyncCall):
            return [StepLabel("SYNC-CALL", actor, obj, rhs.method)]
        if isinstance(rhs, AsyncCall):
            return [StepLabel("ASYNC-CALL", actor, obj, rhs.method)]
        if isinstance(rhs, NewObject):
            return [StepLabel("NEW-ACTOB", actor, obj)]
        if isinstance(rhs, NewActor):
            return [StepLabel("NEW-ACTOR", actor, obj)]
        rule = "ASSIGN-LOCAL" if s.target in top.env else "ASSIGN-FIELD"
        return [StepLabel(rule, actor, obj)]
    if isinstance(s, GetStmt):
        try:
            v = _eval(config, top.env, s.value)
        except _EvalFault:
            return [StepLabel("READ-FUT", actor, obj)]  # step will fault
        if not isinstance(v, FutRef):
            return [StepLabel("READ-FUT", actor, obj)]  # step will fault
        if config.futures[v] is PENDING:
            return []  # blocked until the future resolves
        return [StepLabel("READ-FUT", actor, obj)]
    if isinstance(s, (If, While)):
        cond = s.cond
        try:
            value = _eval_guard(config, top.env, cond)
        except _EvalFault:
            return [StepLabel("COND-TRUE", actor, obj)]  # step will fault
        return [StepLabel("COND-TRUE" if value else "COND-FALSE", actor, obj)]
    if isinstance(s, Return):
        if len(thread) > 1:
            return [StepLabel("SYNC-RETURN", actor, obj)]
        return [StepLabel("ASYNC-RETURN", actor, obj)]
    raise TypeError(f"unhandled statement {s!r}")


# --------------------------------------------------------------------------
# the step function

def step(
    config: Configuration,
    label: StepLabel,
    select_fn: Callable = default_select,
) -> Configuration:
    """Apply one enabled rule instance; returns the successor configuration.

    A label that is not enabled raises StepNotEnabled.  Evaluation errors in
    the program surface as a faulted successor configuration.
    """
    if config.fault is not None:
        raise StepNotEnabled("configuration is faulted")
    group = config.actors.get(label.actor)
    if group is None or label.obj not in group:
        raise StepNotEnabled(f"no process for {label.obj} in {label.actor}")
    thread = group[label.obj]
    try:
        return _apply(config, label, thread, select_fn)
    except _EvalFault as fault:
        return config.evolve(fault=fault.diagnostic)


def _apply(
    config: Configuration, label: StepLabel, thread: Thread, select_fn: Callable
) -> Configuration:
    rule = label.rule
    if rule == "SCHED-MSG":
        return _sched_msg(config, label, thread, select_fn)
    if not thread or not thread[-1].stmts:
        raise StepNotEnabled(f"{label.rule}: object {label.obj} has nothing to run")
    top = thread[-1]
    s = top.stmts[0]

    if rule in ("ASSIGN-LOCAL", "ASSIGN-FIELD"):
        if not isinstance(s, Assign) or isinstance(
            s.value, (SyncCall, AsyncCall, NewObject, NewActor)
        ):
            raise StepNotEnabled("no plain assignment at the head")
        v = _eval(config, top.env, s.value)
        return _assign(config, label, thread, s.target, v, top.stmts[1:])

    if rule in ("COND-TRUE", "COND-FALSE"):
        if isinstance(s, If):
            taken = _eval_guard(config, top.env, s.cond)
            _require(rule == ("COND-TRUE" if taken else "COND-FALSE"), "guard value changed")
            branch = s.then if taken else s.orelse
            return _with_top(config, label, thread, top.env, branch + top.stmts[1:])
        if isinstance(s, While):
            taken = _eval_guard(config, top.env, s.cond)
            _require(rule == ("COND-TRUE" if taken else "COND-FALSE"), "guard value changed")
            rest = s.body + top.stmts if taken else top.stmts[1:]
            return _with_top(config, label, thread, top.env, rest)
        raise StepNotEnabled("no conditional at the head")

    if rule == "READ-FUT":
        _require(isinstance(s, GetStmt), "no get at the head")
        v = _eval(config, top.env, s.value)
        if not isinstance(v, FutRef):
            raise _EvalFault("'.get' applied to a non-future value")
        if config.futures[v] is PENDING:
            raise StepNotEnabled("future is unresolved")
        return _with_top(config, label, thread, top.env, top.stmts[1:])

    if rule == "SYNC-CALL":
        return _sync_call(config, label, thread, top, s)
    if rule == "SYNC-RETURN":
        return _sync_return(config, label, thread, top, s)
    if rule == "ASYNC-CALL":
        return _async_call(config, label, thread, top, s)
    if rule == "ASYNC-RETURN":
        return _async_return(config, label, thread, top, s)
    if rule == "NEW-ACTOB":
        return _new_actob(config, label, thread, top, s)
    if rule == "NEW-ACTOR":
        return _new_actor(config, label, thread, top, s)
    raise StepNotEnabled(f"unknown rule '{rule}'")


def _require(ok: bool, why: str) -> None:
    if not ok:
        raise StepNotEnabled(why)


# ---- rule bodies

def _with_thread(config: Configuration, actor: ObjRef, obj: ObjRef, thread: Thread, **more):
    actors = dict(config.actors)
    group = dict(actors[actor])
    group[obj] = thread
    actors[actor] = group
    return config.evolve(actors=actors, **more)


def _with_top(
    config: Configuration, label: StepLabel, thread: Thread, env: dict, stmts: tuple, **more
) -> Configuration:
    new_thread = thread[:-1] + (Closure(env, stmts),)
    return _with_thread(config, label.actor, label.obj, new_thread, **more)


def _assign(
    config: Configuration,
    label: StepLabel,
    thread: Thread,
    target: str,
    value: Value,
    rest: tuple,
    **more,
) -> Configuration:
    """Write ``target`` either in the local environment or, failing that, in
    the fields of the closure's own object, then drop the statement."""
    top = thread[-1]
    if target in top.env:
        env = dict(top.env)
        env[target] = value
        return _with_top(config, label, thread, env, rest, **more)
    this = top.env["this"]
    state = config.heap[this]
    if target not in state.fields:
        raise _EvalFault(f"assignment to unknown field '{target}'")
    fields = dict(state.fields)
    fields[target] = value
    heap = dict(config.heap)
    heap[this] = dc_replace(state, fields=fields)
    out = _with_top(config, label, thread, top.env, rest, **more)
    return out.evolve(heap=heap)


def _sync_call(config, label, thread, top, s) -> Configuration:
    _require(isinstance(s, Assign) and isinstance(s.value, SyncCall), "no sync call at the head")
    call: SyncCall = s.value
    callee = _eval(config, top.env, call.target)
    if callee is None:
        raise _EvalFault(f"synchronous call to '{call.method}' on null")
    if not isinstance(callee, ObjRef):
        raise _EvalFault(f"synchronous call target is not an object")
    caller_actor = config.heap[top.env["this"]].myactor
    if config.heap[callee].myactor != caller_actor:
        raise _EvalFault(
            f"synchronous call to '{call.method}' crosses an actor boundary"
        )
    cls = config.heap[callee].cls
    mdef = config.index.class_methods.get(cls, {}).get(call.method) if cls else None
    if mdef is None:
        raise _EvalFault(f"object has no method '{call.method}'")
    if len(call.args) != mdef.sig.arity:
        raise _EvalFault(f"'{call.method}' expects {mdef.sig.arity} argument(s)")
    args = [_eval(config, top.env, a) for a in call.args]
    callee_env: dict = {"this": callee}
    for p, v in zip(mdef.sig.params, args):
        callee_env[p.name] = v
    for d in mdef.locals:
        callee_env[d.name] = default_value(d.type)
    waiting = Closure(top.env, (Assign(s.target, Hole()),) + top.stmts[1:])
    new_thread = thread[:-1] + (waiting, Closure(callee_env, mdef.body))
    return _with_thread(config, label.actor, label.obj, new_thread)


def _sync_return(config, label, thread, top, s) -> Configuration:
    _require(isinstance(s, Return), "no return at the head")
    _require(len(thread) >= 2, "synchronous return needs a caller below")
    below = thread[-2]
    head = below.stmts[0] if below.stmts else None
    _require(
        isinstance(head, Assign) and isinstance(head.value, Hole),
        "caller is not waiting on a synchronous call",
    )
    v = _eval(config, top.env, s.value)
    resumed = Closure(below.env, (Assign(head.target, ValueLit(v)),) + below.stmts[1:])
    new_thread = thread[:-2] + (resumed,)
    return _with_thread(config, label.actor, label.obj, new_thread)


def _async_call(config, label, thread, top, s) -> Configuration:
    _require(isinstance(s, Assign) and isinstance(s.value, AsyncCall), "no async call at the head")
    call: AsyncCall = s.value
    target = _eval(config, top.env, call.target)
    if target is None:
        raise _EvalFault(f"asynchronous call to '{call.method}' on null")
    if not isinstance(target, ObjRef) or target not in config.queues:
        raise _EvalFault(f"asynchronous call target is not an actor")
    args = tuple(_eval(config, top.env, a) for a in call.args)
    sig = config.index.event_signature(config.heap[target].ifaces, call.method, len(args))
    fut = FutRef(config.next_fut)
    msg = QueuedMessage(
        method=call.method,
        args=args,
        future=fut,
        sync=sync_set_of(sig.param_labels, args),
        signature=sig,
        priority=config.next_priority,
    )
    futures = dict(config.futures)
    futures[fut] = PENDING
    queues = dict(config.queues)
    queues[target] = queues[target] + (msg,)
    return _assign(
        config.evolve(
            futures=futures,
            queues=queues,
            next_fut=config.next_fut + 1,
            next_priority=config.next_priority + 1,
        ),
        label,
        thread,
        s.target,
        fut,
        top.stmts[1:],
    )


def _async_return(config, label, thread, top, s) -> Configuration:
    _require(isinstance(s, Return), "no return at the head")
    _require(len(thread) == 1, "asynchronous return happens at the bottom of the stack")
    dest = top.env.get("dest")
    _require(isinstance(dest, FutRef), "no destination future in scope")
    v = _eval(config, top.env, s.value)
    assert config.futures[dest] is PENDING, "future written twice"
    futures = dict(config.futures)
    futures[dest] = v
    obj = label.obj
    heap = dict(config.heap)
    heap[obj] = dc_replace(heap[obj], locks=EMPTY_LOCKS)
    return _with_thread(config, label.actor, obj, (), futures=futures, heap=heap)


def _new_actob(config, label, thread, top, s) -> Configuration:
    _require(isinstance(s, Assign) and isinstance(s.value, NewObject), "no new at the head")
    new: NewObject = s.value
    cls = config.index.classes.get(new.class_name)
    if cls is None:
        raise _EvalFault(f"unknown class '{new.class_name}'")
    if len(new.args) != len(cls.params):
        raise _EvalFault(f"constructor of '{new.class_name}' arity mismatch")
    args = [_eval(config, top.env, a) for a in new.args]
    owner = config.heap[top.env["this"]].myactor
    obj = ObjRef(config.next_obj)
    state = _init_object(config.index, cls, args, owner)
    heap = dict(config.heap)
    heap[obj] = state
    actors = dict(config.actors)
    group = dict(actors[owner])
    group[obj] = ()
    actors[owner] = group
    out = _assign(
        config.evolve(heap=heap, actors=actors, next_obj=config.next_obj + 1),
        label,
        thread,
        s.target,
        obj,
        top.stmts[1:],
    )
    return out


def _new_actor(config, label, thread, top, s) -> Configuration:
    _require(isinstance(s, Assign) and isinstance(s.value, NewActor), "no new actor at the head")
    new: NewActor = s.value
    cls = config.index.classes.get(new.class_name)
    if cls is None:
        raise _EvalFault(f"unknown class '{new.class_name}'")
    if len(new.args) != len(cls.params):
        raise _EvalFault(f"constructor of '{new.class_name}' arity mismatch")
    args = [_eval(config, top.env, a) for a in new.args]
    group_id = ObjRef(config.next_obj)
    # The creation event is consumed on the spot: the fresh group starts with
    # its first object initialized, idle, and an empty queue.
    state = _init_object(config.index, cls, args, group_id)
    heap = dict(config.heap)
    heap[group_id] = state
    queues = dict(config.queues)
    queues[group_id] = ()
    actors = dict(config.actors)
    actors[group_id] = {group_id: ()}
    return _assign(
        config.evolve(heap=heap, queues=queues, actors=actors, next_obj=config.next_obj + 1),
        label,
        thread,
        s.target,
        group_id,
        top.stmts[1:],
    )


def _init_object(index: ProgramIndex, cls: ClassDecl, args: Sequence, owner: ObjRef) -> ObjectState:
    fields: dict = {}
    for d, v in zip(cls.params, args):
        fields[d.name] = v
    for d in cls.attributes:
        fields[d.name] = default_value(d.type)
    return ObjectState(
        cls=cls.name,
        myactor=owner,
        ifaces=index.class_ifaces[cls.name],
        locks=EMPTY_LOCKS,
        fields=fields,
    )


def _sched_msg(config, label, thread, select_fn) -> Configuration:
    _require(not thread, "object is not idle")
    actor, obj = label.actor, label.obj
    queue = config.queues.get(actor)
    _require(bool(queue), "queue is empty")
    held = config.group_locks(actor)
    supported = config.index.supported(config.heap[obj].cls)
    msg = select_fn(supported, held, queue)
    _require(msg is not None and msg.priority == label.priority, "message is not selectable")
    queues = dict(config.queues)
    queues[actor] = tuple(m for m in queue if m.priority != msg.priority)
    mdef = config.index.class_methods[config.heap[obj].cls][msg.method]
    env: dict = {"this": obj, "dest": msg.future}
    for p, v in zip(mdef.sig.params, msg.args):
        env[p.name] = v
    for d in mdef.locals:
        env[d.name] = default_value(d.type)
    heap = dict(config.heap)
    heap[obj] = dc_replace(heap[obj], locks=msg.sync)
    return _with_thread(
        config, actor, obj, (Closure(env, mdef.body),), queues=queues, heap=heap
    )


# --------------------------------------------------------------------------
# driving

Policy = object  # "fifo" | "random" | sequence of StepLabel | callable


def run(
    config: Configuration,
    policy: Policy = "fifo",
    *,
    seed: Optional[int] = None,
    fuel: int = 100_000,
    select_fn: Callable = default_select,
) -> tuple[Configuration, list[StepLabel]]:
    """Repeatedly apply an enabled step chosen by ``policy``.

    Policies: "fifo" picks the first label in deterministic order (lowest
    group id, lowest object id), "random" draws uniformly from the enabled
    set using ``seed``, a sequence of labels replays a script (stopping when
    the script ends), and a callable receives (labels, config) and returns
    one of the labels.  Stops at quiescence (no enabled steps, including
    fault states); if the fuel budget runs out first, raises FuelExhausted
    carrying the partial trace.
    """
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    rng = random.Random(seed)
    script = iter(policy) if isinstance(policy, (list, tuple)) else None
    trace: list[StepLabel] = []
    current = config
    for _ in range(fuel):
        labels = enabled_steps(current, select_fn)
        if not labels:
            return current, trace
        if script is not None:
            try:
                wanted = next(script)
            except StopIteration:
                return current, trace
            if wanted not in labels:
                raise StepNotEnabled(f"scripted label {wanted} is not enabled")
            chosen = wanted
        elif policy == "fifo":
            chosen = labels[0]
        elif policy == "random":
            chosen = rng.choice(labels)
        elif callable(policy):
            chosen = policy(labels, current)
        else:
            raise ValueError(f"unknown policy {policy!r}")
        current = step(current, chosen, select_fn)
        trace.append(chosen)
    if enabled_steps(current, select_fn):
        raise FuelExhausted(current, trace)
    return current, trace
