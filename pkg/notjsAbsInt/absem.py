"""Abstract machine semantics for notJS.

Abstract states mirror the concrete machine, with three differences: values
are ``BValue`` lattice elements, the transition relation returns every
applicable successor, and the continuation is cut at call boundaries into a
continuation address (``AddrK``) whose store entry holds the set of return
frames. Inside a method the frame spine is direct, so two states at the same
program point and context share the same spine and can be joined.
"""

import math
from dataclasses import dataclass, replace
from typing import FrozenSet, List, Optional, Tuple, Union

from .builtin_objects import (ARRAY_PROTO, CLASS_NAMES, FUNCTION_PROTO, GLOBAL, OBJECT_PROTO,
                              WRAPPER_TAGS)
from .concrete import builtin, global_cell, initial_store
from .domains import (BOOL_BOT, BOOL_FALSE, BOOL_TOP, BV_BOT, EMPTY_ENV, EMPTY_MAP, NULL_BV,
                      NUM_BOT, NUM_TOP, STR_BOT, STR_SNUM, STR_TOP, UNDEF_BV, AbsAddr, AbsEnv,
                      AbsNum, AbsObject, AbsStore, AbsStr, BValue, FrozenMap, alpha_obj, bv_addr,
                      bv_bool, bv_num, bv_str, env_join, env_leq, map_join, map_leq, num_join,
                      num_lift1, num_lift2, obj_delete, obj_enumerate, obj_lookup, obj_update,
                      str_concat, str_join, to_bool, to_num, to_str)
from .ir import (GLOBAL_VAR, AssignProp, AssignVar, BinOp, BoolLit, Break, Call, Decl,
                 DeleteProp, Exp, ForIn, If, Label, Meth, MethLit, NewCall, NewFun, NullLit,
                 NumLit, Seq, StrLit, Throw, ToObj, TryCatchFin, UndefLit, UnOp, Var, While,
                 index_nodes)
from .sensitivity import (HALT_FRAME, MAX_SIG_ARGS, CallEvent, ReturnEvent, StepTo, Trace,
                          exit_frame, parse_sensitivity, statement_point, value_point)
from .utils import (NULL, UNDEF, js_add, js_bitand, js_bitnot, js_bitor, js_bitxor, js_div,
                    js_less, js_less_eq, js_mod, js_mul, js_sar, js_shl, js_shr, js_sub,
                    loose_equals, strict_equals, to_uint32, utf16_less, utf16_less_eq)

# Arrays built by natives keep exact element properties up to this length
MAX_EXACT_LENGTH = 64


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BV:
    value: BValue


@dataclass(frozen=True)
class EV:
    value: BValue


@dataclass(frozen=True)
class JV:
    label: str
    value: BValue


AValue = Union[BV, EV, JV]


def value_join(a: AValue, b: AValue) -> AValue:
    assert type(a) is type(b) and getattr(a, "label", None) == getattr(b, "label", None), \
        f"cannot join {a!r} with {b!r}"
    return replace(a, value=a.value.join(b.value))


@dataclass(frozen=True)
class Pending:
    """Completions waiting for a finally block: a value, an exception and jumps by label."""

    bv: BValue = BV_BOT
    ev: BValue = BV_BOT
    jv: FrozenMap = EMPTY_MAP

    @classmethod
    def of(cls, v: AValue) -> "Pending":
        if isinstance(v, BV):
            return cls(bv=v.value)
        if isinstance(v, EV):
            return cls(ev=v.value)
        return cls(jv=FrozenMap({v.label: v.value}))

    def values(self) -> List[AValue]:
        out: List[AValue] = []
        if not self.bv.is_bot():
            out.append(BV(self.bv))
        if not self.ev.is_bot():
            out.append(EV(self.ev))
        out.extend(JV(label, v) for label, v in sorted(self.jv.items()))
        return out

    def join(self, other: "Pending") -> "Pending":
        return Pending(self.bv.join(other.bv), self.ev.join(other.ev),
                       map_join(self.jv, other.jv, BValue.join))

    def leq(self, other: "Pending") -> bool:
        return (self.bv.leq(other.bv) and self.ev.leq(other.ev)
                and map_leq(self.jv, other.jv, BValue.leq))


# ---------------------------------------------------------------------------
# Continuations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HaltK:
    def point(self):
        return HALT_FRAME


HALT = HaltK()


@dataclass(frozen=True)
class AddrK:
    addr: AbsAddr

    def point(self):
        return exit_frame(self.addr.site)


@dataclass(frozen=True)
class SeqK:
    node: Seq
    index: int
    next: "AKont"

    def point(self):
        return ("seq", self.node.nid, self.index)


@dataclass(frozen=True)
class WhileK:
    node: While
    next: "AKont"

    def point(self):
        return ("while", self.node.nid)


@dataclass(frozen=True)
class LabelK:
    node: Label
    env: AbsEnv
    next: "AKont"

    def point(self):
        return ("label", self.node.nid)


@dataclass(frozen=True)
class ForK:
    node: ForIn
    work: FrozenSet[AbsStr]
    env: AbsEnv
    next: "AKont"

    def point(self):
        return ("forin", self.node.nid)


@dataclass(frozen=True)
class TryK:
    node: TryCatchFin
    env: AbsEnv
    next: "AKont"

    def point(self):
        return ("try", self.node.nid)


@dataclass(frozen=True)
class CatchK:
    node: TryCatchFin
    env: AbsEnv
    next: "AKont"

    def point(self):
        return ("catch", self.node.nid)


@dataclass(frozen=True)
class FinallyK:
    node: TryCatchFin
    pending: Pending
    env: AbsEnv
    next: "AKont"

    def point(self):
        return ("finally", self.node.nid)


AKont = Union[HaltK, AddrK, SeqK, WhileK, LabelK, ForK, TryK, CatchK, FinallyK]


@dataclass(frozen=True)
class RetK:
    """Return frame, stored in the continuation set of the callee's ``AddrK``."""

    node: Union[Call, NewCall]
    env: AbsEnv
    is_ctor: bool
    receiver: BValue
    caller: Trace
    next: AKont

    def join(self, other: "RetK") -> "RetK":
        return RetK(self.node, env_join(self.env, other.env), self.is_ctor,
                    self.receiver.join(other.receiver), self.caller,
                    kont_join(self.next, other.next))

    def leq(self, other: "RetK") -> bool:
        return (env_leq(self.env, other.env) and self.receiver.leq(other.receiver)
                and kont_leq(self.next, other.next))


def _same_frame(a, b) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, HaltK):
        return True
    if isinstance(a, AddrK):
        return a.addr == b.addr
    if a.node.nid != b.node.nid:
        return False
    return not isinstance(a, SeqK) or a.index == b.index


def kont_join(a: AKont, b: AKont) -> AKont:
    """Join two continuations with the same frame spine."""
    if a is b:
        return a
    assert _same_frame(a, b), f"continuation spines differ: {a.point()} vs {b.point()}"
    if isinstance(a, (HaltK, AddrK)):
        return a
    changes = {"next": kont_join(a.next, b.next)}
    if isinstance(a, (LabelK, ForK, TryK, CatchK, FinallyK)):
        changes["env"] = env_join(a.env, b.env)
    if isinstance(a, ForK):
        changes["work"] = a.work | b.work
    if isinstance(a, FinallyK):
        changes["pending"] = a.pending.join(b.pending)
    return replace(a, **changes)


def kont_leq(a: AKont, b: AKont) -> bool:
    if a is b:
        return True
    if not _same_frame(a, b):
        return False
    if isinstance(a, (HaltK, AddrK)):
        return True
    if isinstance(a, (LabelK, ForK, TryK, CatchK, FinallyK)) and not env_leq(a.env, b.env):
        return False
    if isinstance(a, ForK) and not a.work <= b.work:
        return False
    if isinstance(a, FinallyK) and not a.pending.leq(b.pending):
        return False
    return kont_leq(a.next, b.next)


def term_point(term, kont: AKont) -> tuple:
    if isinstance(term, BV):
        return value_point("bv", None, kont.point())
    if isinstance(term, EV):
        return value_point("ev", None, kont.point())
    if isinstance(term, JV):
        return value_point("jv", term.label, kont.point())
    return statement_point(term.nid)


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AState:
    term: object
    env: AbsEnv
    store: AbsStore
    kont: AKont
    trace: Trace

    def is_final(self) -> bool:
        return isinstance(self.kont, HaltK) and isinstance(self.term, (BV, EV, JV))

    def leq(self, other: "AState") -> bool:
        if isinstance(self.term, (BV, EV, JV)):
            if type(self.term) is not type(other.term) or not self.term.value.leq(other.term.value):
                return False
        elif self.term.nid != other.term.nid:
            return False
        return (env_leq(self.env, other.env) and kont_leq(self.kont, other.kont)
                and self.store.leq(other.store))

    def join(self, other: "AState") -> "AState":
        assert self.trace.partition_key() == other.trace.partition_key(), \
            "only states of one partition are joined"
        term = self.term
        if isinstance(term, (BV, EV, JV)):
            term = value_join(term, other.term)
        return AState(term, env_join(self.env, other.env), self.store.join(other.store),
                      kont_join(self.kont, other.kont), self.trace)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

_NUM_OPS = {
    "+": js_add, "-": js_sub, "*": js_mul, "/": js_div, "%": js_mod,
    "<<": js_shl, ">>": js_sar, ">>>": js_shr, "&": js_bitand, "|": js_bitor,
    "^": js_bitxor,
}
_TYPE_NAMES = {"num": "number", "bool": "boolean", "str": "string", "null": "object",
               "undef": "undefined"}


def _num_compare(f, a: AbsNum, b: AbsNum) -> FrozenSet[bool]:
    if a.is_bot() or b.is_bot():
        return BOOL_BOT
    if a.is_const() and b.is_const():
        return frozenset({f(a.value, b.value)})
    return BOOL_TOP


def _str_compare(f, a: AbsStr, b: AbsStr) -> FrozenSet[bool]:
    if a.is_bot() or b.is_bot():
        return BOOL_BOT
    if a.is_const() and b.is_const():
        return frozenset({f(a.const, b.const)})
    return BOOL_TOP


def _atoms(v: BValue, store: AbsStore) -> Optional[list]:
    """Finite list of (kind, payload) atoms describing ``v``, or None if unbounded."""
    atoms = []
    if not v.num.is_bot():
        if not v.num.is_const():
            return None
        atoms.append(("prim", v.num.value))
    atoms.extend(("prim", b) for b in v.bools)
    if not v.string.is_bot():
        if not v.string.is_const():
            return None
        atoms.append(("prim", v.string.const))
    if v.null:
        atoms.append(("prim", NULL))
    if v.undef:
        atoms.append(("prim", UNDEF))
    atoms.extend(("addr", a) for a in v.addrs)
    return atoms


def _equality(lhs: BValue, rhs: BValue, store: AbsStore, strict: bool) -> FrozenSet[bool]:
    if lhs.is_bot() or rhs.is_bot():
        return BOOL_BOT
    la, ra = _atoms(lhs, store), _atoms(rhs, store)
    if la is None or ra is None:
        if strict and not (lhs.typeset() & rhs.typeset()):
            return BOOL_FALSE
        return BOOL_TOP
    out = set()
    for lk, lv in la:
        for rk, rv in ra:
            if lk == "addr" and rk == "addr":
                if lv != rv:
                    out.add(False)
                else:
                    out.add(True)
                    if not store.is_single(lv):
                        out.add(False)
            elif lk == "addr" or rk == "addr":
                out.add(False)
            else:
                out.add(strict_equals(lv, rv) if strict else loose_equals(lv, rv))
    return frozenset(out)


def aeval_exp(e: Exp, env: AbsEnv, store: AbsStore) -> BValue:
    """Abstract evaluation of a pure expression to a base value."""
    if isinstance(e, NumLit):
        return bv_num(e.value)
    if isinstance(e, BoolLit):
        return bv_bool(frozenset({e.value}))
    if isinstance(e, StrLit):
        return bv_str(e.value)
    if isinstance(e, Var):
        return store.read(env[e.name])
    if isinstance(e, (UndefLit, MethLit)):
        return UNDEF_BV
    if isinstance(e, NullLit):
        return NULL_BV
    if isinstance(e, UnOp):
        v = aeval_exp(e.operand, env, store)
        op = e.op
        if op == "neg":
            return BValue(num=num_lift1(lambda x: -x, to_num(v)))
        if op == "bitnot":
            return BValue(num=num_lift1(js_bitnot, to_num(v)))
        if op == "not":
            return bv_bool(frozenset(not b for b in to_bool(v)))
        if op == "typeof":
            return typeof(v, store)
        if op == "isprim":
            out = set()
            if v.has_non_addr():
                out.add(True)
            if v.addrs:
                out.add(False)
            return bv_bool(frozenset(out))
        if op == "tobool":
            return bv_bool(to_bool(v))
        if op == "tostr":
            return BValue(string=to_str(v))
        if op == "tonum":
            return BValue(num=to_num(v))
        raise ValueError(f"unknown unary operator {op!r}")
    if isinstance(e, BinOp):
        op = e.op
        lhs = aeval_exp(e.lhs, env, store)
        if op in ("and", "or"):
            truth = to_bool(lhs)
            keep_lhs, eval_rhs = (False in truth, True in truth) if op == "and" \
                else (True in truth, False in truth)
            out = lhs if keep_lhs else BV_BOT
            if eval_rhs:
                out = out.join(aeval_exp(e.rhs, env, store))
            return out
        rhs = aeval_exp(e.rhs, env, store)
        if op in _NUM_OPS:
            return BValue(num=num_lift2(_NUM_OPS[op], to_num(lhs), to_num(rhs)))
        if op == "<":
            return bv_bool(_num_compare(js_less, to_num(lhs), to_num(rhs)))
        if op == "<=":
            return bv_bool(_num_compare(js_less_eq, to_num(lhs), to_num(rhs)))
        if op == "++":
            return BValue(string=str_concat(to_str(lhs), to_str(rhs)))
        if op == "s<":
            return bv_bool(_str_compare(utf16_less, to_str(lhs), to_str(rhs)))
        if op == "s<=":
            return bv_bool(_str_compare(utf16_less_eq, to_str(lhs), to_str(rhs)))
        if op == "==":
            return bv_bool(_equality(lhs, rhs, store, strict=False))
        if op == "===":
            return bv_bool(_equality(lhs, rhs, store, strict=True))
        if op == ".":
            value, _ = obj_lookup(store, lhs.addrs, to_str(rhs))
            if lhs.has_non_addr():
                value = value.join(UNDEF_BV)
            return value
        if op == "instanceof":
            out = set()
            if lhs.has_non_addr() or rhs.has_non_addr():
                out.add(False)
            if lhs.addrs and rhs.addrs:
                out.update(_instance_of(store, lhs, rhs))
            return bv_bool(frozenset(out))
        if op == "in":
            out = set()
            if rhs.has_non_addr():
                out.add(False)
            if rhs.addrs:
                _, found = obj_lookup(store, rhs.addrs, to_str(lhs))
                out.update(found)
            return bv_bool(frozenset(out))
        raise ValueError(f"unknown binary operator {op!r}")
    raise TypeError(f"not an expression: {e!r}")


def typeof(v: BValue, store: AbsStore) -> BValue:
    names = {_TYPE_NAMES[t] for t in v.typeset() - {"addr"}}
    names.update("function" if store.obj(a).is_function() else "object" for a in v.addrs)
    out = STR_BOT
    for name in sorted(names):
        out = str_join(out, AbsStr.of(name))
    return BValue(string=out)


def _instance_of(store: AbsStore, lhs: BValue, rhs: BValue) -> FrozenSet[bool]:
    proto, _ = obj_lookup(store, rhs.addrs, AbsStr.of("prototype"))
    targets = proto.addrs
    out, seen = set(), set()
    todo = [p for a in lhs.addrs for p in [store.obj(a).proto]]
    while todo:
        p = todo.pop()
        if p.has_non_addr() or p.is_bot():
            out.add(False)
        for a in p.addrs:
            if a in targets:
                out.add(True)
                if len(targets) > 1 or proto.has_non_addr() or not store.is_single(a):
                    out.add(False)
            elif a not in seen:
                seen.add(a)
                todo.append(store.obj(a).proto)
    if not targets:
        out.add(False)
    return frozenset(out) if out else BOOL_FALSE


# ---------------------------------------------------------------------------
# The machine
# ---------------------------------------------------------------------------


def builtin_addr(site: int) -> AbsAddr:
    return builtin(site).tag


def _primitive_parts(v: BValue):
    """The number, boolean and string components of ``v`` with their typeof names."""
    if not v.num.is_bot():
        yield "number", BValue(num=v.num)
    if v.bools:
        yield "boolean", BValue(bools=v.bools)
    if not v.string.is_bot():
        yield "string", BValue(string=v.string)


class AbstractMachine:
    """Transition relation of the abstract machine for one program.

    Parameters
    ----------
    program : Decl
        A validated, numbered program.
    """

    def __init__(self, program: Decl):
        self.program = program
        self.nodes = index_nodes(program)

    # -- entry --------------------------------------------------------------

    def initial_state(self, strategy="fs") -> AState:
        """Program entry; the builtin heap is the abstraction of the concrete one."""
        trace = parse_sensitivity(strategy)
        entries = {a.tag: alpha_obj(o) for a, o in initial_store().items()}
        cell = global_cell(self.program)
        entries[cell.tag] = bv_addr(builtin_addr(GLOBAL))
        store = AbsStore(FrozenMap(entries))
        env = FrozenMap({GLOBAL_VAR: frozenset({cell.tag})})
        trace = trace.update(StepTo(statement_point(self.program.nid)))
        return AState(self.program, env, store, HALT, trace)

    # -- helpers ------------------------------------------------------------

    def _make(self, state: AState, term, env=None, store=None, kont=None,
              trace=None) -> AState:
        env = state.env if env is None else env
        store = state.store if store is None else store
        kont = state.kont if kont is None else kont
        trace = state.trace if trace is None else trace
        return AState(term, env, store, kont, trace.update(StepTo(term_point(term, kont))))

    def _throw(self, state: AState, name: str) -> AState:
        """Exception successor carrying a fresh error object allocated at the statement."""
        addr = AbsAddr(state.term.nid, state.trace.heap_prefix(), "error")
        err = AbsObject(
            tag="error",
            props=FrozenMap({"name": bv_str(name)}),
            present=frozenset({"name"}),
            hidden=frozenset({"name"}),
            proto=bv_addr(builtin_addr(OBJECT_PROTO)),
        )
        return self._make(state, EV(bv_addr(addr)), store=state.store.alloc(addr, err))

    @staticmethod
    def _args_values(store: AbsStore, args: BValue) -> Tuple[BValue, ...]:
        out = []
        for i in range(MAX_SIG_ARGS):
            v, _ = obj_lookup(store, args.addrs, AbsStr.of(str(i)))
            if args.has_non_addr():
                v = v.join(UNDEF_BV)
            out.append(v)
        return tuple(out)

    def _lookup(self, store: AbsStore, v: BValue, name: str) -> BValue:
        value, _ = obj_lookup(store, v.addrs, AbsStr.of(name))
        if v.has_non_addr():
            value = value.join(UNDEF_BV)
        return value

    def _callees(self, store: AbsStore, f: BValue):
        """Function objects ``f`` may denote, and whether it may denote something else."""
        funs, bad = [], f.has_non_addr()
        for a in sorted(f.addrs, key=repr):
            o = store.obj(a)
            if o.is_function():
                funs.append((a, o))
            else:
                bad = True
        return funs, bad

    def _enter(self, state: AState, store: AbsStore, node, meth: Meth, cenv: AbsEnv,
               self_v: BValue, args: BValue, is_ctor: bool, receiver: BValue) -> AState:
        event = CallEvent(
            site=node.nid,
            callee=meth.nid,
            self_value=self_v,
            args_value=args,
            arg_values=self._args_values(store, args),
            point=statement_point(meth.body.nid),
        )
        trace = state.trace.update(event)
        hp = trace.heap_prefix()
        self_cell = AbsAddr(meth.nid, hp, "var:self")
        args_cell = AbsAddr(meth.nid, hp, "var:args")
        kaddr = AbsAddr(meth.nid, trace.context, "kont")
        store = store.alloc(self_cell, self_v).alloc(args_cell, args)
        frame = RetK(node, state.env, is_ctor, receiver, state.trace, state.kont)
        konts = FrozenMap({(node.nid, state.trace): frame})
        old = store.entries.get(kaddr)
        store = store.set(kaddr, konts if old is None else map_join(old, konts, RetK.join))
        env = cenv.update({"self": frozenset({self_cell}), "args": frozenset({args_cell})})
        return self._make(state, meth.body, env=env, store=store, kont=AddrK(kaddr), trace=trace)

    def _assign(self, state: AState, store: AbsStore, var: str, v: BValue) -> AState:
        return self._make(state, BV(v), store=store.write(state.env[var], v))

    # -- transition relation ------------------------------------------------

    def next_states(self, state: AState) -> List[AState]:
        """Every successor of ``state``; empty for final states and dead branches."""
        term = state.term
        if isinstance(term, (BV, EV, JV)):
            return self._continue(state)
        return self._exec(state)

    def _exec(self, state: AState) -> List[AState]:
        s, env, store = state.term, state.env, state.store
        hp = state.trace.heap_prefix()
        out: List[AState] = []

        def ev(e):
            return aeval_exp(e, env, store)

        if isinstance(s, Decl):
            cells = {x: frozenset({AbsAddr(s.nid, hp, f"var:{x}")}) for x, _ in s.bindings}
            env2 = env.update(cells)
            for x, _ in s.bindings:
                (cell,) = cells[x]
                store = store.alloc(cell, UNDEF_BV)
            for x, e in s.bindings:
                store = store.write(cells[x], aeval_exp(e, env2, store))
            return [self._make(state, s.body, env=env2, store=store)]
        if isinstance(s, Seq):
            if not s.stmts:
                return [self._make(state, BV(UNDEF_BV))]
            return [self._make(state, s.stmts[0], kont=SeqK(s, 1, state.kont))]
        if isinstance(s, If):
            truth = to_bool(ev(s.guard))
            if True in truth:
                out.append(self._make(state, s.then))
            if False in truth:
                out.append(self._make(state, s.orelse))
            return out
        if isinstance(s, While):
            truth = to_bool(ev(s.guard))
            if True in truth:
                out.append(self._make(state, s.body, kont=WhileK(s, state.kont)))
            if False in truth:
                out.append(self._make(state, BV(UNDEF_BV)))
            return out
        if isinstance(s, AssignVar):
            return [self._assign(state, store, s.var, ev(s.exp))]
        if isinstance(s, AssignProp):
            o, key, v = ev(s.obj), to_str(ev(s.key)), ev(s.val)
            if o.may_be_nullish():
                out.append(self._throw(state, "TypeError"))
            if o.addrs:
                store2, flags = obj_update(store, o.addrs, key, v)
                if "possibleRangeError" in flags:
                    out.append(self._throw(state, "RangeError"))
                out.append(self._make(state, BV(v), store=store2))
            if not (o.num.is_bot() and not o.bools and o.string.is_bot()):
                out.append(self._make(state, BV(v)))
            return out
        if isinstance(s, Call):
            f, self_v, args = ev(s.fun), ev(s.self_exp), ev(s.args)
            return self._call(state, s, f, self_v, args, store)
        if isinstance(s, NewCall):
            f, args = ev(s.ctor), ev(s.args)
            funs, _ = self._callees(store, f)
            proto_addrs = set()
            if funs:
                proto, _ = obj_lookup(store, [a for a, _ in funs], AbsStr.of("prototype"))
                proto_addrs.update(proto.addrs)
                if proto.has_non_addr() or proto.is_bot():
                    proto_addrs.add(builtin_addr(OBJECT_PROTO))
            receiver = (AbsAddr(s.nid, hp, "object"),
                        AbsObject(tag="object", proto=BValue(addrs=frozenset(proto_addrs))))
            return self._call(state, s, f, UNDEF_BV, args, store, receiver)
        if isinstance(s, ToObj):
            v = ev(s.exp)
            if v.may_be_nullish():
                out.append(self._throw(state, "TypeError"))
            addrs = set(v.addrs)
            for tname, part in _primitive_parts(v):
                tag = WRAPPER_TAGS[tname]
                addr = AbsAddr(s.nid, hp, tag)
                store = store.alloc(addr, AbsObject(tag=tag, primitive=part,
                                                    proto=bv_addr(builtin_addr(OBJECT_PROTO))))
                addrs.add(addr)
            if addrs:
                out.append(self._assign(state, store, s.var, BValue(addrs=frozenset(addrs))))
            return out
        if isinstance(s, DeleteProp):
            o, key = ev(s.obj), to_str(ev(s.key))
            if o.may_be_nullish():
                out.append(self._throw(state, "TypeError"))
            result = set()
            if o.addrs:
                store, deleted = obj_delete(store, o.addrs, key)
                result.update(deleted)
            if not (o.num.is_bot() and not o.bools and o.string.is_bot()):
                result.add(True)
            if result:
                out.append(self._assign(state, store, s.var, bv_bool(frozenset(result))))
            return out
        if isinstance(s, NewFun):
            faddr = AbsAddr(s.nid, hp, "function")
            paddr = AbsAddr(s.nid, hp, "object")
            fun = AbsObject(
                tag="function",
                props=FrozenMap({"length": bv_num(s.arity), "prototype": bv_addr(paddr)}),
                present=frozenset({"length", "prototype"}),
                hidden=frozenset({"length", "prototype"}),
                closures=FrozenMap({s.meth.nid: env}),
                proto=bv_addr(builtin_addr(FUNCTION_PROTO)),
            )
            proto = AbsObject(
                tag="object",
                props=FrozenMap({"constructor": bv_addr(faddr)}),
                present=frozenset({"constructor"}),
                hidden=frozenset({"constructor"}),
                proto=bv_addr(builtin_addr(OBJECT_PROTO)),
            )
            store = store.alloc(faddr, fun).alloc(paddr, proto)
            return [self._assign(state, store, s.var, bv_addr(faddr))]
        if isinstance(s, Throw):
            return [self._make(state, EV(ev(s.exp)))]
        if isinstance(s, TryCatchFin):
            return [self._make(state, s.body, kont=TryK(s, env, state.kont))]
        if isinstance(s, Label):
            return [self._make(state, s.body, kont=LabelK(s, env, state.kont))]
        if isinstance(s, Break):
            return [self._make(state, JV(s.label, ev(s.exp)))]
        if isinstance(s, ForIn):
            o = ev(s.obj)
            if o.has_non_addr():
                out.append(self._make(state, BV(UNDEF_BV)))
            if o.addrs:
                definite, possible = obj_enumerate(store, o.addrs)
                work = frozenset(AbsStr.of(k) for k in definite) | possible
                out.append(self._make(state, BV(UNDEF_BV), kont=ForK(s, work, env, state.kont)))
            return out
        raise TypeError(f"not a statement: {s!r}")

    def _call(self, state: AState, node, f: BValue, self_v: BValue, args: BValue,
              store: AbsStore, receiver: Optional[Tuple[AbsAddr, AbsObject]] = None
              ) -> List[AState]:
        """Successors of a call; ``receiver`` is the object a constructor call allocates.

        A builtin constructor builds its own result, so the receiver is only
        allocated for closures and for natives that may return a primitive.
        """
        out: List[AState] = []
        funs, bad = self._callees(state.store, f)
        if bad:
            out.append(self._throw(state, "TypeError"))
        for _, o in funs:
            for key in sorted(o.closures, key=repr):
                if isinstance(key, str):
                    for result, store2 in self._native(key, state, store, self_v, args, node):
                        if receiver is not None:
                            ret = BValue(addrs=result.addrs)
                            if result.has_non_addr() or result.is_bot():
                                store2 = store2.alloc(*receiver)
                                ret = ret.join(bv_addr(receiver[0]))
                            result = ret
                        out.append(self._assign(state, store2, node.var, result))
                elif receiver is None:
                    out.append(self._enter(state, store, node, self.nodes[key], o.closures[key],
                                           self_v, args, False, BV_BOT))
                else:
                    r = bv_addr(receiver[0])
                    out.append(self._enter(state, store.alloc(*receiver), node, self.nodes[key],
                                           o.closures[key], r, args, True, r))
        return out

    def _continue(self, state: AState) -> List[AState]:
        term, kont, env, store = state.term, state.kont, state.env, state.store
        if isinstance(kont, HaltK):
            return []
        if isinstance(kont, AddrK):
            out = []
            konts = store[kont.addr]
            for key in sorted(konts, key=repr):
                frame = konts[key]
                trace = state.trace.update(ReturnEvent(frame.caller, frame.caller.point))
                if isinstance(term, BV):
                    v = term.value
                    if frame.is_ctor:
                        ret = BValue(addrs=v.addrs)
                        if v.has_non_addr():
                            ret = ret.join(frame.receiver)
                        v = ret
                    store2 = store.write(frame.env[frame.node.var], v)
                    out.append(self._make(state, BV(v), env=frame.env, store=store2,
                                          kont=frame.next, trace=trace))
                elif isinstance(term, EV):
                    out.append(self._make(state, term, env=frame.env, kont=frame.next,
                                          trace=trace))
            return out
        if isinstance(kont, TryK) and isinstance(term, EV):
            s = kont.node
            cell = AbsAddr(s.nid, state.trace.heap_prefix(), f"var:{s.var}")
            store = store.alloc(cell, term.value)
            env2 = kont.env.set(s.var, frozenset({cell}))
            return [self._make(state, s.catch, env=env2, store=store,
                               kont=CatchK(s, kont.env, kont.next))]
        if isinstance(kont, (TryK, CatchK)):
            s = kont.node
            return [self._make(state, s.finally_, env=kont.env,
                               kont=FinallyK(s, Pending.of(term), kont.env, kont.next))]
        if isinstance(kont, FinallyK):
            if isinstance(term, BV):
                return [self._make(state, v, env=kont.env, kont=kont.next)
                        for v in kont.pending.values()]
            return [self._make(state, term, env=kont.env, kont=kont.next)]
        if isinstance(kont, LabelK):
            if isinstance(term, JV) and term.label == kont.node.label:
                return [self._make(state, BV(term.value), env=kont.env, kont=kont.next)]
            return [self._make(state, term, env=kont.env, kont=kont.next)]
        if not isinstance(term, BV):
            return [self._make(state, term, kont=kont.next)]
        if isinstance(kont, SeqK):
            stmts = kont.node.stmts
            if kont.index < len(stmts):
                return [self._make(state, stmts[kont.index],
                                   kont=SeqK(kont.node, kont.index + 1, kont.next))]
            return [self._make(state, term, kont=kont.next)]
        if isinstance(kont, WhileK):
            return [self._make(state, kont.node, kont=kont.next)]
        if isinstance(kont, ForK):
            out = [self._make(state, BV(UNDEF_BV), env=kont.env, kont=kont.next)]
            cells = kont.env[kont.node.var]
            for w in sorted(kont.work, key=repr):
                store2 = store.write(cells, BValue(string=w))
                out.append(self._make(state, kont.node.body, env=kont.env, store=store2,
                                      kont=kont))
            return out
        raise TypeError(f"unknown continuation {kont!r}")

    # -- builtin functions --------------------------------------------------

    def _native(self, name: str, state: AState, store: AbsStore, self_v: BValue,
                args: BValue, node) -> List[Tuple[BValue, AbsStore]]:
        """Abstract counterparts of the concrete natives: (result, store) pairs."""
        hp = state.trace.heap_prefix()
        arg0 = self._lookup(store, args, "0")
        if name in ("noop", "eval", "print"):
            return [(UNDEF_BV, store)]
        if name == "isNaN":
            n = to_num(arg0)
            if n.is_const():
                return [(bv_bool(frozenset({math.isnan(n.value)})), store)]
            return [(bv_bool(BOOL_TOP if n.is_top() else BOOL_BOT), store)]
        if name == "Object":
            addrs = set(arg0.addrs)
            if arg0.may_be_nullish():
                addr = AbsAddr(node.nid, hp, "object")
                store = store.alloc(addr, AbsObject(tag="object",
                                                    proto=bv_addr(builtin_addr(OBJECT_PROTO))))
                addrs.add(addr)
            for tname, part in _primitive_parts(arg0):
                tag = WRAPPER_TAGS[tname]
                addr = AbsAddr(node.nid, hp, tag)
                store = store.alloc(addr, AbsObject(tag=tag, primitive=part,
                                                    proto=bv_addr(builtin_addr(OBJECT_PROTO))))
                addrs.add(addr)
            return [(BValue(addrs=frozenset(addrs)), store)]
        if name == "Array":
            return [self._new_array(store, args, AbsAddr(node.nid, hp, "array"))]
        if name == "Function":
            addr = AbsAddr(node.nid, hp, "function")
            fun = AbsObject(tag="function", closures=FrozenMap({"noop": EMPTY_ENV}),
                            proto=bv_addr(builtin_addr(FUNCTION_PROTO)))
            return [(bv_addr(addr), store.alloc(addr, fun))]
        if name == "toString":
            names = {f"[object {CLASS_NAMES[store.obj(a).tag]}]" for a in self_v.addrs}
            if self_v.may_be_nullish():
                names.add("[object Object]")
            names.update(f"[object {CLASS_NAMES[WRAPPER_TAGS[t]]}]"
                         for t, _ in _primitive_parts(self_v))
            out = STR_BOT
            for s in sorted(names):
                out = str_join(out, AbsStr.of(s))
            return [(BValue(string=out), store)]
        if name == "valueOf":
            out = self_v.without_addrs()
            for a in self_v.addrs:
                prim = store.obj(a).primitive
                out = out.join(bv_addr(a) if prim.is_bot() else prim)
            return [(out, store)]
        if name == "hasOwnProperty":
            key = to_str(arg0)
            result = set()
            if self_v.has_non_addr():
                result.add(False)
            for a in self_v.addrs:
                o = store.obj(a)
                if key.const is not None and key.const in o.present:
                    result.add(True)
                    continue
                result.add(False)
                if not o.matching(key).is_bot():
                    result.add(True)
            return [(bv_bool(frozenset(result)), store)]
        if name == "push":
            return [self._push(store, self_v, args)]
        if name == "pop":
            return [self._pop(store, self_v)]
        if name == "join":
            return [(self._join(store, self_v), store)]
        raise ValueError(f"unknown native {name!r}")

    @staticmethod
    def _exact_length(store: AbsStore, v: BValue) -> Optional[int]:
        """ToUint32 of ``v.length`` when it is a small known constant and ``v`` only objects."""
        if not v.addrs or v.has_non_addr():
            return None
        n = to_num(obj_lookup(store, v.addrs, AbsStr.of("length"))[0])
        if n.is_const() and to_uint32(n.value) <= MAX_EXACT_LENGTH:
            return to_uint32(n.value)
        return None

    def _new_array(self, store: AbsStore, args: BValue,
                   addr: AbsAddr) -> Tuple[BValue, AbsStore]:
        props, length, num_summary = {}, NUM_BOT, BV_BOT
        if args.has_non_addr():
            length = AbsNum.const(0.0)
        if args.addrs:
            only = BValue(addrs=args.addrs)
            m = self._exact_length(store, only)
            if m is not None:
                for i in range(m):
                    props[str(i)] = obj_lookup(store, args.addrs, AbsStr.of(str(i)))[0]
                length = num_join(length, AbsNum.const(float(m)))
            else:
                num_summary = obj_lookup(store, args.addrs, STR_SNUM)[0]
                length = NUM_TOP
        present = set() if args.has_non_addr() or length.is_top() else set(props)
        props["length"] = BValue(num=length)
        obj = AbsObject(
            tag="array",
            props=FrozenMap(props),
            present=frozenset(present | {"length"}),
            hidden=frozenset({"length"}),
            num_summary=num_summary,
            proto=bv_addr(builtin_addr(ARRAY_PROTO)),
        )
        return bv_addr(addr), store.alloc(addr, obj)

    def _push(self, store: AbsStore, self_v: BValue, args: BValue) -> Tuple[BValue, AbsStore]:
        m = self._exact_length(store, args)
        result = BV_BOT
        if self_v.has_non_addr():
            count = AbsNum.const(0.0) if args.has_non_addr() else NUM_BOT
            if args.addrs:
                count = num_join(count, NUM_TOP if m is None else AbsNum.const(float(m)))
            result = BValue(num=count)
        if not self_v.addrs:
            return result, store
        n = self._exact_length(store, self_v)
        if (n is not None and m is not None and len(self_v.addrs) == 1
                and store.is_single(next(iter(self_v.addrs)))):
            for i in range(m):
                item = obj_lookup(store, args.addrs, AbsStr.of(str(i)))[0]
                store, _ = obj_update(store, self_v.addrs, AbsStr.of(str(n + i)), item)
            store, _ = obj_update(store, self_v.addrs, AbsStr.of("length"),
                                  bv_num(float(n + m)))
            return result.join(bv_num(float(n + m))), store
        if args.addrs:
            items = obj_lookup(store, args.addrs, STR_SNUM)[0]
            if not items.is_bot():
                store, _ = obj_update(store, self_v.addrs, STR_SNUM, items)
        store, _ = obj_update(store, self_v.addrs, AbsStr.of("length"), BValue(num=NUM_TOP))
        return result.join(BValue(num=NUM_TOP)), store

    def _pop(self, store: AbsStore, self_v: BValue) -> Tuple[BValue, AbsStore]:
        result = UNDEF_BV if self_v.has_non_addr() else BV_BOT
        if not self_v.addrs:
            return result, store
        n = self._exact_length(store, self_v)
        length_key = AbsStr.of("length")
        if n is not None and len(self_v.addrs) == 1 and store.is_single(next(iter(self_v.addrs))):
            if n == 0:
                store, _ = obj_update(store, self_v.addrs, length_key, bv_num(0.0))
                return result.join(UNDEF_BV), store
            last = AbsStr.of(str(n - 1))
            value = obj_lookup(store, self_v.addrs, last)[0]
            store, _ = obj_delete(store, self_v.addrs, last)
            store, _ = obj_update(store, self_v.addrs, length_key, bv_num(float(n - 1)))
            return result.join(value), store
        value = obj_lookup(store, self_v.addrs, STR_SNUM)[0]
        store, _ = obj_delete(store, self_v.addrs, STR_SNUM)
        store, _ = obj_update(store, self_v.addrs, length_key, BValue(num=NUM_TOP))
        return result.join(value).join(UNDEF_BV), store

    def _join(self, store: AbsStore, self_v: BValue) -> BValue:
        out = bv_str("") if self_v.has_non_addr() else BV_BOT
        if not self_v.addrs:
            return out
        n = self._exact_length(store, self_v)
        if n is None:
            return out.join(BValue(string=STR_TOP))
        pieces = []
        for i in range(n):
            v = obj_lookup(store, self_v.addrs, AbsStr.of(str(i)))[0]
            piece = to_str(v.without_nullish())
            if v.may_be_nullish():
                piece = str_join(piece, AbsStr.of(""))
            if not piece.is_const():
                return out.join(BValue(string=STR_TOP))
            pieces.append(piece.const)
        return out.join(bv_str(",".join(pieces)))
