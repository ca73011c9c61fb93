"""Deterministic concrete interpreter for notJS.

Expressions are evaluated big-step and never allocate; statements run on a
small-step machine whose continuation is an explicit frame stack. The
machine is the oracle the abstract interpreter is tested against, so every
allocation is tagged with the abstract address it must abstract to.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple, Union

from .builtin_objects import (ARRAY_PROTO, BUILTINS, CLASS_NAMES, FUNCTION_PROTO, GLOBAL,
                              OBJECT_PROTO, WRAPPER_TAGS)
from .domains import AbsAddr, alpha
from .ir import (GLOBAL_VAR, AssignProp, AssignVar, BinOp, BoolLit, Break, Call, Decl,
                 DeleteProp, Exp, ForIn, If, Label, Meth, MethLit, NewCall, NewFun, NullLit,
                 NumLit, Seq, StrLit, Throw, ToObj, TryCatchFin, UndefLit, UnOp, Var, While)
from .sensitivity import (HALT_FRAME, MAX_SIG_ARGS, CallEvent, ReturnEvent, StepTo, Trace,
                          exit_frame, parse_sensitivity, statement_point, value_point)
from .utils import (NULL, UNDEF, Primitive, is_array_index, is_uint32, js_add, js_bitand,
                    js_bitnot, js_bitor, js_bitxor, js_div, js_less, js_less_eq, js_mod,
                    js_mul, js_sar, js_shl, js_shr, js_sub, loose_equals, strict_equals,
                    to_boolean, to_number, to_string, to_uint32, type_name, utf16_less,
                    utf16_less_eq)

logger = logging.getLogger(__name__)

# Longest array a native will materialise element by element
MAX_NATIVE_LENGTH = 10_000


class MachineError(RuntimeError):
    """Internal invariant violation of the concrete machine."""


@dataclass(frozen=True)
class Addr:
    """Concrete heap address; ``tag`` is the abstract address it abstracts to."""

    id: int
    tag: AbsAddr = field(compare=False)

    def __repr__(self):
        return f"#{self.id}"


CValue = Union[Primitive, Addr]


@dataclass(frozen=True)
class CObject:
    """Concrete object. ``props`` keeps insertion order and is never mutated in place."""

    tag: str
    props: dict
    proto: CValue = NULL
    hidden: frozenset = frozenset()
    closure: Optional[Tuple[Meth, dict]] = None
    native: Optional[str] = None
    primitive: Optional[Primitive] = None


# ---------------------------------------------------------------------------
# Terms and continuation frames
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Value:
    value: CValue


@dataclass(frozen=True)
class Exc:
    value: CValue


@dataclass(frozen=True)
class Jump:
    label: str
    value: CValue


@dataclass(frozen=True)
class SeqK:
    node: Seq
    index: int

    def point(self):
        return ("seq", self.node.nid, self.index)


@dataclass(frozen=True)
class WhileK:
    node: While

    def point(self):
        return ("while", self.node.nid)


@dataclass(frozen=True)
class LabelK:
    node: Label
    env: dict

    def point(self):
        return ("label", self.node.nid)


@dataclass(frozen=True)
class ForK:
    node: ForIn
    obj: Addr
    keys: Tuple[str, ...]
    env: dict

    def point(self):
        return ("forin", self.node.nid)


@dataclass(frozen=True)
class TryK:
    node: TryCatchFin
    env: dict

    def point(self):
        return ("try", self.node.nid)


@dataclass(frozen=True)
class CatchK:
    node: TryCatchFin
    env: dict

    def point(self):
        return ("catch", self.node.nid)


@dataclass(frozen=True)
class FinallyK:
    node: TryCatchFin
    pending: Union[Value, Exc, Jump]
    env: dict

    def point(self):
        return ("finally", self.node.nid)


@dataclass(frozen=True)
class RetK:
    node: Union[Call, NewCall]
    var: str
    env: dict
    is_ctor: bool
    receiver: Optional[Addr]
    caller: Trace
    meth: int

    def point(self):
        return exit_frame(self.meth)


@dataclass(frozen=True)
class ConcreteState:
    term: object
    env: dict
    store: dict
    kont: tuple
    trace: Trace
    next_id: int = 1
    output: tuple = ()

    def is_final(self) -> bool:
        return not self.kont and isinstance(self.term, (Value, Exc, Jump))


def term_point(term, kont: tuple) -> tuple:
    """Program point of a machine configuration, shared with the abstract machine."""
    if isinstance(term, (Value, Exc, Jump)):
        frame = kont[-1].point() if kont else HALT_FRAME
        if isinstance(term, Value):
            return value_point("bv", None, frame)
        if isinstance(term, Exc):
            return value_point("ev", None, frame)
        return value_point("jv", term.label, frame)
    return statement_point(term.nid)


# ---------------------------------------------------------------------------
# Heap access
# ---------------------------------------------------------------------------


class _JSError(Exception):
    """A JavaScript-level TypeError or RangeError raised while executing a step."""

    def __init__(self, name: str):
        super().__init__(name)
        self.name = name


class _Heap:
    """Working copy of the store for one step; the dict is copied on first write."""

    def __init__(self, store: dict, next_id: int):
        self.store = store
        self.next_id = next_id
        self._owned = False
        self.output: List[str] = []

    def read(self, addr: Addr):
        return self.store[addr]

    def obj(self, addr: Addr) -> CObject:
        o = self.store[addr]
        if not isinstance(o, CObject):
            raise MachineError(f"{addr!r} does not hold an object")
        return o

    def write(self, addr: Addr, entry):
        if not self._owned:
            self.store = dict(self.store)
            self._owned = True
        self.store[addr] = entry

    def alloc(self, tag: AbsAddr, entry) -> Addr:
        addr = Addr(self.next_id, tag)
        self.next_id += 1
        self.write(addr, entry)
        return addr


def get_prop(store, v: CValue, key: str) -> CValue:
    """Property read through the prototype chain; non-objects read as undef."""
    while isinstance(v, Addr):
        o = store[v]
        if key in o.props:
            return o.props[key]
        v = o.proto
    return UNDEF


def has_prop(store, v: CValue, key: str) -> bool:
    while isinstance(v, Addr):
        o = store[v]
        if key in o.props:
            return True
        v = o.proto
    return False


def enumerate_keys(store, addr: Addr) -> Tuple[str, ...]:
    """Own enumerable names in insertion order, then unshadowed inherited ones."""
    keys, seen = [], set()
    v = addr
    while isinstance(v, Addr):
        o = store[v]
        for k in o.props:
            if k not in seen and k not in o.hidden:
                keys.append(k)
            seen.add(k)
        v = o.proto
    return tuple(keys)


def _set_prop(heap: _Heap, addr: Addr, key: str, value: CValue):
    o = heap.obj(addr)
    props = dict(o.props)
    if o.tag == "array" and key == "length":
        n = to_num(value)
        if not is_uint32(n):
            raise _JSError("RangeError")
        for k in list(props):
            if is_array_index(k) and int(k) >= n:
                del props[k]
        props["length"] = float(n)
    else:
        props[key] = value
        if o.tag == "array" and is_array_index(key):
            length = props.get("length", 0.0)
            if int(key) >= length:
                props["length"] = float(int(key) + 1)
    heap.write(addr, replace(o, props=props))


# ---------------------------------------------------------------------------
# Conversions including objects
# ---------------------------------------------------------------------------


def to_num(v: CValue) -> float:
    return math.nan if isinstance(v, Addr) else to_number(v)


def to_str(v: CValue) -> str:
    return "[object Object]" if isinstance(v, Addr) else to_string(v)


def to_bool(v: CValue) -> bool:
    return True if isinstance(v, Addr) else to_boolean(v)


def typeof(v: CValue, store) -> str:
    if isinstance(v, Addr):
        return "function" if store[v].tag == "function" else "object"
    return type_name(v)


def _equals(a: CValue, b: CValue, strict: bool) -> bool:
    if isinstance(a, Addr) or isinstance(b, Addr):
        return a == b
    return strict_equals(a, b) if strict else loose_equals(a, b)


_ARITH = {
    "+": js_add, "-": js_sub, "*": js_mul, "/": js_div, "%": js_mod,
    "<<": js_shl, ">>": js_sar, ">>>": js_shr, "&": js_bitand, "|": js_bitor,
    "^": js_bitxor,
}


def _instance_of(store, v: CValue, ctor: CValue) -> bool:
    if not (isinstance(v, Addr) and isinstance(ctor, Addr)):
        return False
    proto = get_prop(store, ctor, "prototype")
    p = store[v].proto
    while isinstance(p, Addr):
        if p == proto:
            return True
        p = store[p].proto
    return False


def eval_exp(e: Exp, env: dict, store) -> CValue:
    """Evaluate a pure expression.

    Parameters
    ----------
    e : Exp
        A validated expression whose free variables are bound in ``env``.
    env : dict
        Variable name to the address of its cell.
    store : Mapping
        The heap; it is only read.

    Returns
    -------
    CValue
        The ECMA-3 value of ``e``.
    """
    if isinstance(e, NumLit):
        return e.value
    if isinstance(e, (BoolLit, StrLit)):
        return e.value
    if isinstance(e, Var):
        return store[env[e.name]]
    if isinstance(e, UndefLit) or isinstance(e, MethLit):
        return UNDEF
    if isinstance(e, NullLit):
        return NULL
    if isinstance(e, UnOp):
        v = eval_exp(e.operand, env, store)
        op = e.op
        if op == "neg":
            return -to_num(v)
        if op == "bitnot":
            return js_bitnot(to_num(v))
        if op == "not":
            return not to_bool(v)
        if op == "typeof":
            return typeof(v, store)
        if op == "isprim":
            return not isinstance(v, Addr)
        if op == "tobool":
            return to_bool(v)
        if op == "tostr":
            return to_str(v)
        if op == "tonum":
            return to_num(v)
        raise MachineError(f"unknown unary operator {op!r}")
    if isinstance(e, BinOp):
        op = e.op
        lhs = eval_exp(e.lhs, env, store)
        if op == "and":
            return eval_exp(e.rhs, env, store) if to_bool(lhs) else lhs
        if op == "or":
            return lhs if to_bool(lhs) else eval_exp(e.rhs, env, store)
        rhs = eval_exp(e.rhs, env, store)
        if op in _ARITH:
            return _ARITH[op](to_num(lhs), to_num(rhs))
        if op == "<":
            return js_less(to_num(lhs), to_num(rhs))
        if op == "<=":
            return js_less_eq(to_num(lhs), to_num(rhs))
        if op == "++":
            return to_str(lhs) + to_str(rhs)
        if op == "s<":
            return utf16_less(to_str(lhs), to_str(rhs))
        if op == "s<=":
            return utf16_less_eq(to_str(lhs), to_str(rhs))
        if op == "==":
            return _equals(lhs, rhs, strict=False)
        if op == "===":
            return _equals(lhs, rhs, strict=True)
        if op == ".":
            return get_prop(store, lhs, to_str(rhs))
        if op == "instanceof":
            return _instance_of(store, lhs, rhs)
        if op == "in":
            return isinstance(rhs, Addr) and has_prop(store, rhs, to_str(lhs))
        raise MachineError(f"unknown binary operator {op!r}")
    raise MachineError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Builtins
# ---------------------------------------------------------------------------


def _builtin_addr(site: int, tag: str) -> Addr:
    return Addr(site, AbsAddr(site, (), tag))


_BUILTIN_TAGS = {spec.site: spec.class_tag for spec in BUILTINS}


def builtin(site: int) -> Addr:
    return _builtin_addr(site, _BUILTIN_TAGS[site])


def initial_store() -> dict:
    """The builtin heap: every builtin property is non-enumerable."""
    store = {}
    for spec in BUILTINS:
        props = {}
        for name, ref in spec.props:
            if isinstance(ref, int) and not isinstance(ref, bool):
                props[name] = builtin(ref)
            else:
                props[name] = ref
        proto = NULL if spec.proto is None else builtin(spec.proto)
        store[builtin(spec.site)] = CObject(spec.class_tag, props, proto,
                                            frozenset(props), native=spec.native)
    return store


def _array_length(heap: _Heap, v: CValue) -> int:
    return to_uint32(to_num(get_prop(heap.store, v, "length")))


def _items(heap: _Heap, v: CValue, n: int) -> List[CValue]:
    if n > MAX_NATIVE_LENGTH:
        raise MachineError(f"array length {n} too large for a native")
    return [get_prop(heap.store, v, str(i)) for i in range(n)]


def _elements(heap: _Heap, v: CValue) -> List[CValue]:
    if not isinstance(v, Addr):
        return []
    return _items(heap, v, _array_length(heap, v))


def _new_array(heap: _Heap, tag: AbsAddr, items: List[CValue]) -> Addr:
    props = {str(i): v for i, v in enumerate(items)}
    props["length"] = float(len(items))
    return heap.alloc(tag, CObject("array", props, builtin(ARRAY_PROTO), frozenset({"length"})))


def _native_call(name: str, heap: _Heap, self_v: CValue, args: CValue,
                 site: int, hp: tuple) -> CValue:
    """Run a builtin function atomically."""
    arg0 = get_prop(heap.store, args, "0")
    if name == "noop":
        return UNDEF
    if name == "isNaN":
        return math.isnan(to_num(arg0))
    if name == "eval":
        logger.warning("eval is disallowed; call at node %d returns undefined", site)
        return UNDEF
    if name == "print":
        heap.output.append(to_str(arg0))
        return UNDEF
    if name == "Object":
        if isinstance(arg0, Addr):
            return arg0
        if arg0 is NULL or arg0 is UNDEF:
            return heap.alloc(AbsAddr(site, hp, "object"),
                              CObject("object", {}, builtin(OBJECT_PROTO)))
        return _wrap(heap, arg0, site, hp)
    if name == "Array":
        return _new_array(heap, AbsAddr(site, hp, "array"), _elements(heap, args))
    if name == "Function":
        return heap.alloc(AbsAddr(site, hp, "function"),
                          CObject("function", {}, builtin(FUNCTION_PROTO), native="noop"))
    if name == "toString":
        if isinstance(self_v, Addr):
            return f"[object {CLASS_NAMES[heap.obj(self_v).tag]}]"
        if self_v is NULL or self_v is UNDEF:
            return "[object Object]"
        return f"[object {CLASS_NAMES[WRAPPER_TAGS[type_name(self_v)]]}]"
    if name == "valueOf":
        if isinstance(self_v, Addr):
            prim = heap.obj(self_v).primitive
            return self_v if prim is None else prim
        return self_v
    if name == "hasOwnProperty":
        return isinstance(self_v, Addr) and to_str(arg0) in heap.obj(self_v).props
    if name in ("push", "pop", "join"):
        return _array_native(name, heap, self_v, args)
    raise MachineError(f"unknown native {name!r}")


def _array_native(name: str, heap: _Heap, self_v: CValue, args: CValue) -> CValue:
    if not isinstance(self_v, Addr):
        # generic methods on a primitive act on a temporary object
        if name == "push":
            return float(len(_elements(heap, args)))
        return UNDEF if name == "pop" else ""
    n = _array_length(heap, self_v)
    if name == "push":
        for item in _elements(heap, args):
            _set_prop(heap, self_v, str(n), item)
            n += 1
        _set_prop(heap, self_v, "length", float(n))
        return float(n)
    if name == "pop":
        if n == 0:
            _set_prop(heap, self_v, "length", 0.0)
            return UNDEF
        last = get_prop(heap.store, self_v, str(n - 1))
        o = heap.obj(self_v)
        props = {k: v for k, v in o.props.items() if k != str(n - 1)}
        heap.write(self_v, replace(o, props=props))
        _set_prop(heap, self_v, "length", float(n - 1))
        return last
    items = _items(heap, self_v, n)
    return ",".join("" if v is NULL or v is UNDEF else to_str(v) for v in items)


def _wrap(heap: _Heap, v: Primitive, site: int, hp: tuple) -> Addr:
    tag = WRAPPER_TAGS[type_name(v)]
    return heap.alloc(AbsAddr(site, hp, tag),
                      CObject(tag, {}, builtin(OBJECT_PROTO), primitive=v))


# ---------------------------------------------------------------------------
# The machine
# ---------------------------------------------------------------------------


def global_cell(program: Decl) -> Addr:
    return Addr(0, AbsAddr(program.nid, (), f"var:{GLOBAL_VAR}"))


def initial_state(program: Decl, strategy="fs") -> ConcreteState:
    """Program entry with the builtin heap and ``global`` bound to the global object."""
    trace = parse_sensitivity(strategy)
    store = initial_store()
    cell = global_cell(program)
    store[cell] = builtin(GLOBAL)
    trace = trace.update(StepTo(statement_point(program.nid)))
    return ConcreteState(program, {GLOBAL_VAR: cell}, store, (), trace)


def _call_values(heap: _Heap, args: CValue) -> Tuple[CValue, ...]:
    return tuple(get_prop(heap.store, args, str(i)) for i in range(MAX_SIG_ARGS))


def _enter(state: ConcreteState, heap: _Heap, node, fun: CObject, self_v: CValue,
           args: CValue, is_ctor: bool, receiver: Optional[Addr]):
    meth, cenv = fun.closure
    event = CallEvent(
        site=node.nid,
        callee=meth.nid,
        self_value=alpha(self_v),
        args_value=alpha(args),
        arg_values=tuple(alpha(v) for v in _call_values(heap, args)),
        point=statement_point(meth.body.nid),
    )
    trace = state.trace.update(event)
    hp = trace.heap_prefix()
    env = dict(cenv)
    env["self"] = heap.alloc(AbsAddr(meth.nid, hp, "var:self"), self_v)
    env["args"] = heap.alloc(AbsAddr(meth.nid, hp, "var:args"), args)
    frame = RetK(node, node.var, state.env, is_ctor, receiver, state.trace, meth.nid)
    return meth.body, env, state.kont + (frame,), trace


def _callable(heap: _Heap, f: CValue) -> Optional[CObject]:
    if isinstance(f, Addr):
        o = heap.obj(f)
        if o.tag == "function":
            return o
    return None


def _exec_stmt(state: ConcreteState, heap: _Heap):
    """One step on a statement term; returns (term, env, kont, trace)."""
    s, env, kont, trace = state.term, state.env, state.kont, state.trace
    hp = trace.heap_prefix()

    def ev(e):
        return eval_exp(e, env, heap.store)

    def assign(var, v):
        heap.write(env[var], v)

    if isinstance(s, Decl):
        env = dict(env)
        for x, _ in s.bindings:
            env[x] = heap.alloc(AbsAddr(s.nid, hp, f"var:{x}"), UNDEF)
        for x, e in s.bindings:
            heap.write(env[x], eval_exp(e, env, heap.store))
        return s.body, env, kont, trace
    if isinstance(s, Seq):
        if not s.stmts:
            return Value(UNDEF), env, kont, trace
        return s.stmts[0], env, kont + (SeqK(s, 1),), trace
    if isinstance(s, If):
        return (s.then if to_bool(ev(s.guard)) else s.orelse), env, kont, trace
    if isinstance(s, While):
        if to_bool(ev(s.guard)):
            return s.body, env, kont + (WhileK(s),), trace
        return Value(UNDEF), env, kont, trace
    if isinstance(s, AssignVar):
        v = ev(s.exp)
        assign(s.var, v)
        return Value(v), env, kont, trace
    if isinstance(s, AssignProp):
        o, key, v = ev(s.obj), ev(s.key), ev(s.val)
        if o is NULL or o is UNDEF:
            raise _JSError("TypeError")
        if isinstance(o, Addr):
            _set_prop(heap, o, to_str(key), v)
        return Value(v), env, kont, trace
    if isinstance(s, Call):
        f, self_v, args = ev(s.fun), ev(s.self_exp), ev(s.args)
        fun = _callable(heap, f)
        if fun is None:
            raise _JSError("TypeError")
        if fun.native is not None:
            r = _native_call(fun.native, heap, self_v, args, s.nid, hp)
            assign(s.var, r)
            return Value(r), env, kont, trace
        return _enter(state, heap, s, fun, self_v, args, False, None)
    if isinstance(s, NewCall):
        f, args = ev(s.ctor), ev(s.args)
        fun = _callable(heap, f)
        if fun is None:
            raise _JSError("TypeError")
        proto = get_prop(heap.store, f, "prototype")
        if not isinstance(proto, Addr):
            proto = builtin(OBJECT_PROTO)
        receiver = CObject("object", {}, proto)
        if fun.native is not None:
            # builtin constructors build their own result; the receiver is
            # only allocated when they return a primitive
            r = _native_call(fun.native, heap, UNDEF, args, s.nid, hp)
            if not isinstance(r, Addr):
                r = heap.alloc(AbsAddr(s.nid, hp, "object"), receiver)
            assign(s.var, r)
            return Value(r), env, kont, trace
        receiver = heap.alloc(AbsAddr(s.nid, hp, "object"), receiver)
        return _enter(state, heap, s, fun, receiver, args, True, receiver)
    if isinstance(s, ToObj):
        v = ev(s.exp)
        if v is NULL or v is UNDEF:
            raise _JSError("TypeError")
        if not isinstance(v, Addr):
            v = _wrap(heap, v, s.nid, hp)
        assign(s.var, v)
        return Value(v), env, kont, trace
    if isinstance(s, DeleteProp):
        o, key = ev(s.obj), ev(s.key)
        if o is NULL or o is UNDEF:
            raise _JSError("TypeError")
        result = True
        if isinstance(o, Addr):
            k = to_str(key)
            obj = heap.obj(o)
            if k in obj.props:
                if k in obj.hidden:
                    result = False
                else:
                    props = {n: v for n, v in obj.props.items() if n != k}
                    heap.write(o, replace(obj, props=props))
        assign(s.var, result)
        return Value(result), env, kont, trace
    if isinstance(s, NewFun):
        fun_tag = AbsAddr(s.nid, hp, "function")
        fun = heap.alloc(fun_tag, CObject("function", {}, builtin(FUNCTION_PROTO),
                                          closure=(s.meth, env)))
        proto = heap.alloc(AbsAddr(s.nid, hp, "object"),
                           CObject("object", {"constructor": fun}, builtin(OBJECT_PROTO),
                                   frozenset({"constructor"})))
        heap.write(fun, replace(heap.obj(fun), props={"length": s.arity, "prototype": proto},
                                hidden=frozenset({"length", "prototype"})))
        assign(s.var, fun)
        return Value(fun), env, kont, trace
    if isinstance(s, Throw):
        return Exc(ev(s.exp)), env, kont, trace
    if isinstance(s, TryCatchFin):
        return s.body, env, kont + (TryK(s, env),), trace
    if isinstance(s, Label):
        return s.body, env, kont + (LabelK(s, env),), trace
    if isinstance(s, Break):
        return Jump(s.label, ev(s.exp)), env, kont, trace
    if isinstance(s, ForIn):
        o = ev(s.obj)
        if not isinstance(o, Addr):
            return Value(UNDEF), env, kont, trace
        return Value(UNDEF), env, kont + (ForK(s, o, enumerate_keys(heap.store, o), env),), trace
    raise MachineError(f"not a statement: {s!r}")


def _continue(state: ConcreteState, heap: _Heap):
    """One step on a value, exception or jump term; returns (term, env, kont, trace)."""
    term, env, trace = state.term, state.env, state.trace
    frame, kont = state.kont[-1], state.kont[:-1]

    if isinstance(frame, RetK):
        if isinstance(term, Jump):
            raise MachineError(f"break {term.label} escaped a method")
        caller = frame.caller
        if isinstance(term, Value):
            v = term.value
            if frame.is_ctor and not isinstance(v, Addr):
                v = frame.receiver
            heap.write(frame.env[frame.var], v)
            term = Value(v)
        return term, frame.env, kont, trace.update(ReturnEvent(caller, caller.point))
    if isinstance(frame, TryK) and isinstance(term, Exc):
        s = frame.node
        cell = heap.alloc(AbsAddr(s.nid, trace.heap_prefix(), f"var:{s.var}"), term.value)
        env = dict(frame.env)
        env[s.var] = cell
        return s.catch, env, kont + (CatchK(s, frame.env),), trace
    if isinstance(frame, (TryK, CatchK)):
        return frame.node.finally_, frame.env, kont + (FinallyK(frame.node, term, frame.env),), trace
    if isinstance(frame, FinallyK):
        if isinstance(term, Value):
            term = frame.pending
        return term, frame.env, kont, trace
    if isinstance(frame, LabelK):
        if isinstance(term, Jump) and term.label == frame.node.label:
            return Value(term.value), frame.env, kont, trace
        return term, frame.env, kont, trace
    if not isinstance(term, Value):
        # exceptions and jumps unwind through the remaining frames
        return term, env, kont, trace
    if isinstance(frame, SeqK):
        stmts = frame.node.stmts
        if frame.index < len(stmts):
            return stmts[frame.index], env, kont + (SeqK(frame.node, frame.index + 1),), trace
        return term, env, kont, trace
    if isinstance(frame, WhileK):
        return frame.node, env, kont, trace
    if isinstance(frame, ForK):
        keys = frame.keys
        while keys and not has_prop(heap.store, frame.obj, keys[0]):
            keys = keys[1:]
        if not keys:
            return Value(UNDEF), frame.env, kont, trace
        heap.write(frame.env[frame.node.var], keys[0])
        return (frame.node.body, frame.env,
                kont + (ForK(frame.node, frame.obj, keys[1:], frame.env),), trace)
    raise MachineError(f"unknown frame {frame!r}")


def _error_object(heap: _Heap, name: str, nid: int, hp: tuple) -> Addr:
    return heap.alloc(AbsAddr(nid, hp, "error"),
                      CObject("error", {"name": name}, builtin(OBJECT_PROTO), frozenset({"name"})))


def step(state: ConcreteState) -> ConcreteState:
    """The unique successor of a non-final state."""
    if state.is_final():
        raise MachineError("step on a final state")
    heap = _Heap(state.store, state.next_id)
    if isinstance(state.term, (Value, Exc, Jump)):
        term, env, kont, trace = _continue(state, heap)
    else:
        try:
            term, env, kont, trace = _exec_stmt(state, heap)
        except _JSError as err:
            heap = _Heap(state.store, state.next_id)
            addr = _error_object(heap, err.name, state.term.nid, state.trace.heap_prefix())
            term, env, kont, trace = Exc(addr), state.env, state.kont, state.trace
    trace = trace.update(StepTo(term_point(term, kont)))
    return ConcreteState(term, env, heap.store, kont, trace, heap.next_id,
                         state.output + tuple(heap.output))


@dataclass
class Outcome:
    """Result of a concrete run.

    ``kind`` is ``Halted``, ``UncaughtException`` or ``FuelExhausted``;
    ``value`` is the completion or exception value (``None`` when fuel ran out).
    """

    kind: str
    value: Optional[CValue]
    steps: int
    output: Tuple[str, ...]
    final: ConcreteState
    states: List[ConcreteState] = field(default_factory=list)

    def describe(self) -> str:
        if self.kind == "FuelExhausted":
            return f"FuelExhausted({self.steps})"
        v = self.value
        if isinstance(v, Addr):
            shown = f"<{self.final.store[v].tag} {v!r}>"
        elif isinstance(v, str):
            shown = repr(v)
        else:
            shown = to_str(v) if isinstance(v, (float, bool)) else repr(v)
        return f"{self.kind}({shown})"


def run(program: Decl, fuel: int = 10_000, strategy="fs",
        record_states: bool = False) -> Outcome:
    """Run a validated program for at most ``fuel`` steps.

    Parameters
    ----------
    program : Decl
        A validated, numbered program.
    fuel : int
        Maximum number of machine steps.
    strategy : str or Trace
        Sensitivity whose traces (and so allocation tags) the run records.
    record_states : bool
        Keep every visited state, for the soundness harness.

    Returns
    -------
    Outcome
    """
    assert fuel > 0, f"fuel must be positive, got {fuel}"
    state = initial_state(program, strategy)
    states = [state] if record_states else []
    steps = 0
    while not state.is_final():
        if steps >= fuel:
            return Outcome("FuelExhausted", None, steps, state.output, state, states)
        state = step(state)
        steps += 1
        if record_states:
            states.append(state)
    if isinstance(state.term, Jump):
        raise MachineError(f"break {state.term.label} escaped the program")
    kind = "Halted" if isinstance(state.term, Value) else "UncaughtException"
    return Outcome(kind, state.term.value, steps, state.output, state, states)
