"""Abstract value lattices, the reduced-product base value and abstract objects.

Every domain value is immutable. ``join``/``leq`` are defined for each
lattice; object and store operations are pure functions returning new values.
"""

import math
from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Set, Tuple

from .builtin_objects import SPECIAL_STRINGS
from .utils import (NULL, UNDEF, float_key, is_array_index, is_numeric_string,
                    is_uint32, number_to_string, string_to_number)

NUMERIC = "numeric"
SPECIAL = "special"
OTHER = "other"


class ClassMismatch(Exception):
    """Two abstract objects with different class tags were joined."""


class LookupOnNonObject(Exception):
    """An address used as an object maps to a non-object store entry."""


# ---------------------------------------------------------------------------
# Immutable maps
# ---------------------------------------------------------------------------


class FrozenMap(Mapping):
    """Hashable read-only mapping; updates return new maps."""

    __slots__ = ("_d", "_h")

    def __init__(self, items=None):
        self._d = dict(items) if items else {}
        self._h = None

    @classmethod
    def _wrap(cls, d: dict) -> "FrozenMap":
        m = cls.__new__(cls)
        m._d = d
        m._h = None
        return m

    def __getitem__(self, key):
        return self._d[key]

    def __iter__(self):
        return iter(self._d)

    def __len__(self):
        return len(self._d)

    def __contains__(self, key):
        return key in self._d

    def get(self, key, default=None):
        return self._d.get(key, default)

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, FrozenMap):
            return NotImplemented
        return self._d == other._d

    def __hash__(self):
        if self._h is None:
            self._h = hash(frozenset(self._d.items()))
        return self._h

    def __repr__(self):
        return f"FrozenMap({self._d!r})"

    def set(self, key, value) -> "FrozenMap":
        d = dict(self._d)
        d[key] = value
        return FrozenMap._wrap(d)

    def update(self, items: Mapping) -> "FrozenMap":
        if not items:
            return self
        d = dict(self._d)
        d.update(items)
        return FrozenMap._wrap(d)

    def remove(self, key) -> "FrozenMap":
        if key not in self._d:
            return self
        d = dict(self._d)
        del d[key]
        return FrozenMap._wrap(d)


EMPTY_MAP = FrozenMap()


def map_join(a: FrozenMap, b: FrozenMap, join) -> FrozenMap:
    """Pointwise join over the union of keys."""
    if a is b or not b:
        return a
    if not a:
        return b
    d = dict(a._d)
    changed = False
    for k, v in b._d.items():
        old = d.get(k)
        if old is None:
            d[k] = v
            changed = True
        elif old is not v:
            new = join(old, v)
            if new != old:
                d[k] = new
                changed = True
    return FrozenMap._wrap(d) if changed else a


def map_leq(a: FrozenMap, b: FrozenMap, leq) -> bool:
    if a is b:
        return True
    for k, v in a._d.items():
        w = b._d.get(k)
        if w is None or not (v is w or leq(v, w)):
            return False
    return True


# ---------------------------------------------------------------------------
# Numbers: constant propagation
# ---------------------------------------------------------------------------


class AbsNum:
    """Bot, a single double (NaN allowed, compared bitwise) or Top."""

    __slots__ = ("kind", "value", "_key")

    BOT, CONST, TOP = 0, 1, 2

    def __init__(self, kind: int, value: float = 0.0):
        self.kind = kind
        self.value = value
        self._key = (kind, float_key(value) if kind == AbsNum.CONST else 0)

    @classmethod
    def const(cls, x: float) -> "AbsNum":
        return cls(cls.CONST, float(x))

    def is_bot(self) -> bool:
        return self.kind == AbsNum.BOT

    def is_const(self) -> bool:
        return self.kind == AbsNum.CONST

    def is_top(self) -> bool:
        return self.kind == AbsNum.TOP

    def __eq__(self, other):
        return isinstance(other, AbsNum) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        if self.kind == AbsNum.CONST:
            return f"Num({self.value!r})"
        return "NumBot" if self.kind == AbsNum.BOT else "NumTop"


NUM_BOT = AbsNum(AbsNum.BOT)
NUM_TOP = AbsNum(AbsNum.TOP)


def num_leq(a: AbsNum, b: AbsNum) -> bool:
    return a.kind == AbsNum.BOT or b.kind == AbsNum.TOP or a == b


def num_join(a: AbsNum, b: AbsNum) -> AbsNum:
    if num_leq(a, b):
        return b
    if num_leq(b, a):
        return a
    return NUM_TOP


def num_lift1(f, a: AbsNum) -> AbsNum:
    if a.kind != AbsNum.CONST:
        return a
    return AbsNum.const(f(a.value))


def num_lift2(f, a: AbsNum, b: AbsNum) -> AbsNum:
    if a.is_bot() or b.is_bot():
        return NUM_BOT
    if a.is_const() and b.is_const():
        return AbsNum.const(f(a.value, b.value))
    return NUM_TOP


# ---------------------------------------------------------------------------
# Booleans: powerset of {True, False}
# ---------------------------------------------------------------------------

AbsBool = FrozenSet[bool]
BOOL_BOT: AbsBool = frozenset()
BOOL_TRUE: AbsBool = frozenset({True})
BOOL_FALSE: AbsBool = frozenset({False})
BOOL_TOP: AbsBool = frozenset({True, False})


def bool_leq(a: AbsBool, b: AbsBool) -> bool:
    return a <= b


def bool_join(a: AbsBool, b: AbsBool) -> AbsBool:
    return a | b


def bool_lift2(f, a: AbsBool, b: AbsBool) -> AbsBool:
    return frozenset(f(x, y) for x in a for y in b)


# ---------------------------------------------------------------------------
# Strings
# ---------------------------------------------------------------------------

# Special strings that are not also numeric ("NaN" and "Infinity" are numeric)
SPECIAL_ONLY: Tuple[str, ...] = tuple(
    sorted(s for s in SPECIAL_STRINGS if not is_numeric_string(s)))
_SPECIAL_SET = frozenset(SPECIAL_ONLY)


def classify_str(s: str) -> str:
    """Category of a concrete string: ``numeric``, ``special`` or ``other``.

    Numeric wins over special, so ``"NaN"`` and ``"Infinity"`` are numeric.
    """
    if is_numeric_string(s):
        return NUMERIC
    if s in _SPECIAL_SET:
        return SPECIAL
    return OTHER


_CATEGORY_NAMES = {
    frozenset({NUMERIC}): "SNum",
    frozenset({OTHER}): "SNotNumNorSpl",
    frozenset({SPECIAL}): "SSpl",
    frozenset({NUMERIC, OTHER}): "SNotSpl",
    frozenset({SPECIAL, OTHER}): "SNotNum",
    frozenset({NUMERIC, SPECIAL, OTHER}): "Top",
}


class AbsStr:
    """Element of the string lattice.

    A non-constant element is identified by the set of string categories it
    admits; a constant additionally pins the exact string.
    """

    __slots__ = ("cats", "const", "_key")

    def __init__(self, cats: FrozenSet[str], const: Optional[str] = None):
        self.cats = cats
        self.const = const
        self._key = (cats, const)

    @classmethod
    def of(cls, s: str) -> "AbsStr":
        return cls(frozenset({classify_str(s)}), s)

    @property
    def kind(self) -> str:
        if not self.cats:
            return "Bot"
        if self.const is not None:
            return "Const"
        return _CATEGORY_NAMES[self.cats]

    def is_bot(self) -> bool:
        return not self.cats

    def is_const(self) -> bool:
        return self.const is not None

    def __eq__(self, other):
        return isinstance(other, AbsStr) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        if self.const is not None:
            return f"Str({self.const!r})"
        return "StrBot" if not self.cats else self.kind


STR_BOT = AbsStr(frozenset())
STR_SNUM = AbsStr(frozenset({NUMERIC}))
STR_SNOTNUMNORSPL = AbsStr(frozenset({OTHER}))
STR_SSPL = AbsStr(frozenset({SPECIAL}))
STR_SNOTSPL = AbsStr(frozenset({NUMERIC, OTHER}))
STR_SNOTNUM = AbsStr(frozenset({SPECIAL, OTHER}))
STR_TOP = AbsStr(frozenset({NUMERIC, SPECIAL, OTHER}))


def str_from_cats(cats: Iterable[str]) -> AbsStr:
    cats = frozenset(cats)
    if not cats:
        return STR_BOT
    if NUMERIC in cats and SPECIAL in cats:
        return STR_TOP
    return AbsStr(cats)


def str_leq(a: AbsStr, b: AbsStr) -> bool:
    if not a.cats:
        return True
    if b.const is not None:
        return a.const == b.const
    return a.cats <= b.cats


def str_join(a: AbsStr, b: AbsStr) -> AbsStr:
    if str_leq(a, b):
        return b
    if str_leq(b, a):
        return a
    return str_from_cats(a.cats | b.cats)


def str_member(a: AbsStr, s: str) -> bool:
    """Whether the concrete string ``s`` is described by ``a``."""
    if a.const is not None:
        return a.const == s
    return classify_str(s) in a.cats


# Characters that can occur in a canonical number string
_NUMERIC_CHARS = frozenset("0123456789.-+eInfityaN")


def _may_be_numeric_part(a: AbsStr) -> bool:
    if a.const is not None:
        return set(a.const) <= _NUMERIC_CHARS
    return a.cats != frozenset({SPECIAL})


def str_concat(a: AbsStr, b: AbsStr) -> AbsStr:
    """Abstract ``++``; exact on constants, a category bound otherwise."""
    if a.is_bot() or b.is_bot():
        return STR_BOT
    if a.const is not None and b.const is not None:
        return AbsStr.of(a.const + b.const)
    if a.const == "":
        return b
    if b.const == "":
        return a
    cats = {OTHER}
    if _may_be_numeric_part(a) and _may_be_numeric_part(b):
        cats.add(NUMERIC)
    for s in SPECIAL_ONLY:
        if any(str_member(a, s[:i]) and str_member(b, s[i:]) for i in range(len(s) + 1)):
            cats.add(SPECIAL)
            break
    return str_from_cats(cats)


def str_tonum(a: AbsStr) -> AbsNum:
    if a.is_bot():
        return NUM_BOT
    if a.const is not None:
        return AbsNum.const(string_to_number(a.const))
    if a.cats == frozenset({SPECIAL}):
        # every special string is an identifier-like word
        return AbsNum.const(math.nan)
    return NUM_TOP


def num_tostr(n: AbsNum) -> AbsStr:
    if n.is_bot():
        return STR_BOT
    if n.is_const():
        return AbsStr.of(number_to_string(n.value))
    return STR_SNUM


# ---------------------------------------------------------------------------
# Addresses and base values
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=False)
class AbsAddr:
    """Allocation site, heap context and class tag.

    ``tag`` is an object class tag, ``var:<name>`` for variable cells or
    ``kont`` for continuation cells.
    """

    site: int
    ctx: tuple
    tag: str

    def __repr__(self):
        ctx = ",".join(map(repr, self.ctx))
        return f"@{self.site}[{ctx}]{self.tag}"


@dataclass(frozen=True)
class BValue:
    """Reduced product of numbers, booleans, strings, addresses, null and undef."""

    num: AbsNum = NUM_BOT
    bools: AbsBool = BOOL_BOT
    string: AbsStr = STR_BOT
    addrs: FrozenSet[AbsAddr] = frozenset()
    null: bool = False
    undef: bool = False

    def is_bot(self) -> bool:
        return (self.num.is_bot() and not self.bools and self.string.is_bot()
                and not self.addrs and not self.null and not self.undef)

    def typeset(self) -> FrozenSet[str]:
        names = set()
        if not self.num.is_bot():
            names.add("num")
        if self.bools:
            names.add("bool")
        if not self.string.is_bot():
            names.add("str")
        if self.addrs:
            names.add("addr")
        if self.null:
            names.add("null")
        if self.undef:
            names.add("undef")
        return frozenset(names)

    def has_non_addr(self) -> bool:
        return (not self.num.is_bot() or bool(self.bools) or not self.string.is_bot()
                or self.null or self.undef)

    def may_be_nullish(self) -> bool:
        return self.null or self.undef

    def only_addrs(self) -> "BValue":
        return BValue(addrs=self.addrs) if self.has_non_addr() else self

    def without_nullish(self) -> "BValue":
        return BValue(self.num, self.bools, self.string, self.addrs)

    def without_addrs(self) -> "BValue":
        return BValue(self.num, self.bools, self.string, frozenset(), self.null, self.undef)

    def join(self, other: "BValue") -> "BValue":
        if self is other:
            return self
        return BValue(
            num_join(self.num, other.num),
            self.bools | other.bools,
            str_join(self.string, other.string),
            self.addrs | other.addrs,
            self.null or other.null,
            self.undef or other.undef,
        )

    def leq(self, other: "BValue") -> bool:
        if self is other:
            return True
        return (num_leq(self.num, other.num) and self.bools <= other.bools
                and str_leq(self.string, other.string) and self.addrs <= other.addrs
                and (not self.null or other.null) and (not self.undef or other.undef))

    def __repr__(self):
        parts = []
        if not self.num.is_bot():
            parts.append(repr(self.num))
        if self.bools:
            parts.append("Bool" + repr(sorted(self.bools)))
        if not self.string.is_bot():
            parts.append(repr(self.string))
        if self.addrs:
            parts.append("{" + ", ".join(sorted(map(repr, self.addrs))) + "}")
        if self.null:
            parts.append("null")
        if self.undef:
            parts.append("undef")
        return "BV(" + " | ".join(parts) + ")" if parts else "BV(⊥)"


BV_BOT = BValue()
UNDEF_BV = BValue(undef=True)
NULL_BV = BValue(null=True)
TRUE_BV = BValue(bools=BOOL_TRUE)
FALSE_BV = BValue(bools=BOOL_FALSE)


def bv_num(x: float) -> BValue:
    return BValue(num=AbsNum.const(x))


def bv_str(s: str) -> BValue:
    return BValue(string=AbsStr.of(s))


def bv_bool(b: AbsBool) -> BValue:
    return BValue(bools=b)


def bv_addr(*addrs: AbsAddr) -> BValue:
    return BValue(addrs=frozenset(addrs))


def bv_join_all(values: Iterable[BValue]) -> BValue:
    out = BV_BOT
    for v in values:
        out = out.join(v)
    return out


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------

AbsEnv = FrozenMap  # var name -> frozenset of AbsAddr
EMPTY_ENV: AbsEnv = EMPTY_MAP


def env_join(a: AbsEnv, b: AbsEnv) -> AbsEnv:
    return map_join(a, b, frozenset.union)


def env_leq(a: AbsEnv, b: AbsEnv) -> bool:
    return map_leq(a, b, frozenset.issubset)


# ---------------------------------------------------------------------------
# Objects
# ---------------------------------------------------------------------------


def _closure_join(a, b):
    return env_join(a, b)


@dataclass(frozen=True)
class AbsObject:
    """One-class abstract object.

    ``props`` holds exactly-named properties. A name missing from ``props``
    reads from ``num_summary`` or ``str_summary`` by category; special names
    only ever live in ``props``. ``closures`` maps a method NodeId (or a
    native name) to the join of the environments captured for it.
    """

    tag: str
    props: FrozenMap = EMPTY_MAP
    present: FrozenSet[str] = frozenset()
    hidden: FrozenSet[str] = frozenset()
    num_summary: BValue = BV_BOT
    str_summary: BValue = BV_BOT
    closures: FrozenMap = EMPTY_MAP
    proto: BValue = NULL_BV
    primitive: BValue = BV_BOT

    def get(self, name: str) -> BValue:
        v = self.props.get(name)
        if v is not None:
            return v
        cat = classify_str(name)
        if cat == NUMERIC:
            return self.num_summary
        if cat == OTHER:
            return self.str_summary
        return BV_BOT

    def matching(self, key: AbsStr) -> BValue:
        """Join of every property value whose name ``key`` may denote."""
        out = BV_BOT
        if NUMERIC in key.cats and key.const is None:
            out = out.join(self.num_summary)
        if OTHER in key.cats and key.const is None:
            out = out.join(self.str_summary)
        for name, v in self.props.items():
            if str_member(key, name):
                out = out.join(v)
        if key.const is not None and key.const not in self.props:
            out = out.join(self.get(key.const))
        return out

    def is_function(self) -> bool:
        return self.tag == "function"


def obj_leq(a: AbsObject, b: AbsObject) -> bool:
    if a is b:
        return True
    if a.tag != b.tag:
        return False
    if not (b.present <= a.present and b.hidden <= a.hidden):
        return False
    if not (a.num_summary.leq(b.num_summary) and a.str_summary.leq(b.str_summary)
            and a.proto.leq(b.proto) and a.primitive.leq(b.primitive)):
        return False
    for name in set(a.props) | set(b.props):
        if not a.get(name).leq(b.get(name)):
            return False
    return map_leq(a.closures, b.closures, env_leq)


def obj_join(a: AbsObject, b: AbsObject) -> AbsObject:
    if a is b:
        return a
    if a.tag != b.tag:
        raise ClassMismatch(f"cannot join {a.tag} object with {b.tag} object")
    props = {name: a.get(name).join(b.get(name)) for name in set(a.props) | set(b.props)}
    return AbsObject(
        tag=a.tag,
        props=FrozenMap(props),
        present=a.present & b.present,
        hidden=a.hidden & b.hidden,
        num_summary=a.num_summary.join(b.num_summary),
        str_summary=a.str_summary.join(b.str_summary),
        closures=map_join(a.closures, b.closures, _closure_join),
        proto=a.proto.join(b.proto),
        primitive=a.primitive.join(b.primitive),
    )


# ---------------------------------------------------------------------------
# Store
# ---------------------------------------------------------------------------


def entry_join(a, b):
    if isinstance(a, BValue):
        return a.join(b)
    if isinstance(a, AbsObject):
        return obj_join(a, b)
    # continuation sets: FrozenMap of frames that know how to join
    return map_join(a, b, lambda x, y: x.join(y))


def entry_leq(a, b) -> bool:
    if isinstance(a, BValue):
        return a.leq(b)
    if isinstance(a, AbsObject):
        return obj_leq(a, b)
    return map_leq(a, b, lambda x, y: x.leq(y))


@dataclass(frozen=True)
class AbsStore:
    """Map from abstract addresses to values, objects or continuation sets.

    ``many`` holds the addresses allocated more than once; only addresses
    outside it admit strong updates.
    """

    entries: FrozenMap = EMPTY_MAP
    many: FrozenSet[AbsAddr] = frozenset()

    def __contains__(self, addr: AbsAddr) -> bool:
        return addr in self.entries

    def __getitem__(self, addr: AbsAddr):
        return self.entries[addr]

    def obj(self, addr: AbsAddr) -> AbsObject:
        o = self.entries.get(addr)
        if not isinstance(o, AbsObject):
            raise LookupOnNonObject(f"{addr!r} does not hold an object")
        return o

    def is_single(self, addr: AbsAddr) -> bool:
        return addr not in self.many

    def set(self, addr: AbsAddr, entry) -> "AbsStore":
        return AbsStore(self.entries.set(addr, entry), self.many)

    def set_many(self, updates: Dict[AbsAddr, object]) -> "AbsStore":
        return AbsStore(self.entries.update(updates), self.many)

    def alloc(self, addr: AbsAddr, entry) -> "AbsStore":
        """Allocate at ``addr``; a second allocation makes it a summary."""
        old = self.entries.get(addr)
        if old is None:
            return AbsStore(self.entries.set(addr, entry), self.many)
        return AbsStore(self.entries.set(addr, entry_join(old, entry)), self.many | {addr})

    def write(self, addrs: FrozenSet[AbsAddr], value: BValue) -> "AbsStore":
        """Variable write: strong iff a single non-summary address."""
        if len(addrs) == 1:
            (a,) = addrs
            if a not in self.many:
                return self.set(a, value)
        updates = {a: self.entries[a].join(value) if a in self.entries else value
                   for a in addrs}
        return self.set_many(updates)

    def read(self, addrs: FrozenSet[AbsAddr]) -> BValue:
        return bv_join_all(self.entries[a] for a in addrs if a in self.entries)

    def join(self, other: "AbsStore") -> "AbsStore":
        if self is other:
            return self
        return AbsStore(map_join(self.entries, other.entries, entry_join), self.many | other.many)

    def leq(self, other: "AbsStore") -> bool:
        if self is other:
            return True
        return self.many <= other.many and map_leq(self.entries, other.entries, entry_leq)


# ---------------------------------------------------------------------------
# Abstraction of concrete values
# ---------------------------------------------------------------------------


def alpha(v) -> BValue:
    """Abstract a concrete value; addresses abstract to their allocation tag."""
    if isinstance(v, bool):
        return BValue(bools=frozenset({v}))
    if isinstance(v, float):
        return bv_num(v)
    if isinstance(v, str):
        return bv_str(v)
    if v is NULL:
        return NULL_BV
    if v is UNDEF:
        return UNDEF_BV
    return BValue(addrs=frozenset({v.tag}))


def alpha_env(env: Mapping) -> AbsEnv:
    return FrozenMap({x: frozenset({a.tag}) for x, a in env.items()})


def alpha_obj(o) -> AbsObject:
    """Abstract a concrete object: every property exact and definitely present."""
    closures = EMPTY_MAP
    if o.native is not None:
        closures = FrozenMap({o.native: EMPTY_ENV})
    elif o.closure is not None:
        meth, env = o.closure
        closures = FrozenMap({meth.nid: alpha_env(env)})
    return AbsObject(
        tag=o.tag,
        props=FrozenMap({k: alpha(v) for k, v in o.props.items()}),
        present=frozenset(o.props),
        hidden=frozenset(o.hidden) & frozenset(o.props),
        closures=closures,
        proto=alpha(o.proto),
        primitive=BV_BOT if o.primitive is None else alpha(o.primitive),
    )


# ---------------------------------------------------------------------------
# Conversions on base values
# ---------------------------------------------------------------------------

_NAN = AbsNum.const(math.nan)
_ZERO = AbsNum.const(0.0)
_ONE = AbsNum.const(1.0)


def to_num(bv: BValue) -> AbsNum:
    n = bv.num
    if True in bv.bools:
        n = num_join(n, _ONE)
    if False in bv.bools:
        n = num_join(n, _ZERO)
    n = num_join(n, str_tonum(bv.string))
    if bv.null:
        n = num_join(n, _ZERO)
    if bv.undef or bv.addrs:
        n = num_join(n, _NAN)
    return n


def to_str(bv: BValue) -> AbsStr:
    s = str_join(bv.string, num_tostr(bv.num))
    for b in bv.bools:
        s = str_join(s, AbsStr.of("true" if b else "false"))
    if bv.null:
        s = str_join(s, AbsStr.of("null"))
    if bv.undef:
        s = str_join(s, AbsStr.of("undefined"))
    if bv.addrs:
        s = str_join(s, AbsStr.of("[object Object]"))
    return s


def to_bool(bv: BValue) -> AbsBool:
    out = set(bv.bools)
    n = bv.num
    if n.is_const():
        out.add(not (n.value == 0 or math.isnan(n.value)))
    elif n.is_top():
        out.update((True, False))
    s = bv.string
    if s.const is not None:
        out.add(s.const != "")
    elif OTHER in s.cats:
        out.update((True, False))
    elif s.cats:
        # numeric and special strings are never empty
        out.add(True)
    if bv.null or bv.undef:
        out.add(False)
    if bv.addrs:
        out.add(True)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Object operations
# ---------------------------------------------------------------------------


def _chain_lookup(store: AbsStore, proto: BValue, key: AbsStr,
                  visited: Set[AbsAddr]) -> Tuple[BValue, Set[bool]]:
    value, found = BV_BOT, set()
    for a in proto.addrs:
        if a not in visited:
            v, f = _lookup_one(store, a, key, visited)
            value, found = value.join(v), found | f
    if proto.has_non_addr() or proto.is_bot():
        value, found = value.join(UNDEF_BV), found | {False}
    return value, found


def _lookup_one(store: AbsStore, addr: AbsAddr, key: AbsStr,
                visited: Set[AbsAddr]) -> Tuple[BValue, Set[bool]]:
    visited.add(addr)
    o = store.obj(addr)
    value = o.matching(key)
    if key.const is not None and key.const in o.present:
        return value, {True}
    found = set() if value.is_bot() else {True}
    rest, rest_found = _chain_lookup(store, o.proto, key, visited)
    return value.join(rest), found | rest_found


def obj_lookup(store: AbsStore, addrs: Iterable[AbsAddr],
               key: AbsStr) -> Tuple[BValue, AbsBool]:
    """Property read through the prototype chain.

    Returns the joined value and whether the property is found (``True``),
    may be missing (``False``) or both. A chain that may end without the
    property contributes ``undef``.
    """
    value, found = BV_BOT, set()
    for a in addrs:
        v, f = _lookup_one(store, a, key, set())
        value, found = value.join(v), found | f
    return value, frozenset(found)


def _index_keys(o: AbsObject) -> FrozenSet[str]:
    return frozenset(k for k in o.props if is_array_index(k))


def _length_num(val: BValue) -> Tuple[AbsNum, bool]:
    """The length a value would set on an array, and whether it may be invalid."""
    n = to_num(val)
    if n.is_bot():
        return NUM_BOT, False
    if n.is_const():
        return (n, False) if is_uint32(n.value) else (NUM_BOT, True)
    return NUM_TOP, True


def _set_length(o: AbsObject, val: BValue, strong: bool) -> Tuple[AbsObject, bool]:
    n, flag = _length_num(val)
    if n.is_bot():
        return o, flag
    new_len = BValue(num=n)
    props = dict(o.props)
    present = o.present
    if strong:
        props["length"] = new_len
        present = present | {"length"}
        if n.is_const():
            for k in _index_keys(o):
                if int(k) >= n.value:
                    props[k] = BV_BOT
                    present = present - {k}
        else:
            present = present - _index_keys(o)
    else:
        props["length"] = o.get("length").join(new_len)
        present = present - _index_keys(o)
    return _with(o, props=FrozenMap(props), present=present), flag


def _grow_length(o: AbsObject, size: int, strong: bool) -> AbsObject:
    old = o.get("length").num
    if not old.is_const():
        return o
    grown = BValue(num=AbsNum.const(max(old.value, float(size))))
    new = grown if strong else o.get("length").join(grown)
    return _with(o, props=o.props.set("length", new))


_with = replace


def _update_one(o: AbsObject, key: AbsStr, val: BValue, strong: bool) -> Tuple[AbsObject, bool]:
    is_array = o.tag == "array"
    if key.const is not None:
        k = key.const
        if is_array and k == "length":
            return _set_length(o, val, strong)
        if strong:
            o2 = _with(o, props=o.props.set(k, val), present=o.present | {k})
        else:
            o2 = _with(o, props=o.props.set(k, o.get(k).join(val)))
        if is_array and is_array_index(k):
            o2 = _grow_length(o2, int(k) + 1, strong)
        return o2, False

    props = dict(o.props)
    for name in o.props:
        if str_member(key, name) and not (is_array and name == "length"):
            props[name] = props[name].join(val)
    if SPECIAL in key.cats:
        for name in SPECIAL_ONLY:
            if name not in props and not (is_array and name == "length"):
                props[name] = val
    num_summary, str_summary = o.num_summary, o.str_summary
    if NUMERIC in key.cats:
        num_summary = num_summary.join(val)
    if OTHER in key.cats:
        str_summary = str_summary.join(val)
    o2 = _with(o, props=FrozenMap(props), num_summary=num_summary, str_summary=str_summary)
    flag = False
    if is_array:
        if SPECIAL in key.cats:
            o2, flag = _set_length(o2, val, strong=False)
        if NUMERIC in key.cats:
            o2 = _with(o2, props=o2.props.set("length", o2.get("length").join(BValue(num=NUM_TOP))))
    return o2, flag


def _strong(store: AbsStore, addrs: FrozenSet[AbsAddr], key: AbsStr) -> bool:
    return key.const is not None and len(addrs) == 1 and store.is_single(next(iter(addrs)))


def obj_update(store: AbsStore, addrs: Iterable[AbsAddr], key: AbsStr,
               val: BValue) -> Tuple[AbsStore, FrozenSet[str]]:
    """Property write with strong/weak update and array length coupling.

    Returns the new store and a flag set, ``{"possibleRangeError"}`` when an
    array length may be set to a value that is not an unsigned 32-bit integer.
    """
    addrs = frozenset(addrs)
    strong = _strong(store, addrs, key)
    updates, flags = {}, set()
    for a in addrs:
        o2, flag = _update_one(store.obj(a), key, val, strong)
        updates[a] = o2
        if flag:
            flags.add("possibleRangeError")
    return store.set_many(updates), frozenset(flags)


def obj_delete(store: AbsStore, addrs: Iterable[AbsAddr],
               key: AbsStr) -> Tuple[AbsStore, AbsBool]:
    """Property delete; non-enumerable builtin properties are not deletable."""
    addrs = frozenset(addrs)
    strong = _strong(store, addrs, key)
    updates, result = {}, set()
    for a in addrs:
        o = store.obj(a)
        if key.const is not None:
            k = key.const
            if k in o.hidden:
                if k in o.present:
                    result.add(False)
                elif not o.get(k).is_bot():
                    result.update((True, False))
                else:
                    result.add(True)
                continue
            result.add(True)
            if strong:
                updates[a] = _with(o, props=o.props.set(k, BV_BOT), present=o.present - {k})
            else:
                updates[a] = _with(o, present=o.present - {k})
        else:
            result.add(True)
            if any(str_member(key, k) for k in o.hidden):
                result.add(False)
            gone = {k for k in o.present if k not in o.hidden and str_member(key, k)}
            updates[a] = _with(o, present=o.present - gone)
    return store.set_many(updates), frozenset(result)


def obj_enumerate(store: AbsStore,
                  addrs: Iterable[AbsAddr]) -> Tuple[FrozenSet[str], FrozenSet[AbsStr]]:
    """Names a for-in loop over ``addrs`` may visit.

    ``definite`` are enumerable own names present on every object;
    ``possible`` holds constants for the other exact names along the
    prototype chains plus a category for each non-empty summary.
    """
    definite: Optional[FrozenSet[str]] = None
    possible: Set[AbsStr] = set()
    for a in addrs:
        o = store.obj(a)
        own = frozenset(k for k in o.present
                        if k not in o.hidden and not o.get(k).is_bot())
        definite = own if definite is None else definite & own
        todo, seen = [a], set()
        while todo:
            b = todo.pop()
            if b in seen:
                continue
            seen.add(b)
            p = store.obj(b)
            for k, v in p.props.items():
                if k not in p.hidden and not v.is_bot():
                    possible.add(AbsStr.of(k))
            if not p.num_summary.is_bot():
                possible.add(STR_SNUM)
            if not p.str_summary.is_bot():
                possible.add(STR_SNOTNUMNORSPL)
            todo.extend(p.proto.addrs)
    definite = definite or frozenset()
    possible -= {AbsStr.of(k) for k in definite}
    return definite, frozenset(possible)
