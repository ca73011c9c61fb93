"""Layout of the builtin global object and its prototypes.

Both interpreters build their initial heap from ``BUILTINS``: the concrete
machine instantiates the objects directly and the abstract machine
abstracts that concrete heap. Builtin objects live at negative allocation
sites so they never collide with program NodeIds.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

from .utils import UNDEF, JSUndefined

GLOBAL = -1
OBJECT_PROTO = -2
FUNCTION_PROTO = -3
ARRAY_PROTO = -4
OBJECT_CTOR = -5
ARRAY_CTOR = -6
FUNCTION_CTOR = -7
IS_NAN = -8
EVAL = -9
PRINT = -10
TO_STRING = -11
VALUE_OF = -12
HAS_OWN_PROPERTY = -13
ARRAY_PUSH = -14
ARRAY_POP = -15
ARRAY_JOIN = -16

# Property values: a negative int refers to another builtin, anything else
# is a primitive.
PropRef = Union[int, float, JSUndefined]


@dataclass(frozen=True)
class BuiltinSpec:
    site: int
    class_tag: str
    proto: Optional[int]
    props: Tuple[Tuple[str, PropRef], ...] = ()
    native: Optional[str] = None


def _native(site: int, name: str) -> BuiltinSpec:
    return BuiltinSpec(site, "function", FUNCTION_PROTO, (), name)


BUILTINS: Tuple[BuiltinSpec, ...] = (
    BuiltinSpec(
        GLOBAL, "object", OBJECT_PROTO,
        (
            ("undefined", UNDEF),
            ("NaN", math.nan),
            ("Infinity", math.inf),
            ("isNaN", IS_NAN),
            ("eval", EVAL),
            ("Object", OBJECT_CTOR),
            ("Array", ARRAY_CTOR),
            ("Function", FUNCTION_CTOR),
            ("print", PRINT),
        ),
    ),
    BuiltinSpec(
        OBJECT_PROTO, "object", None,
        (
            ("toString", TO_STRING),
            ("valueOf", VALUE_OF),
            ("hasOwnProperty", HAS_OWN_PROPERTY),
            ("constructor", OBJECT_CTOR),
        ),
    ),
    BuiltinSpec(FUNCTION_PROTO, "function", OBJECT_PROTO,
                (("constructor", FUNCTION_CTOR),), "noop"),
    BuiltinSpec(
        ARRAY_PROTO, "object", OBJECT_PROTO,
        (
            ("push", ARRAY_PUSH),
            ("pop", ARRAY_POP),
            ("join", ARRAY_JOIN),
            ("constructor", ARRAY_CTOR),
        ),
    ),
    BuiltinSpec(OBJECT_CTOR, "function", FUNCTION_PROTO,
                (("prototype", OBJECT_PROTO),), "Object"),
    BuiltinSpec(ARRAY_CTOR, "function", FUNCTION_PROTO,
                (("prototype", ARRAY_PROTO),), "Array"),
    BuiltinSpec(FUNCTION_CTOR, "function", FUNCTION_PROTO,
                (("prototype", FUNCTION_PROTO),), "Function"),
    _native(IS_NAN, "isNaN"),
    _native(EVAL, "eval"),
    _native(PRINT, "print"),
    _native(TO_STRING, "toString"),
    _native(VALUE_OF, "valueOf"),
    _native(HAS_OWN_PROPERTY, "hasOwnProperty"),
    _native(ARRAY_PUSH, "push"),
    _native(ARRAY_POP, "pop"),
    _native(ARRAY_JOIN, "join"),
)

# Own-property names of the builtins. Anything in here is a "special"
# string unless it is also the canonical form of a number.
SPECIAL_STRINGS = frozenset(
    {
        "valueOf", "toString", "hasOwnProperty", "constructor", "prototype",
        "length", "push", "pop", "join", "isNaN", "eval", "Object", "Array",
        "Function", "NaN", "Infinity", "undefined", "print",
    }
)

# [[Class]] names reported by Object.prototype.toString
CLASS_NAMES = {
    "function": "Function",
    "array": "Array",
    "string": "String",
    "boolean": "Boolean",
    "number": "Number",
    "date": "Date",
    "error": "Error",
    "regexp": "RegExp",
    "arguments": "Object",
    "object": "Object",
}

# Wrapper class produced by ToObject for each primitive typeof name
WRAPPER_TAGS = {"number": "number", "string": "string", "boolean": "boolean"}
