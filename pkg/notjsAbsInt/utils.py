"""ECMAScript primitive values and conversions on IEEE-754 doubles."""

import math
import re
from functools import lru_cache
from typing import Union

import numpy as np

UINT32_RANGE = 2**32
INT32_HALF = 2**31
MAX_ARRAY_INDEX = UINT32_RANGE - 2


class JSNull:
    """The JavaScript null value (singleton)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "null"

    def __reduce__(self):
        return (JSNull, ())


class JSUndefined:
    """The JavaScript undefined value (singleton)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "undef"

    def __reduce__(self):
        return (JSUndefined, ())


NULL = JSNull()
UNDEF = JSUndefined()

Primitive = Union[float, bool, str, JSNull, JSUndefined]

# ECMA-3 StrWhiteSpaceChar plus the Zs category
_JS_WHITESPACE = (
    " \t\n\v\f\r\u00a0\u1680\u180e\u2000\u2001\u2002\u2003\u2004\u2005"
    "\u2006\u2007\u2008\u2009\u200a\u2028\u2029\u202f\u205f\u3000\ufeff"
)
_DECIMAL_LITERAL = re.compile(
    r"[+-]?(?:Infinity|(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?)"
)
_HEX_LITERAL = re.compile(r"0[xX][0-9a-fA-F]+")
_ARRAY_INDEX = re.compile(r"0|[1-9][0-9]*")


def float_key(x: float) -> int:
    """Bit pattern of a double, with every NaN mapped to one pattern.

    Two doubles are the same lattice constant iff their keys agree, so
    0.0 and -0.0 stay distinct while NaN equals itself.
    """
    if math.isnan(x):
        return 0x7FF8000000000000
    return int(np.float64(x).view(np.int64))


def same_float(a: float, b: float) -> bool:
    return float_key(a) == float_key(b)


# ---------------------------------------------------------------------------
# Arithmetic
# ---------------------------------------------------------------------------


def js_add(a: float, b: float) -> float:
    with np.errstate(all="ignore"):
        return float(np.float64(a) + np.float64(b))


def js_sub(a: float, b: float) -> float:
    with np.errstate(all="ignore"):
        return float(np.float64(a) - np.float64(b))


def js_mul(a: float, b: float) -> float:
    with np.errstate(all="ignore"):
        return float(np.float64(a) * np.float64(b))


def js_div(a: float, b: float) -> float:
    with np.errstate(all="ignore"):
        return float(np.float64(a) / np.float64(b))


def js_mod(a: float, b: float) -> float:
    """ECMA-3 ``%``: truncating remainder, sign of the dividend."""
    with np.errstate(all="ignore"):
        return float(np.fmod(np.float64(a), np.float64(b)))


def to_int32(x: Union[float, int]) -> int:
    if isinstance(x, float) and not math.isfinite(x):
        return 0
    n = math.trunc(x) % UINT32_RANGE
    return n - UINT32_RANGE if n >= INT32_HALF else n


def to_uint32(x: Union[float, int]) -> int:
    if isinstance(x, float) and not math.isfinite(x):
        return 0
    return math.trunc(x) % UINT32_RANGE


def js_shl(a: float, b: float) -> float:
    return float(to_int32(to_int32(a) << (to_uint32(b) & 31)))


def js_sar(a: float, b: float) -> float:
    return float(to_int32(a) >> (to_uint32(b) & 31))


def js_shr(a: float, b: float) -> float:
    return float(to_uint32(a) >> (to_uint32(b) & 31))


def js_bitand(a: float, b: float) -> float:
    return float(to_int32(to_int32(a) & to_int32(b)))


def js_bitor(a: float, b: float) -> float:
    return float(to_int32(to_int32(a) | to_int32(b)))


def js_bitxor(a: float, b: float) -> float:
    return float(to_int32(to_int32(a) ^ to_int32(b)))


def js_bitnot(a: float) -> float:
    return float(to_int32(~to_int32(a)))


def js_less(a: float, b: float) -> bool:
    # NaN compares false both ways
    return bool(a < b)


def js_less_eq(a: float, b: float) -> bool:
    return bool(a <= b)


# ---------------------------------------------------------------------------
# Conversions
# ---------------------------------------------------------------------------


@lru_cache(maxsize=65536)
def number_to_string(x: float) -> str:
    """ECMA-3 ToString applied to a Number (shortest round-trip digits).

    Parameters
    ----------
    x : float
        Any double, including NaN and the infinities.

    Returns
    -------
    str
        The canonical string, e.g. ``"3"``, ``"0.5"``, ``"1e+21"``, ``"NaN"``.
    """
    if math.isnan(x):
        return "NaN"
    if x == 0:
        return "0"
    if x < 0:
        return "-" + number_to_string(-x)
    if math.isinf(x):
        return "Infinity"

    mantissa, exponent = np.format_float_scientific(
        x, unique=True, trim="-").split("e")
    digits = mantissa.replace(".", "")
    k = len(digits)
    n = int(exponent) + 1

    if k <= n <= 21:
        return digits + "0" * (n - k)
    if 0 < n <= 21:
        return digits[:n] + "." + digits[n:]
    if -6 < n <= 0:
        return "0." + "0" * (-n) + digits
    e = n - 1
    sign = "+" if e >= 0 else "-"
    if k == 1:
        return f"{digits}e{sign}{abs(e)}"
    return f"{digits[0]}.{digits[1:]}e{sign}{abs(e)}"


@lru_cache(maxsize=65536)
def string_to_number(s: str) -> float:
    """ECMA-3 ToNumber applied to a String."""
    t = s.strip(_JS_WHITESPACE)
    if t == "":
        return 0.0
    if _HEX_LITERAL.fullmatch(t):
        return float(int(t[2:], 16))
    if _DECIMAL_LITERAL.fullmatch(t):
        if t.endswith("Infinity"):
            return -math.inf if t[0] == "-" else math.inf
        return float(t)
    return math.nan


def to_number(v: Primitive) -> float:
    if isinstance(v, bool):
        return 1.0 if v else 0.0
    if isinstance(v, float):
        return v
    if isinstance(v, str):
        return string_to_number(v)
    if v is NULL:
        return 0.0
    if v is UNDEF:
        return math.nan
    raise TypeError(f"not a primitive: {v!r}")


def to_string(v: Primitive) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return number_to_string(v)
    if isinstance(v, str):
        return v
    if v is NULL:
        return "null"
    if v is UNDEF:
        return "undefined"
    raise TypeError(f"not a primitive: {v!r}")


def to_boolean(v: Primitive) -> bool:
    if isinstance(v, bool):
        return v
    if isinstance(v, float):
        return not (v == 0 or math.isnan(v))
    if isinstance(v, str):
        return v != ""
    if v is NULL or v is UNDEF:
        return False
    raise TypeError(f"not a primitive: {v!r}")


def type_name(v: Primitive) -> str:
    """Name of the primitive's type as used by ``typeof``."""
    if isinstance(v, bool):
        return "boolean"
    if isinstance(v, float):
        return "number"
    if isinstance(v, str):
        return "string"
    if v is NULL:
        return "object"
    return "undefined"


def strict_equals(a: Primitive, b: Primitive) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, float):
        return bool(a == b)
    return a == b if isinstance(a, (bool, str)) else a is b


def loose_equals(a: Primitive, b: Primitive) -> bool:
    """ECMA-3 abstract equality restricted to primitive operands."""
    if type(a) is type(b):
        return strict_equals(a, b)
    nullish = (NULL, UNDEF)
    if a in nullish or b in nullish:
        return a in nullish and b in nullish
    if isinstance(a, bool):
        return loose_equals(to_number(a), b)
    if isinstance(b, bool):
        return loose_equals(a, to_number(b))
    # number against string
    return bool(to_number(a) == to_number(b))


# ---------------------------------------------------------------------------
# Strings
# ---------------------------------------------------------------------------


def utf16_less(a: str, b: str) -> bool:
    """Lexicographic comparison by UTF-16 code units."""
    return a.encode("utf-16-be", "surrogatepass") < b.encode("utf-16-be", "surrogatepass")


def utf16_less_eq(a: str, b: str) -> bool:
    return not utf16_less(b, a)


@lru_cache(maxsize=65536)
def is_numeric_string(s: str) -> bool:
    """True iff ``s`` is the canonical ToString of some Number."""
    return number_to_string(string_to_number(s)) == s


def is_array_index(s: str) -> bool:
    return bool(_ARRAY_INDEX.fullmatch(s)) and int(s) <= MAX_ARRAY_INDEX


def is_uint32(x: float) -> bool:
    """Whether ``x`` survives ToUint32 unchanged (a valid array length)."""
    return math.isfinite(x) and to_uint32(x) == x
