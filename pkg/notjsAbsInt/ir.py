"""The notJS intermediate language: syntax tree, S-expression reader and printer.

Expressions are pure and carry no NodeId. Statements, declarations and method
literals carry a NodeId, assigned depth-first in pre-order, which doubles as
program point and allocation site.
"""

import itertools
import json
import math
import re
from dataclasses import dataclass, fields, is_dataclass, replace
from typing import Dict, Iterator, List, Optional, Tuple, Union

from .utils import float_key

BINOPS = frozenset(
    {
        "+", "-", "*", "/", "%", "<<", ">>", ">>>", "<", "<=", "&", "|", "^",
        "and", "or", "++", "s<", "s<=", "==", "===", ".", "instanceof", "in",
    }
)
UNOPS = frozenset(
    {"neg", "bitnot", "not", "typeof", "isprim", "tobool", "tostr", "tonum"})
STMT_HEADS = frozenset(
    {
        "seq", "if", "while", ":=", ".:=", "call", "toobj", "delete", "newfun",
        "newcall", "throw", "try", "label", "break", "forin",
    }
)
RESERVED = frozenset({"true", "false", "undef", "null", "nan", "inf", "fun", "decl"})

# Bound in the program scope, holds the global object
GLOBAL_VAR = "global"


class Node:
    """Base of every syntax tree node."""

    __slots__ = ()


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


class Exp(Node):
    __slots__ = ()


@dataclass(frozen=True, eq=False)
class NumLit(Exp):
    value: float

    def __eq__(self, other):
        return isinstance(other, NumLit) and float_key(self.value) == float_key(other.value)

    def __hash__(self):
        return hash(("num", float_key(self.value)))


@dataclass(frozen=True)
class BoolLit(Exp):
    value: bool


@dataclass(frozen=True)
class StrLit(Exp):
    value: str


@dataclass(frozen=True)
class UndefLit(Exp):
    pass


@dataclass(frozen=True)
class NullLit(Exp):
    pass


@dataclass(frozen=True)
class Var(Exp):
    name: str


@dataclass(frozen=True)
class MethLit(Exp):
    meth: "Meth"


@dataclass(frozen=True)
class BinOp(Exp):
    op: str
    lhs: Exp
    rhs: Exp


@dataclass(frozen=True)
class UnOp(Exp):
    op: str
    operand: Exp


# ---------------------------------------------------------------------------
# Statements, declarations, methods
# ---------------------------------------------------------------------------


class Stmt(Node):
    __slots__ = ()


@dataclass(frozen=True)
class Decl(Node):
    bindings: Tuple[Tuple[str, Exp], ...]
    body: Stmt
    nid: int = -1


@dataclass(frozen=True)
class Meth(Node):
    """A function literal with the implicit parameters ``self`` and ``args``."""

    body: Union[Decl, Stmt]
    nid: int = -1


@dataclass(frozen=True)
class Seq(Stmt):
    stmts: Tuple[Stmt, ...]
    nid: int = -1


@dataclass(frozen=True)
class If(Stmt):
    guard: Exp
    then: Stmt
    orelse: Stmt
    nid: int = -1


@dataclass(frozen=True)
class While(Stmt):
    guard: Exp
    body: Stmt
    nid: int = -1


@dataclass(frozen=True)
class AssignVar(Stmt):
    var: str
    exp: Exp
    nid: int = -1


@dataclass(frozen=True)
class AssignProp(Stmt):
    obj: Exp
    key: Exp
    val: Exp
    nid: int = -1


@dataclass(frozen=True)
class Call(Stmt):
    var: str
    fun: Exp
    self_exp: Exp
    args: Exp
    nid: int = -1


@dataclass(frozen=True)
class ToObj(Stmt):
    var: str
    exp: Exp
    nid: int = -1


@dataclass(frozen=True)
class DeleteProp(Stmt):
    var: str
    obj: Exp
    key: Exp
    nid: int = -1


@dataclass(frozen=True, eq=False)
class NewFun(Stmt):
    var: str
    meth: Meth
    arity: float
    nid: int = -1

    def __eq__(self, other):
        return (
            isinstance(other, NewFun)
            and (self.var, self.meth, self.nid) == (other.var, other.meth, other.nid)
            and float_key(self.arity) == float_key(other.arity)
        )

    def __hash__(self):
        return hash(("newfun", self.var, self.nid, float_key(self.arity)))


@dataclass(frozen=True)
class NewCall(Stmt):
    var: str
    ctor: Exp
    args: Exp
    nid: int = -1


@dataclass(frozen=True)
class Throw(Stmt):
    exp: Exp
    nid: int = -1


@dataclass(frozen=True)
class TryCatchFin(Stmt):
    body: Stmt
    var: str
    catch: Stmt
    finally_: Stmt
    nid: int = -1


@dataclass(frozen=True)
class Label(Stmt):
    label: str
    body: Stmt
    nid: int = -1


@dataclass(frozen=True)
class Break(Stmt):
    label: str
    exp: Exp
    nid: int = -1


@dataclass(frozen=True)
class ForIn(Stmt):
    var: str
    obj: Exp
    body: Stmt
    nid: int = -1


Term = Union[Decl, Stmt]


class ParseError(ValueError):
    """Malformed notJS text, with a 1-based source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Diagnostic:
    nid: int
    kind: str
    message: str


# ---------------------------------------------------------------------------
# Node numbering and traversal
# ---------------------------------------------------------------------------


def number_nodes(node):
    """Return a copy of ``node`` with fresh pre-order NodeIds starting at 0."""
    counter = itertools.count()

    def visit(x):
        if isinstance(x, tuple):
            return tuple(visit(item) for item in x)
        if not is_dataclass(x):
            return x
        changes = {}
        if hasattr(x, "nid"):
            changes["nid"] = next(counter)
        for f in fields(x):
            if f.name != "nid":
                value = getattr(x, f.name)
                if isinstance(value, (tuple, Node)):
                    changes[f.name] = visit(value)
        return replace(x, **changes)

    return visit(node)


def iter_nodes(node) -> Iterator[Node]:
    """Yield every numbered node (Decl, Meth, Stmt) in pre-order."""
    if isinstance(node, tuple):
        for item in node:
            yield from iter_nodes(item)
        return
    if not isinstance(node, Node):
        return
    if hasattr(node, "nid"):
        yield node
    for f in fields(node):
        if f.name != "nid":
            yield from iter_nodes(getattr(node, f.name))


def index_nodes(program: Decl) -> Dict[int, Node]:
    return {n.nid: n for n in iter_nodes(program)}


def count_nodes(node) -> int:
    return sum(1 for _ in iter_nodes(node))


def stmt_expressions(stmt: Term) -> Tuple[Exp, ...]:
    """The expressions a statement evaluates itself, excluding nested statements."""
    if isinstance(stmt, Decl):
        return tuple(e for _, e in stmt.bindings)
    exps = []
    for f in fields(stmt):
        value = getattr(stmt, f.name)
        if isinstance(value, Exp):
            exps.append(value)
    return tuple(exps)


def subexpressions(exp: Exp) -> Iterator[Exp]:
    """Pre-order walk of an expression, not entering method literals."""
    yield exp
    if isinstance(exp, BinOp):
        yield from subexpressions(exp.lhs)
        yield from subexpressions(exp.rhs)
    elif isinstance(exp, UnOp):
        yield from subexpressions(exp.operand)


# ---------------------------------------------------------------------------
# Reader
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r'(?P<ws>\s+)|(?P<comment>;[^\n]*)|(?P<lp>\()|(?P<rp>\))'
    r'|(?P<str>"(?:[^"\\\n]|\\.)*")|(?P<atom>[^\s()";]+)'
)
_IDENT = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_NUMBER = re.compile(r"[+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")


@dataclass(frozen=True)
class _Atom:
    text: str
    pos: int
    quoted: bool = False


@dataclass(frozen=True)
class _List:
    items: tuple
    pos: int


class _Reader:
    def __init__(self, text: str):
        self.text = text

    def error(self, message: str, pos: int) -> ParseError:
        line = self.text.count("\n", 0, pos) + 1
        column = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return ParseError(message, line, column)

    def read_forms(self) -> List[Union[_Atom, _List]]:
        stack: List[Tuple[int, list]] = [(0, [])]
        pos = 0
        while pos < len(self.text):
            m = _TOKEN.match(self.text, pos)
            if m is None:
                raise self.error("unterminated string literal", pos)
            kind = m.lastgroup
            if kind == "lp":
                stack.append((pos, []))
            elif kind == "rp":
                if len(stack) == 1:
                    raise self.error("unexpected ')'", pos)
                start, items = stack.pop()
                stack[-1][1].append(_List(tuple(items), start))
            elif kind == "str":
                stack[-1][1].append(_Atom(m.group(), pos, quoted=True))
            elif kind == "atom":
                stack[-1][1].append(_Atom(m.group(), pos))
            pos = m.end()
        if len(stack) > 1:
            raise self.error("unclosed form", stack[-1][0])
        return stack[0][1]

    # -- helpers ----------------------------------------------------------

    def expect_list(self, form, what: str, arity: Optional[int] = None) -> tuple:
        if not isinstance(form, _List):
            raise self.error(f"expected {what}", form.pos)
        if arity is not None and len(form.items) != arity:
            raise self.error(f"{what} takes {arity - 1} operands, got {len(form.items) - 1}",
                             form.pos)
        return form.items

    def ident(self, form, what: str = "identifier") -> str:
        if (not isinstance(form, _Atom) or form.quoted or not _IDENT.fullmatch(form.text)
                or form.text in RESERVED):
            raise self.error(f"expected {what}", form.pos)
        return form.text

    def head(self, form) -> Optional[str]:
        if isinstance(form, _List) and form.items and isinstance(form.items[0], _Atom):
            return form.items[0].text
        return None

    # -- grammar ----------------------------------------------------------

    def decl(self, form) -> Decl:
        items = self.expect_list(form, "(decl (bindings) stmt)", 3)
        if self.head(form) != "decl":
            raise self.error("expected 'decl'", form.pos)
        bindings = []
        for b in self.expect_list(items[1], "binding list"):
            pair = self.expect_list(b, "(name exp) binding", 2)
            bindings.append((self.ident(pair[0], "binding name"), self.exp(pair[1])))
        return Decl(tuple(bindings), self.stmt(items[2]))

    def meth(self, form) -> Meth:
        items = self.expect_list(form, "(fun (self args) body)", 3)
        params = self.expect_list(items[1], "parameter list (self args)", 2)
        if [self.ident(p) for p in params] != ["self", "args"]:
            raise self.error("method parameters must be (self args)", items[1].pos)
        body = items[2]
        if self.head(body) == "decl":
            return Meth(self.decl(body))
        return Meth(self.stmt(body))

    def number(self, form) -> float:
        if isinstance(form, _Atom) and not form.quoted:
            text = form.text
            if text == "nan":
                return math.nan
            if text in ("inf", "+inf"):
                return math.inf
            if text == "-inf":
                return -math.inf
            if _NUMBER.fullmatch(text):
                return float(text)
        raise self.error("expected number", form.pos)

    def exp(self, form) -> Exp:
        if isinstance(form, _Atom):
            if form.quoted:
                try:
                    return StrLit(json.loads(form.text, strict=False))
                except ValueError:
                    raise self.error("bad string escape", form.pos) from None
            text = form.text
            if text in ("true", "false"):
                return BoolLit(text == "true")
            if text == "undef":
                return UndefLit()
            if text == "null":
                return NullLit()
            if text in ("nan", "inf", "+inf", "-inf") or _NUMBER.fullmatch(text):
                return NumLit(self.number(form))
            return Var(self.ident(form, "expression"))
        op = self.head(form)
        if op == "fun":
            return MethLit(self.meth(form))
        if op in BINOPS:
            items = self.expect_list(form, f"({op} e1 e2)", 3)
            return BinOp(op, self.exp(items[1]), self.exp(items[2]))
        if op in UNOPS:
            items = self.expect_list(form, f"({op} e)", 2)
            return UnOp(op, self.exp(items[1]))
        raise self.error(f"unknown expression form {op!r}", form.pos)

    def stmt(self, form) -> Stmt:
        op = self.head(form)
        if op not in STMT_HEADS:
            raise self.error(f"expected statement, got {op or 'atom'!r}", form.pos)
        items = form.items
        n = len(items)

        def arity(expected):
            if n not in expected:
                raise self.error(f"malformed {op!r} statement", form.pos)

        if op == "seq":
            return Seq(tuple(self.stmt(s) for s in items[1:]))
        if op == "if":
            arity((3, 4))
            orelse = self.stmt(items[3]) if n == 4 else Seq(())
            return If(self.exp(items[1]), self.stmt(items[2]), orelse)
        if op == "while":
            arity((3,))
            return While(self.exp(items[1]), self.stmt(items[2]))
        if op == ":=":
            arity((3,))
            return AssignVar(self.ident(items[1]), self.exp(items[2]))
        if op == ".:=":
            arity((4,))
            return AssignProp(self.exp(items[1]), self.exp(items[2]), self.exp(items[3]))
        if op == "call":
            arity((5,))
            return Call(self.ident(items[1]), self.exp(items[2]),
                        self.exp(items[3]), self.exp(items[4]))
        if op == "toobj":
            arity((3,))
            return ToObj(self.ident(items[1]), self.exp(items[2]))
        if op == "delete":
            arity((4,))
            return DeleteProp(self.ident(items[1]), self.exp(items[2]), self.exp(items[3]))
        if op == "newfun":
            arity((4,))
            if self.head(items[2]) != "fun":
                raise self.error("newfun expects a (fun ...) literal", items[2].pos)
            return NewFun(self.ident(items[1]), self.meth(items[2]), self.number(items[3]))
        if op == "newcall":
            arity((4,))
            return NewCall(self.ident(items[1]), self.exp(items[2]), self.exp(items[3]))
        if op == "throw":
            arity((2,))
            return Throw(self.exp(items[1]))
        if op == "try":
            arity((5,))
            return TryCatchFin(self.stmt(items[1]), self.ident(items[2]),
                               self.stmt(items[3]), self.stmt(items[4]))
        if op == "label":
            arity((3,))
            return Label(self.ident(items[1], "label"), self.stmt(items[2]))
        if op == "break":
            arity((3,))
            return Break(self.ident(items[1], "label"), self.exp(items[2]))
        arity((4,))
        return ForIn(self.ident(items[1]), self.exp(items[2]), self.stmt(items[3]))


def parse_program(text: str) -> Decl:
    """Parse notJS source text into a numbered ``Decl``.

    Parameters
    ----------
    text : str
        One ``(decl ...)`` form; ``;`` starts a comment running to end of line.

    Returns
    -------
    Decl
        The program with NodeIds assigned depth-first from 0.

    Raises
    ------
    ParseError
        On malformed input, with line and column of the offending form.
    """
    reader = _Reader(text)
    forms = reader.read_forms()
    if len(forms) != 1:
        pos = forms[1].pos if len(forms) > 1 else len(text)
        raise reader.error("expected exactly one (decl ...) form", pos)
    return number_nodes(reader.decl(forms[0]))


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------


def format_number(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x.is_integer() and abs(x) < 1e16 and math.copysign(1.0, x) > 0:
        return str(int(x))
    return repr(x)


def _pretty_exp(e: Exp) -> str:
    if isinstance(e, NumLit):
        return format_number(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, StrLit):
        return json.dumps(e.value)
    if isinstance(e, UndefLit):
        return "undef"
    if isinstance(e, NullLit):
        return "null"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, MethLit):
        return _pretty_meth(e.meth)
    if isinstance(e, BinOp):
        return f"({e.op} {_pretty_exp(e.lhs)} {_pretty_exp(e.rhs)})"
    return f"({e.op} {_pretty_exp(e.operand)})"


def _pretty_meth(m: Meth) -> str:
    return f"(fun (self args) {_pretty_term(m.body)})"


def _pretty_term(s: Term) -> str:
    p, q = _pretty_exp, _pretty_term
    if isinstance(s, Decl):
        bindings = " ".join(f"({x} {p(e)})" for x, e in s.bindings)
        return f"(decl ({bindings}) {q(s.body)})"
    if isinstance(s, Seq):
        return "(seq" + "".join(" " + q(c) for c in s.stmts) + ")"
    if isinstance(s, If):
        return f"(if {p(s.guard)} {q(s.then)} {q(s.orelse)})"
    if isinstance(s, While):
        return f"(while {p(s.guard)} {q(s.body)})"
    if isinstance(s, AssignVar):
        return f"(:= {s.var} {p(s.exp)})"
    if isinstance(s, AssignProp):
        return f"(.:= {p(s.obj)} {p(s.key)} {p(s.val)})"
    if isinstance(s, Call):
        return f"(call {s.var} {p(s.fun)} {p(s.self_exp)} {p(s.args)})"
    if isinstance(s, ToObj):
        return f"(toobj {s.var} {p(s.exp)})"
    if isinstance(s, DeleteProp):
        return f"(delete {s.var} {p(s.obj)} {p(s.key)})"
    if isinstance(s, NewFun):
        return f"(newfun {s.var} {_pretty_meth(s.meth)} {format_number(s.arity)})"
    if isinstance(s, NewCall):
        return f"(newcall {s.var} {p(s.ctor)} {p(s.args)})"
    if isinstance(s, Throw):
        return f"(throw {p(s.exp)})"
    if isinstance(s, TryCatchFin):
        return f"(try {q(s.body)} {s.var} {q(s.catch)} {q(s.finally_)})"
    if isinstance(s, Label):
        return f"(label {s.label} {q(s.body)})"
    if isinstance(s, Break):
        return f"(break {s.label} {p(s.exp)})"
    if isinstance(s, ForIn):
        return f"(forin {s.var} {p(s.obj)} {q(s.body)})"
    raise TypeError(f"not a notJS term: {s!r}")


def pretty(ast: Decl) -> str:
    """Canonical single-line text for a program; ``parse_program`` reads it back."""
    return _pretty_term(ast)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


class _Validator:
    def __init__(self):
        self.diagnostics: List[Diagnostic] = []

    def report(self, nid: int, kind: str, message: str):
        self.diagnostics.append(Diagnostic(nid, kind, message))

    def exp(self, e: Exp, scope: frozenset, nid: int):
        for sub in subexpressions(e):
            if isinstance(sub, Var) and sub.name not in scope:
                self.report(nid, "unbound-variable", f"unbound variable {sub.name}")
            elif isinstance(sub, MethLit):
                self.meth(sub.meth, scope)

    def meth(self, m: Meth, scope: frozenset):
        self.term(m.body, scope | {"self", "args"}, frozenset())

    def target(self, var: str, scope: frozenset, nid: int):
        if var not in scope:
            self.report(nid, "unbound-variable", f"unbound variable {var}")

    def term(self, s: Term, scope: frozenset, labels: frozenset):
        if isinstance(s, Decl):
            names = [x for x, _ in s.bindings]
            for x in sorted({x for x in names if names.count(x) > 1}):
                self.report(s.nid, "duplicate-binding", f"{x} bound twice")
            scope = scope | set(names)
            for _, e in s.bindings:
                self.exp(e, scope, s.nid)
            self.term(s.body, scope, labels)
            return

        for e in stmt_expressions(s):
            self.exp(e, scope, s.nid)
        var = getattr(s, "var", None)
        if var is not None and not isinstance(s, TryCatchFin):
            self.target(var, scope, s.nid)

        if isinstance(s, Seq):
            for c in s.stmts:
                self.term(c, scope, labels)
        elif isinstance(s, If):
            self.term(s.then, scope, labels)
            self.term(s.orelse, scope, labels)
        elif isinstance(s, (While, ForIn)):
            self.term(s.body, scope, labels)
        elif isinstance(s, NewFun):
            self.meth(s.meth, scope)
        elif isinstance(s, TryCatchFin):
            self.term(s.body, scope, labels)
            self.term(s.catch, scope | {s.var}, labels)
            self.term(s.finally_, scope, labels)
        elif isinstance(s, Label):
            self.term(s.body, scope, labels | {s.label})
        elif isinstance(s, Break) and s.label not in labels:
            self.report(s.nid, "unbound-label", f"unbound label {s.label}")


def validate(ast: Decl) -> List[Diagnostic]:
    """Check labels, variable scoping and binding distinctness.

    Returns an empty list for a well-formed program, otherwise one
    diagnostic per violation. Labels do not cross method boundaries, and
    the implicit variable ``global`` is in scope everywhere.
    """
    v = _Validator()
    v.term(ast, frozenset({GLOBAL_VAR}), frozenset())
    return v.diagnostics
