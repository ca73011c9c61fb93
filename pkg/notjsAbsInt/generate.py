"""Random notJS programs for differential testing.

Programs are deterministic in the seed and terminate by construction: every
loop runs on its own counter bounded by a small constant, and a method only
calls methods defined before it, so there is no recursion.
"""

import math
from typing import List, Sequence

import numpy as np

from .ir import (GLOBAL_VAR, AssignProp, AssignVar, BinOp, BoolLit, Break, Call, Decl,
                 DeleteProp, Exp, ForIn, If, Label, Meth, NewCall, NewFun, NullLit, NumLit, Seq,
                 Stmt, StrLit, Throw, ToObj, TryCatchFin, UndefLit, UnOp, Var, While,
                 count_nodes, number_nodes, validate)

_NUMBERS = (0.0, 1.0, 2.0, 3.0, -1.0, 0.5, math.nan)
_STRINGS = ("", "a", "b", "0", "1", "3.5", "x", "toString", "valueOf")
_KEYS = ("a", "b", "x", "0", "1", "2")
_ARITH = ("+", "-", "*", "/", "%", "<", "<=", "==", "===", "&", "|", "<<", "++", "s<")
_UNARY = ("neg", "not", "typeof", "isprim", "tobool", "tostr", "tonum", "bitnot")
_NATIVES = ("Object", "Array", "isNaN", "print")

N_DATA = 3
N_OBJECTS = 3
N_FUNCTIONS = 3
MAX_LOOP = 3


class _Scope:
    """Names visible to the statements of one method (or the program body)."""

    def __init__(self, data: List[str], objects: List[str], functions: List[str],
                 counters: List[str], in_method: bool):
        self.data = data
        self.objects = objects
        self.functions = functions
        self.counters = counters
        self.in_method = in_method
        self.labels: List[str] = []

    def readable(self) -> List[str]:
        names = self.data + self.objects + [GLOBAL_VAR]
        if self.in_method:
            names += ["self", "args"]
        return names


class _Generator:
    def __init__(self, seed: int, size: int):
        self.rng = np.random.default_rng(seed)
        self.budget = size
        self.n_labels = 0

    def pick(self, seq: Sequence):
        return seq[int(self.rng.integers(len(seq)))]

    def chance(self, p: float) -> bool:
        return bool(self.rng.random() < p)

    # -- expressions --------------------------------------------------------

    def literal(self) -> Exp:
        kind = int(self.rng.integers(6))
        if kind <= 1:
            return NumLit(self.pick(_NUMBERS))
        if kind == 2:
            return StrLit(self.pick(_STRINGS))
        if kind == 3:
            return BoolLit(self.chance(0.5))
        return UndefLit() if kind == 4 else NullLit()

    def exp(self, scope: _Scope, depth: int = 2) -> Exp:
        roll = int(self.rng.integers(10))
        if depth == 0 or roll < 3:
            return self.literal()
        if roll < 6:
            return Var(self.pick(scope.readable()))
        if roll < 8:
            return BinOp(self.pick(_ARITH), self.exp(scope, depth - 1), self.exp(scope, depth - 1))
        if roll == 8:
            return UnOp(self.pick(_UNARY), self.exp(scope, depth - 1))
        return BinOp(".", Var(self.pick(scope.objects + ["self"] if scope.in_method
                                         else scope.objects)), StrLit(self.pick(_KEYS)))

    def native(self, name: str) -> Exp:
        return BinOp(".", Var(GLOBAL_VAR), StrLit(name))

    def receiver(self, scope: _Scope) -> Exp:
        options = scope.objects + ([GLOBAL_VAR, "self"] if scope.in_method else [GLOBAL_VAR])
        if self.chance(0.15):
            return self.literal()
        return Var(self.pick(options))

    # -- statements ---------------------------------------------------------

    def block(self, scope: _Scope, n: int, depth: int) -> Stmt:
        stmts = []
        for _ in range(n):
            if self.budget <= 0:
                break
            stmts.append(self.stmt(scope, depth))
        return Seq(tuple(stmts))

    def stmt(self, scope: _Scope, depth: int) -> Stmt:
        self.budget -= 1
        targets = scope.data + scope.objects
        roll = int(self.rng.integers(20 if depth > 0 else 11))
        if roll < 3:
            return AssignVar(self.pick(scope.data), self.exp(scope))
        if roll < 5:
            obj = self.pick(scope.objects + ["self"]) if scope.in_method else self.pick(scope.objects)
            return AssignProp(Var(obj), StrLit(self.pick(_KEYS)), self.exp(scope))
        if roll == 5 and scope.functions:
            return Call(self.pick(targets), Var(self.pick(scope.functions)),
                        self.receiver(scope), Var(self.pick(scope.objects)))
        if roll == 6:
            ctor = (Var(self.pick(scope.functions)) if scope.functions and self.chance(0.6)
                    else self.native(self.pick(("Object", "Array"))))
            return NewCall(self.pick(scope.objects), ctor, Var(self.pick(scope.objects)))
        if roll == 7:
            name = self.pick(_NATIVES)
            return Call(self.pick(targets), self.native(name), self.receiver(scope),
                        Var(self.pick(scope.objects)))
        if roll == 8:
            return DeleteProp(self.pick(scope.data), Var(self.pick(scope.objects)),
                              StrLit(self.pick(_KEYS)))
        if roll == 9:
            return ToObj(self.pick(scope.objects), self.exp(scope, 1))
        if roll == 10:
            method = self.pick(("pop", "join", "hasOwnProperty", "toString"))
            fun = BinOp(".", BinOp(".", self.native("Array"), StrLit("prototype")),
                        StrLit(method))
            return Call(self.pick(scope.data), fun, Var(self.pick(scope.objects)),
                        Var(self.pick(scope.objects)))
        if roll < 13:
            return If(self.exp(scope), self.block(scope, 2, depth - 1),
                      self.block(scope, 1, depth - 1))
        if roll == 13 and scope.counters:
            return self.loop(scope, depth)
        if roll < 16:
            return self.try_stmt(scope, depth)
        if roll == 16:
            return self.labelled(scope, depth)
        if roll == 17:
            return ForIn(self.pick(scope.data), Var(self.pick(scope.objects)),
                         self.block(scope, 2, depth - 1))
        if roll == 18 and scope.labels:
            return Break(self.pick(scope.labels), self.exp(scope, 1))
        return Throw(self.exp(scope, 1))

    def loop(self, scope: _Scope, depth: int) -> Stmt:
        counter = scope.counters.pop()
        bound = float(self.rng.integers(1, MAX_LOOP + 1))
        body = self.block(scope, 2, depth - 1)
        step = AssignVar(counter, BinOp("+", Var(counter), NumLit(1.0)))
        return Seq((
            AssignVar(counter, NumLit(0.0)),
            While(BinOp("<", Var(counter), NumLit(bound)), Seq((step,) + body.stmts)),
        ))

    def try_stmt(self, scope: _Scope, depth: int) -> Stmt:
        var = self.pick(scope.data)
        body = self.block(scope, 2, depth - 1)
        if self.chance(0.5):
            body = Seq(body.stmts + (Throw(self.exp(scope, 1)),))
        return TryCatchFin(body, var, self.block(scope, 1, depth - 1),
                           self.block(scope, 1 if self.chance(0.5) else 0, depth - 1))

    def labelled(self, scope: _Scope, depth: int) -> Stmt:
        label = f"L{self.n_labels}"
        self.n_labels += 1
        scope.labels.append(label)
        body = self.block(scope, 2, depth - 1)
        scope.labels.pop()
        if self.chance(0.6):
            body = Seq(body.stmts + (Break(label, self.exp(scope, 1)),))
        return Label(label, body)

    # -- program ------------------------------------------------------------

    def method(self, data: List[str], objects: List[str], functions: List[str]) -> Meth:
        locals_ = ["t0", "t1"]
        counters = ["k0", "k1"]
        scope = _Scope(data + locals_, objects, functions, list(counters), True)
        body = self.block(scope, 3, 2)
        bindings = tuple((x, UndefLit()) for x in locals_) + tuple(
            (c, NumLit(0.0)) for c in counters)
        return Meth(Decl(bindings, body))

    def program(self) -> Decl:
        data = [f"x{i}" for i in range(N_DATA)]
        objects = [f"o{i}" for i in range(N_OBJECTS)]
        functions = [f"f{i}" for i in range(N_FUNCTIONS)]
        counters = [f"c{i}" for i in range(4)]
        setup = [NewCall(o, self.native(self.pick(("Object", "Array"))), NullLit())
                 for o in objects]
        setup += [AssignProp(Var(self.pick(objects)), StrLit(self.pick(_KEYS)),
                             self.literal()) for _ in range(2)]
        for i, f in enumerate(functions):
            meth = self.method(data, objects, functions[:i])
            setup.append(NewFun(f, meth, float(self.rng.integers(3))))
            if self.chance(0.5):
                setup.append(AssignProp(BinOp(".", Var(f), StrLit("prototype")),
                                        StrLit(self.pick(_KEYS)), self.literal()))
        scope = _Scope(data, objects, functions, list(counters), False)
        body = self.block(scope, 8, 3)
        bindings = tuple((x, self.literal()) for x in data) + tuple(
            (x, UndefLit()) for x in objects + functions) + tuple(
            (c, NumLit(0.0)) for c in counters)
        return Decl(bindings, Seq(tuple(setup) + body.stmts))


def generate_program(seed: int, size: int = 200) -> Decl:
    """Random, validated, terminating notJS program.

    Parameters
    ----------
    seed : int
        Seed of the generator; the same seed always yields the same program.
    size : int, optional
        Soft bound on the number of generated statements, by default 200.

    Returns
    -------
    Decl
        A numbered program for which ``validate`` reports nothing.
    """
    assert seed >= 0, f"seed must be non-negative, got {seed}"
    assert size > 0, f"size must be positive, got {size}"
    gen = _Generator(seed, size)
    program = number_nodes(gen.program())
    assert count_nodes(program) > 0
    diagnostics = validate(program)
    assert not diagnostics, f"seed {seed} generated an invalid program: {diagnostics[0]}"
    return program
