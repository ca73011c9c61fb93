"""Tests for trace strategies: parsing, context updates and covering."""

import inspect
from dataclasses import dataclass
from typing import ClassVar

import pytest

from notjsAbsInt import absem, concrete, engine
from notjsAbsInt.builtin_objects import GLOBAL
from notjsAbsInt.cli import CORPUS_DIR, load_program
from notjsAbsInt.domains import UNDEF_BV, AbsAddr, bv_addr, bv_num
from notjsAbsInt.sensitivity import (PRIM, AcyclicCFATrace, CallEvent, MixedTrace, ObjTrace,
                                     ParameterError, ReturnEvent, SigTrace, StackCFATrace,
                                     StepTo, Trace, parse_sensitivity, statement_point)


def call(site, self_value=UNDEF_BV, args=(), callee=100):
    return CallEvent(site=site, callee=callee, self_value=self_value, args_value=UNDEF_BV,
                     arg_values=tuple(args), point=statement_point(callee + 1))


@dataclass(frozen=True)
class ParityTrace(Trace):
    """Context is the parity of the call depth; defined outside the package."""

    kind: ClassVar[str] = "parity"

    def push(self, event):
        depth = self.context[0] + 1 if self.context else 1
        return (depth % 2,)


class TestParse:
    """Test class for parse_sensitivity."""

    @pytest.mark.parametrize("text, cls, k, h", [
        ("fs", Trace, 0, 0),
        ("stack:2.1", StackCFATrace, 2, 1),
        ("acyclic:3", AcyclicCFATrace, 0, 3),
        ("obj:1.0", ObjTrace, 1, 0),
        ("sig:2.0", SigTrace, 2, 0),
        ("mixed:3.2", MixedTrace, 3, 2),
    ])
    def test_valid(self, text, cls, k, h):
        trace = parse_sensitivity(text)
        assert type(trace) is cls
        assert (trace.k, trace.h) == (k, h)
        assert trace.describe() == text

    @pytest.mark.parametrize("text", ["stack:1.1", "obj:2.5", "stack:0.0", "stack:2", "cfa:1.0",
                                      "acyclic:x", ""])
    def test_invalid(self, text):
        with pytest.raises(ParameterError):
            parse_sensitivity(text)

    def test_h_must_be_below_k_message(self):
        with pytest.raises(ParameterError, match="h must be < k per stack:K.H"):
            parse_sensitivity("stack:1.1")

    def test_trace_passes_through(self):
        trace = StackCFATrace(k=1)
        assert parse_sensitivity(trace) is trace


class TestContexts:
    """Test class for the context each strategy pushes on a call."""

    def test_stack_keeps_top_k_sites(self):
        t = parse_sensitivity("stack:2.1")
        for site in (10, 20, 30):
            t = t.update(call(site))
        assert t.context == (30, 20)
        assert t.heap_prefix() == (30,)
        assert t.partition_key() == (t.point, (30, 20))

    def test_fs_ignores_calls(self):
        t = parse_sensitivity("fs").update(call(10))
        assert t.context == () and t.point == statement_point(101)

    def test_acyclic_collapses_recursion(self):
        t = parse_sensitivity("acyclic:1")
        for site in (10, 20):
            t = t.update(call(site))
        assert t.context == (20, 10)
        assert t.update(call(10)).context == (10,)

    def test_return_restores_caller(self):
        caller = parse_sensitivity("stack:1.0").update(StepTo(statement_point(5)))
        callee = caller.update(call(5))
        back = callee.update(ReturnEvent(caller, ("v", "bv", None, "exit", 100)))
        assert back.context == caller.context
        assert back.point == ("v", "bv", None, "exit", 100)

    def test_object_context_uses_receiver_sites(self):
        receiver = bv_addr(AbsAddr(7, (3,), "object"))
        t = parse_sensitivity("obj:1.0").update(call(10, receiver.join(bv_num(1.0))))
        assert t.context == (frozenset({AbsAddr(7, (), "object"), PRIM}),)

    def test_mixed_replaces_global_receiver_by_site(self):
        global_obj = bv_addr(AbsAddr(GLOBAL, (), "object"))
        t = parse_sensitivity("mixed:1.0").update(call(10, global_obj))
        assert t.context == (frozenset({("site", 10)}),)

    def test_signature_context(self):
        t = parse_sensitivity("sig:1.0").update(call(10, UNDEF_BV, [bv_num(1.0)], callee=42))
        assert t.context == ((42, frozenset({"undef"}), frozenset({"num"})),)


class TestCovering:
    def test_subset_covering(self):
        t = parse_sensitivity("obj:1.0")
        a, b = AbsAddr(1, (), "object"), AbsAddr(2, (), "object")
        assert t.element_covers(frozenset({a, b}), frozenset({a}))
        assert not t.element_covers(frozenset({a}), frozenset({a, b}))
        s = parse_sensitivity("sig:1.0")
        assert s.element_covers((1, frozenset({"num", "str"})), (1, frozenset({"num"})))
        assert not s.element_covers((1, frozenset({"num"})), (2, frozenset({"num"})))

    def test_address_covering_checks_site_and_tag(self):
        t = parse_sensitivity("stack:2.1")
        assert t.addr_covers(AbsAddr(4, (9,), "object"), AbsAddr(4, (9,), "object"))
        assert not t.addr_covers(AbsAddr(4, (9,), "object"), AbsAddr(4, (8,), "object"))
        assert not t.addr_covers(AbsAddr(4, (9,), "array"), AbsAddr(4, (9,), "object"))


class TestPluggableStrategy:
    """A strategy defined outside the package runs through both interpreters unchanged."""

    def test_interpreters_name_no_strategy(self):
        for module in (absem, concrete, engine):
            source = inspect.getsource(module)
            for name in ("StackCFATrace", "AcyclicCFATrace", "ObjTrace", "SigTrace",
                         "MixedTrace"):
                assert name not in source, f"{module.__name__} refers to {name}"

    def test_parity_strategy_is_sound(self):
        program = load_program(CORPUS_DIR / "recursion.njs")
        report = engine.soundness_check(program, ParityTrace(h=1))
        assert report.ok, report.describe()
        assert report.strategy == "parity:0.1"
        result = engine.analyze(program, ParityTrace(h=1))
        contexts = {context for _, context in result.partition}
        assert contexts == {(), (0,), (1,)}
