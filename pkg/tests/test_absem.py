"""Tests for the abstract machine: expression transformers and single transitions."""

from hypothesis import given, settings
from hypothesis import strategies as st

from notjsAbsInt.absem import EV, HALT, AbstractMachine, aeval_exp, typeof
from notjsAbsInt.cli import CORPUS_DIR, load_program
from notjsAbsInt.concrete import eval_exp
from notjsAbsInt.domains import (EMPTY_ENV, NULL_BV, NUM_TOP, AbsAddr, AbsStore, FrozenMap, alpha,
                                 bv_num, bv_str, str_member)
from notjsAbsInt.engine import analyze
from notjsAbsInt.ir import (BINOPS, UNOPS, AssignVar, BinOp, BoolLit, NewFun, NullLit, NumLit,
                            StrLit, UndefLit, UnOp, Var, iter_nodes, parse_program)

# operators that need a heap are exercised by the machine tests
PURE_BINOPS = sorted(BINOPS - {".", "instanceof", "in"})

literals = st.one_of(
    st.floats().map(NumLit),
    st.booleans().map(BoolLit),
    st.text(alphabet="ab01.-", max_size=3).map(StrLit),
    st.sampled_from([UndefLit(), NullLit(), StrLit("length"), StrLit("NaN")]),
)
expressions = st.recursive(
    literals,
    lambda sub: st.one_of(
        st.builds(BinOp, st.sampled_from(PURE_BINOPS), sub, sub),
        st.builds(UnOp, st.sampled_from(sorted(UNOPS)), sub),
    ),
    max_leaves=6,
)
# expressions reading the variable x
open_expressions = st.recursive(
    st.one_of(literals, st.just(Var("x"))),
    lambda sub: st.one_of(
        st.builds(BinOp, st.sampled_from(PURE_BINOPS), sub, sub),
        st.builds(UnOp, st.sampled_from(sorted(UNOPS)), sub),
    ),
    max_leaves=6,
)


class TestExpressionTransformers:
    """The abstract value of an expression covers its concrete value."""

    @settings(max_examples=300, deadline=None)
    @given(expressions)
    def test_covers_concrete_value(self, e):
        concrete = eval_exp(e, {}, {})
        abstract = aeval_exp(e, EMPTY_ENV, AbsStore())
        assert alpha(concrete).leq(abstract), f"{e!r}: {concrete!r} not in {abstract!r}"

    @settings(max_examples=300, deadline=None)
    @given(open_expressions, literals, literals)
    def test_monotone_in_the_store(self, e, lit1, lit2):
        cell = AbsAddr(1, (), "var:x")
        env = EMPTY_ENV.set("x", frozenset({cell}))
        small = alpha(eval_exp(lit1, {}, {}))
        large = small.join(alpha(eval_exp(lit2, {}, {})))
        low = aeval_exp(e, env, AbsStore().alloc(cell, small))
        high = aeval_exp(e, env, AbsStore().alloc(cell, large))
        assert low.leq(high), f"{e!r}: {low!r} not below {high!r}"

    def test_constants_fold_exactly(self):
        e = BinOp("++", StrLit("n="), UnOp("tostr", BinOp("*", NumLit(6.0), NumLit(7.0))))
        assert aeval_exp(e, EMPTY_ENV, AbsStore()) == bv_str("n=42")

    def test_typeof_of_a_join(self):
        v = typeof(bv_num(1.0).join(NULL_BV), AbsStore())
        assert str_member(v.string, "number") and str_member(v.string, "object")
        assert not str_member(v.string, "string")


class TestMachine:
    """Test class for initial states and transitions of AbstractMachine."""

    def setup_method(self):
        self.closures = load_program(CORPUS_DIR / "closures.njs")

    def test_initial_state(self):
        state = AbstractMachine(self.closures).initial_state("stack:1.0")
        assert state.kont is HALT and state.term is self.closures
        assert set(state.env) == {"global"}
        assert state.trace.context == ()
        assert len(state.store.entries) > 10

    def test_unknown_guard_takes_both_branches(self):
        program = parse_program(
            "(decl ((x 0) (y 0)) (seq (while (< x 3) (:= x (+ x 1)))"
            " (if (=== x 3) (:= y 1) (:= y 2))))")
        result = analyze(program)
        then, orelse = [n for n in iter_nodes(program)
                        if isinstance(n, AssignVar) and n.var == "y"]
        assert result.states_at(then.nid) and result.states_at(orelse.nid)
        (final,) = result.final_states()
        assert final.term.value.num == NUM_TOP

    def test_call_on_number_throws_type_error(self):
        result = analyze(parse_program("(decl ((x 1)) (call x x x x))"))
        (final,) = result.final_states()
        assert isinstance(final.term, EV)
        (addr,) = final.term.value.addrs
        assert final.store.obj(addr).get("name") == bv_str("TypeError")

    def test_return_frames_are_stored_per_call_site(self):
        result = analyze(self.closures)
        (inc,) = [n for n in iter_nodes(self.closures) if isinstance(n, NewFun) and n.var == "inc"]
        (final,) = result.final_states()
        konts = [v for a, v in final.store.entries.items()
                 if a.tag == "kont" and a.site == inc.meth.nid]
        assert len(konts) == 1 and isinstance(konts[0], FrozenMap)
        assert len({nid for nid, _ in konts[0]}) == 3, "inc is called from three sites"

    def test_builtin_constructor_result_admits_strong_updates(self):
        program = parse_program(
            '(decl ((o undef) (r undef)) (seq (newcall o (. global "Object") undef)'
            ' (.:= o "a" 1) (.:= o "a" 2) (:= r (. o "a"))))')
        (final,) = analyze(program).final_states()
        assert final.term.value == bv_num(2.0)
