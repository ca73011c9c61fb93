"""Tests for the notJS reader, printer and validator."""

import pytest

from notjsAbsInt.cli import CORPUS_DIR, load_program
from notjsAbsInt.ir import (Break, Decl, Meth, NewFun, ParseError, Seq, count_nodes, iter_nodes,
                            parse_program, pretty, validate)


class TestParse:
    """Test class for parse_program and node numbering."""

    def test_nodes_numbered_in_preorder(self):
        program = parse_program("(decl ((x 1)) (seq (:= x 2) (if x (:= x 3))))")
        nids = [n.nid for n in iter_nodes(program)]
        assert nids == list(range(len(nids))), f"expected pre-order ids, got {nids}"
        assert isinstance(program, Decl) and program.nid == 0
        assert isinstance(program.body, Seq) and program.body.nid == 1

    def test_method_body_may_be_a_decl(self):
        program = parse_program(
            "(decl ((f undef)) (newfun f (fun (self args) (decl ((t 1)) (:= t 2))) 0))")
        (fun,) = [n for n in iter_nodes(program) if isinstance(n, NewFun)]
        assert isinstance(fun.meth, Meth) and isinstance(fun.meth.body, Decl)

    def test_comments_and_special_numbers(self):
        program = parse_program("; header\n(decl ((x nan) (y -inf)) (seq)) ; trailer")
        assert pretty(program) == "(decl ((x nan) (y -inf)) (seq))"

    def test_error_position(self):
        with pytest.raises(ParseError) as err:
            parse_program("(decl ()\n  (seq (bogus)))")
        assert err.value.line == 2, f"error should be on line 2, got {err.value.line}"

    @pytest.mark.parametrize("text", [
        "",
        "(decl () (seq)) (decl () (seq))",
        "(decl ((x 1)) (:= x",
        "(decl () (:= 1 2))",
        '(decl () (throw "unterminated))',
    ])
    def test_malformed_input(self, text):
        with pytest.raises(ParseError):
            parse_program(text)

    @pytest.mark.parametrize("path", sorted(CORPUS_DIR.glob("*.njs")), ids=lambda p: p.stem)
    def test_pretty_reads_back(self, path):
        program = load_program(path)
        assert parse_program(pretty(program)) == program
        assert count_nodes(program) > 3


class TestValidate:
    """Test class for scoping, label and binding checks."""

    def test_well_formed_program(self):
        program = parse_program("(decl ((x 1)) (label l (seq (break l x))))")
        assert validate(program) == []

    def test_unbound_variable(self):
        diagnostics = validate(parse_program("(decl ((x 1)) (:= y x))"))
        assert [d.kind for d in diagnostics] == ["unbound-variable"]
        assert diagnostics[0].nid == 1

    def test_duplicate_binding(self):
        diagnostics = validate(parse_program("(decl ((x 1) (x 2)) (seq))"))
        assert [d.kind for d in diagnostics] == ["duplicate-binding"]

    def test_labels_do_not_cross_methods(self):
        program = parse_program(
            "(decl ((f undef)) (label out (newfun f (fun (self args) (break out 1)) 0)))")
        diagnostics = validate(program)
        (brk,) = [n for n in iter_nodes(program) if isinstance(n, Break)]
        assert [(d.kind, d.nid) for d in diagnostics] == [("unbound-label", brk.nid)]

    def test_catch_variable_scoped_to_catch_block(self):
        ok = parse_program("(decl ((r 0)) (try (throw 1) e (:= r e) (seq)))")
        bad = parse_program("(decl ((r 0)) (try (throw 1) e (seq) (:= r e)))")
        assert validate(ok) == []
        assert [d.kind for d in validate(bad)] == ["unbound-variable"]

    def test_global_is_always_bound(self):
        program = parse_program(
            '(decl ((f undef)) (newfun f (fun (self args) (:= self (. global "Object"))) 0))')
        assert validate(program) == []
