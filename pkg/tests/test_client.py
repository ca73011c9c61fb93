"""Tests for the error-reporting client."""

import json

import pytest

from notjsAbsInt.cli import CORPUS_DIR, load_program
from notjsAbsInt.client import (ARRAY_LENGTH, CALL_NON_FUNCTION, PROP_ON_NULL_UNDEF,
                                IncompleteResult, format_json, format_text, report_errors)
from notjsAbsInt.engine import AnalysisLimits, LimitExceeded, analyze
from notjsAbsInt.ir import AssignProp, Call, iter_nodes, parse_program

CORPUS = sorted(p.stem for p in CORPUS_DIR.glob("*.njs"))


def corpus(name):
    return load_program(CORPUS_DIR / f"{name}.njs")


def errors(program, sensitivity="fs"):
    return report_errors(program, analyze(program, sensitivity))


class TestReportErrors:
    """Test class for the statements each error kind is reported at."""

    def test_clean_program(self):
        report = errors(corpus("straight_line"))
        assert report.entries == frozenset() and report.eval_warnings == frozenset()
        assert report.counts["total"] == 0

    def test_call_and_property_errors(self):
        program = corpus("type_errors")
        report = errors(program)
        (call,) = [n for n in iter_nodes(program) if isinstance(n, Call) and n.var == "r"]
        (write,) = [n for n in iter_nodes(program) if isinstance(n, AssignProp)
                    and getattr(n.obj, "name", None) == "u"]
        assert report.nodes(CALL_NON_FUNCTION) == frozenset({call.nid})
        assert report.nodes(PROP_ON_NULL_UNDEF) == frozenset({write.nid})
        assert report.counts == {CALL_NON_FUNCTION: 1, PROP_ON_NULL_UNDEF: 1, ARRAY_LENGTH: 0,
                                 "total": 2, "sites": 2}

    def test_array_length_error(self):
        program = corpus("range_error")
        report = errors(program)
        (write,) = [n for n in iter_nodes(program) if isinstance(n, AssignProp)]
        assert report.sorted_entries() == [(write.nid, ARRAY_LENGTH)]

    def test_eval_warning(self):
        program = corpus("eval_call")
        report = errors(program)
        (call,) = [n for n in iter_nodes(program) if isinstance(n, Call)]
        assert report.eval_warnings == frozenset({call.nid})
        assert report.entries == frozenset()

    def test_read_of_undefined_is_reported(self):
        program = parse_program('(decl ((u undef) (r 1)) (:= r (. u "p")))')
        assert errors(program).nodes() == frozenset({1})

    def test_context_sensitivity_removes_spurious_error(self):
        program = corpus("identity")
        flat = errors(program, "fs")
        deep = errors(program, "stack:2.1")
        assert flat.counts[CALL_NON_FUNCTION] == 1
        assert deep.counts[CALL_NON_FUNCTION] == 0
        assert deep.entries < flat.entries

    @pytest.mark.parametrize("name", CORPUS)
    def test_deeper_call_strings_report_fewer_errors(self, name):
        program = corpus(name)
        chain = [errors(program, s).entries for s in ("fs", "stack:1.0", "stack:2.1", "stack:3.2")]
        for coarse, fine in zip(chain, chain[1:]):
            assert fine <= coarse, f"{name}: {sorted(fine - coarse)} only in the finer report"

    @pytest.mark.parametrize("name", CORPUS)
    @pytest.mark.parametrize("sensitivity", ("acyclic:1", "obj:1.0", "sig:1.0", "mixed:2.1"))
    def test_every_sensitivity_refines_fs(self, name, sensitivity):
        program = corpus(name)
        fine = errors(program, sensitivity).entries
        assert fine <= errors(program, "fs").entries, f"{name} under {sensitivity}"

    def test_some_program_separates_call_strings_from_fs(self):
        fewer = [name for name in CORPUS
                 if len(errors(corpus(name), "stack:2.1").entries)
                 < len(errors(corpus(name), "fs").entries)]
        assert "identity" in fewer

    def test_incomplete_result_is_refused(self):
        program = corpus("recursion")
        with pytest.raises(LimitExceeded) as err:
            analyze(program, limits=AnalysisLimits(max_iterations=3))
        with pytest.raises(IncompleteResult):
            report_errors(program, err.value.result)


class TestFormats:
    def setup_method(self):
        self.program = corpus("type_errors")
        self.result = analyze(self.program, "stack:1.0")
        self.report = report_errors(self.program, self.result)

    def test_json(self):
        data = json.loads(format_json(self.report, "type_errors.njs", self.result, timing=False))
        assert data["program"] == "type_errors.njs"
        assert data["sensitivity"] == "stack:1.0"
        assert data["stats"]["millis"] == 0
        assert data["counts"]["total"] == 2 and data["counts"]["evalWarning"] == 0
        assert [e["kind"] for e in data["entries"]] == [CALL_NON_FUNCTION, PROP_ON_NULL_UNDEF]

    def test_text(self):
        lines = format_text(self.report, "type_errors.njs", self.result).splitlines()
        assert len(lines) == 3
        assert lines[0].startswith("node:") and lines[0].endswith(CALL_NON_FUNCTION)
        assert lines[-1].startswith("type_errors.njs: 2 errors at 2 sites")
