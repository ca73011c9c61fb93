"""Tests for the fixpoint engine, the soundness harness and witness minimisation."""

import io
import json
from dataclasses import dataclass
from typing import ClassVar

import pytest

from notjsAbsInt.absem import AbstractMachine
from notjsAbsInt.cli import CORPUS_DIR, load_program
from notjsAbsInt.concrete import run
from notjsAbsInt.domains import NUM_TOP, BValue, bv_num
from notjsAbsInt.engine import (AnalysisLimits, LimitExceeded, analyze, dump_partition,
                                generate_program, soundness_check, verify_fixpoint)
from notjsAbsInt.ir import While, count_nodes, iter_nodes, parse_program, validate
from notjsAbsInt.sensitivity import StackCFATrace

CORPUS = sorted(p.stem for p in CORPUS_DIR.glob("*.njs"))
SENSITIVITIES = ("fs", "stack:1.0", "stack:2.1", "acyclic:1", "obj:1.0", "sig:1.0", "mixed:2.1")
NUM_TOP_BV = BValue(num=NUM_TOP)


def corpus(name):
    return load_program(CORPUS_DIR / f"{name}.njs")


@dataclass(frozen=True)
class NeverCovers(StackCFATrace):
    """A broken strategy whose non-empty contexts never cover each other."""

    kind: ClassVar[str] = "never"

    def element_covers(self, abstract, concrete):
        return False


class TestAnalyze:
    """Test class for analyze and its limits."""

    def test_result_is_a_fixpoint(self):
        result = analyze(corpus("closures"), "stack:2.1")
        assert result.complete
        assert verify_fixpoint(result) == []
        assert result.stats.partitions == len(result.partition)
        assert result.stats.iterations >= result.stats.partitions

    def test_worklist_order_reaches_same_points(self):
        program = corpus("labels")
        fifo = analyze(program, limits=AnalysisLimits(worklist="fifo"))
        lifo = analyze(program, limits=AnalysisLimits(worklist="lifo"))
        assert fifo.points() == lifo.points()

    @pytest.mark.parametrize("name", CORPUS)
    @pytest.mark.parametrize("sensitivity", ("fs", "stack:2.1", "obj:1.0"))
    def test_worklist_order_reaches_same_partition(self, name, sensitivity):
        program = corpus(name)
        fifo = analyze(program, sensitivity, AnalysisLimits(worklist="fifo")).partition
        lifo = analyze(program, sensitivity, AnalysisLimits(worklist="lifo")).partition
        assert set(fifo) == set(lifo), f"{name}: partition keys differ"
        for key, state in fifo.items():
            assert state.leq(lifo[key]) and lifo[key].leq(state), f"{name}: {key} differs"

    def test_debug_checks_monotone_growth(self):
        result = analyze(corpus("recursion"), limits=AnalysisLimits(debug=True))
        assert result.complete

    def test_iteration_limit(self):
        with pytest.raises(LimitExceeded) as err:
            analyze(corpus("recursion"), limits=AnalysisLimits(max_iterations=5))
        assert not err.value.result.complete
        assert err.value.result.stats.iterations == 5

    @pytest.mark.parametrize("kwargs", [{"max_iterations": 0}, {"wall_clock": -1.0},
                                        {"worklist": "random"}])
    def test_bad_limits(self, kwargs):
        with pytest.raises(AssertionError):
            AnalysisLimits(**kwargs)

    def test_eval_warning(self):
        result = analyze(corpus("eval_call"))
        assert len(result.warnings) == 1
        ((kind, _),) = result.warnings
        assert kind == "eval"

    def test_dump_partition(self):
        result = analyze(corpus("straight_line"))
        fp = io.StringIO()
        n = dump_partition(result, fp)
        lines = fp.getvalue().splitlines()
        assert n == len(lines) == result.stats.partitions
        record = json.loads(lines[0])
        assert set(record) == {"key", "point", "context", "store_size", "term"}


class TestSoundness:
    """Every concrete state is covered by the abstract partition."""

    @pytest.mark.parametrize("name", CORPUS)
    @pytest.mark.parametrize("sensitivity", SENSITIVITIES)
    def test_corpus(self, name, sensitivity):
        report = soundness_check(corpus(name), sensitivity)
        assert report.ok, report.describe()
        assert report.checked == len(report.outcome.states)

    @pytest.mark.parametrize("seed", range(8))
    def test_generated_programs(self, seed):
        program = generate_program(seed, size=40)
        for sensitivity in ("fs", "stack:2.1", "obj:1.0"):
            report = soundness_check(program, sensitivity)
            assert report.ok, f"seed {seed}: {report.describe()}"

    @pytest.mark.parametrize("seed", (3, 7, 11, 19))
    def test_generated_programs_at_default_size(self, seed):
        program = generate_program(seed)
        for sensitivity in ("fs", "stack:1.0"):
            report = soundness_check(program, sensitivity)
            assert report.ok, f"seed {seed}: {report.describe()}"

    def test_describe(self):
        report = soundness_check(corpus("straight_line"), "fs")
        assert report.describe() == f"fs: {report.checked} states checked, 0 violations"

    def test_broken_strategy_is_caught_and_minimized(self):
        program = corpus("closures")
        report = soundness_check(program, NeverCovers(k=1), minimize=True)
        assert not report.ok
        assert report.violation.reason == "no partition covers the trace"
        assert "1 violation at step" in report.describe()
        witness = report.witness
        assert witness is not None and validate(witness) == []
        assert count_nodes(witness) < count_nodes(program)
        assert not soundness_check(witness, NeverCovers(k=1)).ok


class TestFixpointShape:
    """Partition sizes and loop convergence on small programs."""

    def test_flow_sensitive_straight_line_has_one_state_per_point(self):
        program = corpus("straight_line")
        result = analyze(program, "fs")
        reached = {s.trace.point for s in run(program, record_states=True).states}
        assert all(context == () for _, context in result.partition)
        assert result.points() == frozenset(reached)
        assert result.stats.partitions == len(reached)

    def test_empty_program_reaches_entry_and_halt(self):
        result = analyze(parse_program("(decl () (seq))"), "fs")
        assert len(result.final_states()) == 1
        assert result.stats.partitions == len(result.points())

    def test_loop_head_converges_in_three_visits(self, monkeypatch):
        program = parse_program("(decl ((x 0)) (while (< x 3) (:= x (+ x 1))))")
        (loop,) = [n for n in iter_nodes(program) if isinstance(n, While)]
        visits = []
        next_states = AbstractMachine.next_states

        def counting(machine, state):
            if isinstance(state.term, While) and state.term.nid == loop.nid:
                visits.append(state.store.read(state.env["x"]))
            return next_states(machine, state)

        monkeypatch.setattr(AbstractMachine, "next_states", counting)
        assert analyze(program, "fs").complete
        assert 1 <= len(visits) <= 3
        assert visits[0] == bv_num(0.0) and visits[-1] == NUM_TOP_BV
